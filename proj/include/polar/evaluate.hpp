#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "polar/corpus.hpp"

namespace polar {

struct PrfCounts {
  long matched = 0;
  long predicted = 0;
  long gold = 0;

  double precision() const { return predicted > 0 ? static_cast<double>(matched) / predicted : 0.0; }
  double recall() const { return gold > 0 ? static_cast<double>(matched) / gold : 0.0; }
  double f1() const {
    double p = precision(), r = recall();
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
};

// Span-level exact match; cross means the span's utterance differs from the
// predicate's. Distance buckets count arguments crossing 1, 2, and 3+
// utterances, with error rate defined as the miss rate 1 - recall.
struct EvalReport {
  PrfCounts all, cross, intra;
  std::array<long, 3> distance_gold{{0, 0, 0}};
  std::array<long, 3> distance_matched{{0, 0, 0}};

  double error_rate(int bucket) const {
    if (distance_gold[static_cast<size_t>(bucket)] == 0) return 0.0;
    return 1.0 - static_cast<double>(distance_matched[static_cast<size_t>(bucket)]) /
                     static_cast<double>(distance_gold[static_cast<size_t>(bucket)]);
  }
};

namespace detail {

inline std::tuple<std::string, int, int, int> span_key(const RoleSpan& s) {
  return {s.role, s.utt, s.start, s.end};
}

inline std::vector<RoleSpan> sorted_spans(std::vector<RoleSpan> spans) {
  std::sort(spans.begin(), spans.end(),
            [](const RoleSpan& a, const RoleSpan& b) { return span_key(a) < span_key(b); });
  return spans;
}

}  // namespace detail

inline EvalReport evaluate(const std::vector<Prediction>& predictions, const Corpus& gold) {
  std::unordered_map<std::string, const Dialogue*> by_id;
  for (const Dialogue& d : gold.dialogues) by_id[d.dialogue_id] = &d;
  std::unordered_map<std::string, int> seen;

  EvalReport rep;
  for (const Prediction& pred : predictions) {
    auto it = by_id.find(pred.dialogue_id);
    if (it == by_id.end())
      throw std::invalid_argument("evaluate: prediction for unknown dialogue '" + pred.dialogue_id + "'");
    if (++seen[pred.dialogue_id] > 1)
      throw std::invalid_argument("evaluate: duplicate prediction for dialogue '" + pred.dialogue_id + "'");
    const Dialogue& d = *it->second;

    auto bucket = [&](const RoleSpan& s) {
      int dist = s.utt < d.predicate_utt ? d.predicate_utt - s.utt : s.utt - d.predicate_utt;
      return std::min(dist, 3) - 1;
    };
    std::vector<RoleSpan> p = detail::sorted_spans(pred.roles);
    std::vector<RoleSpan> g = detail::sorted_spans(d.roles);
    for (const RoleSpan& s : p) {
      ++rep.all.predicted;
      ++(s.utt == d.predicate_utt ? rep.intra : rep.cross).predicted;
    }
    for (const RoleSpan& s : g) {
      ++rep.all.gold;
      if (s.utt == d.predicate_utt) {
        ++rep.intra.gold;
      } else {
        ++rep.cross.gold;
        ++rep.distance_gold[static_cast<size_t>(bucket(s))];
      }
    }
    size_t i = 0, j = 0;
    while (i < p.size() && j < g.size()) {
      auto kp = detail::span_key(p[i]), kg = detail::span_key(g[j]);
      if (kp < kg) {
        ++i;
      } else if (kg < kp) {
        ++j;
      } else {
        ++rep.all.matched;
        if (p[i].utt == d.predicate_utt) {
          ++rep.intra.matched;
        } else {
          ++rep.cross.matched;
          ++rep.distance_matched[static_cast<size_t>(bucket(p[i]))];
        }
        ++i;
        ++j;
      }
    }
  }
  if (static_cast<int>(seen.size()) != gold.size()) {
    for (const Dialogue& d : gold.dialogues)
      if (!seen.count(d.dialogue_id))
        throw std::invalid_argument("evaluate: no prediction for dialogue '" + d.dialogue_id + "'");
  }
  return rep;
}

inline nlohmann::json eval_report_json(const EvalReport& r) {
  auto counts = [](const PrfCounts& c) {
    return nlohmann::json{{"precision", c.precision()}, {"recall", c.recall()}, {"f1", c.f1()},
                          {"matched", c.matched},       {"predicted", c.predicted}, {"gold", c.gold}};
  };
  nlohmann::json dist = nlohmann::json::array();
  for (int b = 0; b < 3; ++b)
    dist.push_back({{"crossed", b == 2 ? "3+" : std::to_string(b + 1)},
                    {"gold", r.distance_gold[static_cast<size_t>(b)]},
                    {"matched", r.distance_matched[static_cast<size_t>(b)]},
                    {"error_rate", r.error_rate(b)}});
  return {{"all", counts(r.all)}, {"cross", counts(r.cross)}, {"intra", counts(r.intra)},
          {"distance", dist}};
}

inline std::string eval_report_text(const EvalReport& r) {
  char buf[160];
  std::string out = "          P        R       F1     gold\n";
  auto row = [&](const char* name, const PrfCounts& c) {
    std::snprintf(buf, sizeof(buf), "%-6s %6.4f   %6.4f   %6.4f   %6ld\n", name, c.precision(),
                  c.recall(), c.f1(), c.gold);
    out += buf;
  };
  row("all", r.all);
  row("cross", r.cross);
  row("intra", r.intra);
  out += "error rate by crossed distance (1 - recall):\n";
  const char* names[3] = {"1 utterance ", "2 utterances", "3+ utterances"};
  for (int b = 0; b < 3; ++b) {
    std::snprintf(buf, sizeof(buf), "  %-13s %6.4f   (gold %ld)\n", names[b], r.error_rate(b),
                  r.distance_gold[static_cast<size_t>(b)]);
    out += buf;
  }
  return out;
}

}  // namespace polar
