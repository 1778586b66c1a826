#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "polar/corpus.hpp"
#include "polar/rng.hpp"

namespace polar {

// Templated dialogues where cue words tie argument spans to the predicate's
// lexical class: span detection requires matching the cue against the verb,
// and decoy spans of other classes punish ignoring the predicate. Duplicate
// decoys repeat an argument's exact surface farther from the predicate, so
// among identical candidates only the nearest one is the argument.
struct GeneratorConfig {
  int dialogues = 2000;
  int min_utterances = 2;
  int max_utterances = 6;
  int min_background = 3;  // background words per utterance
  int max_background = 6;
  int vocab_size = 200;
  int role_count = 2;
  int predicate_classes = 3;
  int verbs_per_class = 2;
  double cross_fraction = 0.4;
  std::array<double, 3> cross_distance = {0.6, 0.3, 0.1};  // 1 / 2 / 3+ utterances back
  double pronoun_rate = 0.7;
  double decoy_rate = 0.5;
  double duplicate_rate = 1.0;  // chance per argument of an identical farther copy
  int background_types = 6;     // distinct background words drawn per dialogue
  int num_fillers = 10;

  int reserved_tokens() const {
    return predicate_classes * verbs_per_class + role_count * predicate_classes + num_fillers + 2;
  }
  int background_pool() const { return vocab_size - reserved_tokens() - 3; }  // speakers + <unk>

  void validate() const {
    if (dialogues <= 0) throw std::invalid_argument("generator: dialogue count must be positive");
    if (min_utterances < 2 || max_utterances < min_utterances)
      throw std::invalid_argument("generator: need 2 <= min_utterances <= max_utterances");
    if (min_background < 1 || max_background < min_background)
      throw std::invalid_argument("generator: invalid background word range");
    if (role_count < 1 || role_count > 6) throw std::invalid_argument("generator: role count must be 1..6");
    if (predicate_classes < 2 || verbs_per_class < 1 || num_fillers < 1)
      throw std::invalid_argument("generator: need at least two predicate classes and one verb/filler");
    if (cross_fraction < 0.0 || cross_fraction > 1.0 || pronoun_rate < 0.0 || pronoun_rate > 1.0 ||
        decoy_rate < 0.0 || decoy_rate > 1.0 || duplicate_rate < 0.0 || duplicate_rate > 1.0)
      throw std::invalid_argument("generator: rates must lie in [0,1]");
    double s = cross_distance[0] + cross_distance[1] + cross_distance[2];
    for (double w : cross_distance)
      if (w < 0.0) throw std::invalid_argument("generator: negative distance weight");
    if (std::fabs(s - 1.0) > 1e-9)
      throw std::invalid_argument("generator: cross-distance weights must sum to 1");
    if (background_pool() < 10)
      throw std::invalid_argument("generator: vocab_size " + std::to_string(vocab_size) +
                                  " too small for " + std::to_string(reserved_tokens()) +
                                  " reserved tokens plus a background pool");
    if (background_types < 1 || background_types > background_pool())
      throw std::invalid_argument("generator: background_types must lie in [1, background pool]");
  }

  std::string verb(int cls, int j) const { return "v" + std::to_string(cls) + "_" + std::to_string(j); }
  std::string cue(int role, int cls) const {
    return "arg" + std::to_string(role) + "c" + std::to_string(cls);
  }
  std::string filler(int j) const { return "ent" + std::to_string(j); }
  std::string background(int j) const { return "w" + std::to_string(j); }
  std::string role_name(int r) const { return "A" + std::to_string(r); }
};

namespace detail {

struct Atom {
  std::vector<std::string> tokens;
  int span_role = -1;       // labeled span when >= 0
  bool is_predicate = false;
  int pronoun_referent = -1;
};

inline int sample_distance(const std::array<double, 3>& w, Rng& rng) {
  double u = rng.uniform();
  if (u < w[0]) return 1;
  if (u < w[0] + w[1]) return 2;
  return 3;
}

// Checks the nearest-occurrence rule in node coordinates: every word equal to
// an argument's cue token must sit strictly farther from the predicate.
inline bool nearest_occurrence_holds(const Dialogue& d) {
  std::vector<int> base(d.utterances.size());
  int pos = 0;
  for (size_t u = 0; u < d.utterances.size(); ++u) {
    base[u] = pos + 1;  // speaker node precedes the words
    pos += 1 + static_cast<int>(d.utterances[u].tokens.size());
  }
  int prd = base[static_cast<size_t>(d.predicate_utt)] + d.predicate_idx;
  for (const RoleSpan& s : d.roles) {
    const std::string& cue = d.utterances[static_cast<size_t>(s.utt)].tokens[static_cast<size_t>(s.start)];
    int dist = std::abs(base[static_cast<size_t>(s.utt)] + s.start - prd);
    for (size_t u = 0; u < d.utterances.size(); ++u)
      for (size_t t = 0; t < d.utterances[u].tokens.size(); ++t) {
        int m = base[u] + static_cast<int>(t);
        if (m == base[static_cast<size_t>(s.utt)] + s.start || d.utterances[u].tokens[t] != cue) continue;
        if (std::abs(m - prd) <= dist) return false;
      }
  }
  return true;
}

}  // namespace detail

inline Dialogue assemble_dialogue(const GeneratorConfig& cfg, const std::string& id, Rng& rng,
                                  bool with_duplicates) {
  int U = cfg.min_utterances + rng.below(cfg.max_utterances - cfg.min_utterances + 1);
  int first_speaker = 1 + rng.below(2);
  int cls = rng.below(cfg.predicate_classes);

  // Background words come from a small per-dialogue subset, so the same
  // surface recurs across utterances and raw content similarity carries
  // little signal about structure.
  std::vector<int> bg_subset(static_cast<size_t>(cfg.background_types));
  for (int& b : bg_subset) b = static_cast<int>(rng.below(static_cast<uint64_t>(cfg.background_pool())));

  // one atom list per utterance, assembled in a deterministic draw order
  std::vector<std::vector<detail::Atom>> atoms(U);
  for (int t = 0; t < U; ++t) {
    int n_bg = cfg.min_background + rng.below(cfg.max_background - cfg.min_background + 1);
    for (int j = 0; j < n_bg; ++j) {
      int b = bg_subset[rng.below(bg_subset.size())];
      atoms[t].push_back({{cfg.background(b)}, -1, false, -1});
    }
  }
  atoms[U - 1].push_back({{cfg.verb(cls, rng.below(cfg.verbs_per_class))}, -1, true, -1});

  auto make_span = [&](int role, int span_cls) {
    detail::Atom a;
    a.tokens.push_back(cfg.cue(role, span_cls));
    if (rng.below(2) == 1) a.tokens.push_back(cfg.filler(rng.below(cfg.num_fillers)));
    return a;
  };
  std::vector<int> arg_utt(static_cast<size_t>(cfg.role_count));
  std::vector<std::vector<std::string>> arg_tokens(static_cast<size_t>(cfg.role_count));
  for (int r = 0; r < cfg.role_count; ++r) {
    int utt = U - 1;
    if (rng.uniform() < cfg.cross_fraction) {
      int d = detail::sample_distance(cfg.cross_distance, rng);
      utt = std::max(0, U - 1 - d);
    }
    detail::Atom a = make_span(r, cls);
    a.span_role = r;
    arg_utt[static_cast<size_t>(r)] = utt;
    arg_tokens[static_cast<size_t>(r)] = a.tokens;
    atoms[utt].push_back(std::move(a));
  }
  if (rng.uniform() < cfg.decoy_rate) {
    int other = (cls + 1 + rng.below(cfg.predicate_classes - 1)) % cfg.predicate_classes;
    atoms[rng.below(U)].push_back(make_span(rng.below(cfg.role_count), other));
  }
  if (with_duplicates) {
    for (int r = 0; r < cfg.role_count; ++r) {
      int g = arg_utt[static_cast<size_t>(r)];
      if (g == 0 || rng.uniform() >= cfg.duplicate_rate) continue;
      detail::Atom a;
      a.tokens = arg_tokens[static_cast<size_t>(r)];  // surface-identical copy, earlier utterance
      atoms[rng.below(g)].push_back(std::move(a));
    }
  }
  for (int t = 0; t < U; ++t) {
    if (rng.uniform() >= cfg.pronoun_rate) continue;
    int speaker = 1 + (first_speaker - 1 + t) % 2;
    detail::Atom a;
    if (rng.below(2) == 0) {
      a.tokens = {"i"};
      a.pronoun_referent = speaker;
    } else {
      a.tokens = {"you"};
      a.pronoun_referent = 3 - speaker;
    }
    atoms[t].push_back(std::move(a));
  }

  Dialogue d;
  d.dialogue_id = id;
  for (int t = 0; t < U; ++t) {
    rng.shuffle(atoms[t]);
    Utterance u;
    u.speaker = 1 + (first_speaker - 1 + t) % 2;
    for (const detail::Atom& a : atoms[t]) {
      int start = static_cast<int>(u.tokens.size());
      for (const std::string& tok : a.tokens) u.tokens.push_back(tok);
      int end = static_cast<int>(u.tokens.size()) - 1;
      if (a.span_role >= 0) d.roles.push_back({cfg.role_name(a.span_role), t, start, end});
      if (a.is_predicate) {
        d.predicate_utt = t;
        d.predicate_idx = start;
      }
      if (a.pronoun_referent >= 0) d.pronouns.push_back({t, start, a.pronoun_referent});
    }
    d.utterances.push_back(std::move(u));
  }
  return d;
}

inline Dialogue gen_dialogue(const GeneratorConfig& cfg, const std::string& id, Rng& rng) {
  // Shuffles can break the nearest-occurrence rule when an argument sits in
  // the predicate's utterance; redraw, and drop the duplicates if geometry
  // keeps refusing. A build without duplicates always satisfies the rule.
  for (int attempt = 0; attempt < 64; ++attempt) {
    Dialogue d = assemble_dialogue(cfg, id, rng, attempt < 48);
    if (detail::nearest_occurrence_holds(d)) return d;
  }
  throw std::logic_error("gen_dialogue: could not place spans for " + id);
}

inline Corpus gen_synthetic(const GeneratorConfig& cfg, unsigned long long seed) {
  cfg.validate();
  Rng rng(seed);
  Corpus corpus;
  for (int r = 0; r < cfg.role_count; ++r) corpus.roles.push_back(cfg.role_name(r));
  corpus.num_speakers = 3;  // ids 1 and 2, zero unused
  for (int i = 0; i < cfg.dialogues; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "d%05d", i);
    corpus.dialogues.push_back(gen_dialogue(cfg, id, rng));
  }
  return corpus;
}

}  // namespace polar
