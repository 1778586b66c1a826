#pragma once

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "polar/dialogue.hpp"

namespace polar {

struct Corpus {
  std::vector<Dialogue> dialogues;
  std::vector<std::string> roles;
  int num_speakers = 0;

  int size() const { return static_cast<int>(dialogues.size()); }
};

// Predicted argument spans for one dialogue, aligned to gold by id.
struct Prediction {
  std::string dialogue_id;
  std::vector<RoleSpan> roles;
};

namespace detail {

inline std::runtime_error corpus_error(const std::string& path, int line, const std::string& what) {
  return std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

inline nlohmann::json span_to_json(const RoleSpan& s) {
  return {{"role", s.role}, {"utt", s.utt}, {"start", s.start}, {"end", s.end}};
}

inline RoleSpan span_from_json(const nlohmann::json& j) {
  return {j.at("role").get<std::string>(), j.at("utt").get<int>(), j.at("start").get<int>(),
          j.at("end").get<int>()};
}

inline void validate_dialogue(const Dialogue& d, const std::vector<std::string>& roles) {
  if (d.dialogue_id.empty()) throw std::invalid_argument("dialogue id must be nonempty");
  if (d.utterances.empty()) throw std::invalid_argument("dialogue has no utterances");
  for (const Utterance& u : d.utterances) {
    if (u.tokens.empty()) throw std::invalid_argument("empty utterance");
    if (u.speaker < 0) throw std::invalid_argument("negative speaker id");
  }
  int last = static_cast<int>(d.utterances.size()) - 1;
  if (d.predicate_utt != last)
    throw std::invalid_argument("predicate must sit in the last utterance (got utterance " +
                                std::to_string(d.predicate_utt) + " of " + std::to_string(last + 1) + ")");
  if (d.predicate_idx < 0 || d.predicate_idx >= static_cast<int>(d.utterances[last].tokens.size()))
    throw std::invalid_argument("predicate token index out of range");
  for (const RoleSpan& s : d.roles) {
    if (std::find(roles.begin(), roles.end(), s.role) == roles.end())
      throw std::invalid_argument("role '" + s.role + "' missing from the corpus inventory");
    if (s.utt < 0 || s.utt >= static_cast<int>(d.utterances.size()))
      throw std::invalid_argument("span utterance index out of range");
    int len = static_cast<int>(d.utterances[s.utt].tokens.size());
    if (s.start < 0 || s.end < s.start || s.end >= len)
      throw std::invalid_argument("span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                                  "] outside utterance of length " + std::to_string(len));
  }
  for (const PronounLabel& p : d.pronouns) {
    if (p.utt < 0 || p.utt >= static_cast<int>(d.utterances.size()))
      throw std::invalid_argument("pronoun utterance index out of range");
    if (p.idx < 0 || p.idx >= static_cast<int>(d.utterances[p.utt].tokens.size()))
      throw std::invalid_argument("pronoun token index out of range");
    if (p.referent < 0) throw std::invalid_argument("negative pronoun referent");
  }
}

}  // namespace detail

inline nlohmann::json dialogue_to_json(const Dialogue& d) {
  nlohmann::json utts = nlohmann::json::array();
  for (const Utterance& u : d.utterances) utts.push_back({{"speaker", u.speaker}, {"tokens", u.tokens}});
  nlohmann::json roles = nlohmann::json::array();
  for (const RoleSpan& s : d.roles) roles.push_back(detail::span_to_json(s));
  nlohmann::json pronouns = nlohmann::json::array();
  for (const PronounLabel& p : d.pronouns)
    pronouns.push_back({{"utt", p.utt}, {"idx", p.idx}, {"referent", p.referent}});
  return {{"dialogue_id", d.dialogue_id},
          {"utterances", utts},
          {"predicate", {{"utt", d.predicate_utt}, {"idx", d.predicate_idx}}},
          {"roles", roles},
          {"pronouns", pronouns}};
}

inline Dialogue dialogue_from_json(const nlohmann::json& j) {
  Dialogue d;
  d.dialogue_id = j.at("dialogue_id").get<std::string>();
  for (const auto& u : j.at("utterances"))
    d.utterances.push_back({u.at("speaker").get<int>(), u.at("tokens").get<std::vector<std::string>>()});
  d.predicate_utt = j.at("predicate").at("utt").get<int>();
  d.predicate_idx = j.at("predicate").at("idx").get<int>();
  for (const auto& s : j.at("roles")) d.roles.push_back(detail::span_from_json(s));
  if (j.contains("pronouns"))
    for (const auto& p : j.at("pronouns"))
      d.pronouns.push_back({p.at("utt").get<int>(), p.at("idx").get<int>(), p.at("referent").get<int>()});
  return d;
}

// One record per line: a leading meta record with the role and speaker
// inventories, then one dialogue per line.
inline void save_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  nlohmann::json meta = {{"meta", {{"roles", corpus.roles}, {"speakers", corpus.num_speakers}}}};
  out << meta.dump() << "\n";
  for (const Dialogue& d : corpus.dialogues) out << dialogue_to_json(d).dump() << "\n";
  if (!out) throw std::runtime_error("write failed for " + path);
}

inline Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  Corpus corpus;
  bool have_meta = false;
  std::unordered_set<std::string> seen_ids;
  std::set<std::string> seen_roles;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw detail::corpus_error(path, line_no, std::string("invalid record: ") + e.what());
    }
    if (j.contains("meta")) {
      if (have_meta || !corpus.dialogues.empty())
        throw detail::corpus_error(path, line_no, "meta record must be the first line");
      corpus.roles = j.at("meta").at("roles").get<std::vector<std::string>>();
      corpus.num_speakers = j.at("meta").at("speakers").get<int>();
      have_meta = true;
      continue;
    }
    Dialogue d;
    try {
      d = dialogue_from_json(j);
    } catch (const nlohmann::json::exception& e) {
      throw detail::corpus_error(path, line_no, std::string("invalid record: ") + e.what());
    }
    if (!seen_ids.insert(d.dialogue_id).second)
      throw detail::corpus_error(path, line_no, "duplicate dialogue id '" + d.dialogue_id + "'");
    for (const RoleSpan& s : d.roles) seen_roles.insert(s.role);
    for (const Utterance& u : d.utterances)
      corpus.num_speakers = std::max(corpus.num_speakers, u.speaker + 1);
    corpus.dialogues.push_back(std::move(d));
  }
  // without a meta record the inventory is derived from the data
  if (!have_meta) corpus.roles.assign(seen_roles.begin(), seen_roles.end());
  for (size_t i = 0; i < corpus.dialogues.size(); ++i) {
    try {
      detail::validate_dialogue(corpus.dialogues[i], corpus.roles);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path + ": dialogue '" + corpus.dialogues[i].dialogue_id + "': " + e.what());
    }
  }
  return corpus;
}

// Prediction files share the dialogue schema with roles holding the
// predicted spans; utterances are omitted.
inline void save_predictions(const std::string& path, const std::vector<Prediction>& preds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const Prediction& p : preds) {
    nlohmann::json roles = nlohmann::json::array();
    for (const RoleSpan& s : p.roles) roles.push_back(detail::span_to_json(s));
    out << nlohmann::json{{"dialogue_id", p.dialogue_id}, {"roles", roles}}.dump() << "\n";
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

inline std::vector<Prediction> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<Prediction> preds;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      Prediction p;
      p.dialogue_id = j.at("dialogue_id").get<std::string>();
      for (const auto& s : j.at("roles")) p.roles.push_back(detail::span_from_json(s));
      preds.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw detail::corpus_error(path, line_no, std::string("invalid record: ") + e.what());
    }
  }
  return preds;
}

// All word-node surfaces that can appear after linearization: utterance
// tokens plus the synthetic speaker surfaces.
inline std::vector<std::string> corpus_token_inventory(const Corpus& corpus) {
  std::set<std::string> toks;
  for (const Dialogue& d : corpus.dialogues)
    for (const Utterance& u : d.utterances) {
      toks.insert(speaker_surface(u.speaker));
      for (const std::string& t : u.tokens) toks.insert(t);
    }
  return {toks.begin(), toks.end()};
}

}  // namespace polar
