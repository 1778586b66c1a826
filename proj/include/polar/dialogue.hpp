#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "polar/tagger.hpp"

namespace polar {

struct Utterance {
  int speaker;
  std::vector<std::string> tokens;
};

// Argument span in utterance coordinates, token end inclusive.
struct RoleSpan {
  std::string role;
  int utt;
  int start;
  int end;

  bool operator==(const RoleSpan& o) const {
    return role == o.role && utt == o.utt && start == o.start && end == o.end;
  }
};

struct PronounLabel {
  int utt;
  int idx;
  int referent;  // speaker id the pronoun resolves to
};

struct Dialogue {
  std::string dialogue_id;
  std::vector<Utterance> utterances;
  int predicate_utt = -1;
  int predicate_idx = -1;
  std::vector<RoleSpan> roles;
  std::vector<PronounLabel> pronouns;
};

enum class NodeKind { word, speaker };

struct DialogueNode {
  NodeKind kind;
  std::string surface;
  int utt;
  int speaker;
  int position;   // linear index in the sequence
  int token_idx;  // index within the utterance; -1 for speaker nodes
  bool is_predicate;
};

// Flattened dialogue: per utterance one leading speaker node then its word
// nodes, no separator tokens.
struct NodeSequence {
  std::vector<DialogueNode> nodes;
  std::vector<int> gold_labels;  // Tagset indices, speaker nodes always O
  int predicate_node = -1;
  std::vector<int> pronoun_nodes;
  std::vector<int> pronoun_referents;

  int K() const { return static_cast<int>(nodes.size()); }
};

inline std::string speaker_surface(int speaker) { return "<spk" + std::to_string(speaker) + ">"; }

inline NodeSequence linearize(const Dialogue& d, const Tagset& ts) {
  if (d.utterances.empty()) throw std::invalid_argument("linearize: dialogue has no utterances");
  int last = static_cast<int>(d.utterances.size()) - 1;
  if (d.predicate_utt != last)
    throw std::invalid_argument("linearize: predicate must sit in the last utterance, got utterance " +
                                std::to_string(d.predicate_utt) + " of " + std::to_string(last + 1));
  if (d.predicate_idx < 0 ||
      d.predicate_idx >= static_cast<int>(d.utterances[static_cast<size_t>(last)].tokens.size()))
    throw std::invalid_argument("linearize: predicate token index " + std::to_string(d.predicate_idx) +
                                " out of range");

  NodeSequence seq;
  // word-node position per (utt, token), for span projection and pronouns
  std::vector<std::vector<int>> word_pos(d.utterances.size());
  for (size_t u = 0; u < d.utterances.size(); ++u) {
    const Utterance& utt = d.utterances[u];
    if (utt.tokens.empty())
      throw std::invalid_argument("linearize: utterance " + std::to_string(u) + " is empty");
    int ui = static_cast<int>(u);
    seq.nodes.push_back({NodeKind::speaker, speaker_surface(utt.speaker), ui, utt.speaker,
                         static_cast<int>(seq.nodes.size()), -1, false});
    for (size_t t = 0; t < utt.tokens.size(); ++t) {
      bool is_prd = ui == d.predicate_utt && static_cast<int>(t) == d.predicate_idx;
      int pos = static_cast<int>(seq.nodes.size());
      if (is_prd) seq.predicate_node = pos;
      word_pos[u].push_back(pos);
      seq.nodes.push_back({NodeKind::word, utt.tokens[t], ui, utt.speaker, pos, static_cast<int>(t), is_prd});
    }
  }

  std::vector<NodeSpan> node_spans;
  for (const RoleSpan& s : d.roles) {
    if (s.utt < 0 || s.utt >= static_cast<int>(d.utterances.size()))
      throw std::invalid_argument("linearize: role span utterance " + std::to_string(s.utt) + " out of range");
    const auto& pos = word_pos[static_cast<size_t>(s.utt)];
    if (s.start < 0 || s.end >= static_cast<int>(pos.size()) || s.start > s.end)
      throw std::invalid_argument("linearize: role span [" + std::to_string(s.start) + "," +
                                  std::to_string(s.end) + "] outside utterance " + std::to_string(s.utt));
    node_spans.push_back({ts.role_index(s.role), pos[static_cast<size_t>(s.start)],
                          pos[static_cast<size_t>(s.end)]});
  }
  seq.gold_labels = tags_from_spans(node_spans, seq.K(), ts);

  for (const PronounLabel& p : d.pronouns) {
    if (p.utt < 0 || p.utt >= static_cast<int>(d.utterances.size()) || p.idx < 0 ||
        p.idx >= static_cast<int>(word_pos[static_cast<size_t>(p.utt)].size()))
      throw std::invalid_argument("linearize: pronoun position (" + std::to_string(p.utt) + "," +
                                  std::to_string(p.idx) + ") out of range");
    seq.pronoun_nodes.push_back(word_pos[static_cast<size_t>(p.utt)][static_cast<size_t>(p.idx)]);
    seq.pronoun_referents.push_back(p.referent);
  }
  return seq;
}

// Maps decoded node spans back to utterance coordinates. A decoded span may
// cross structural boundaries (speaker nodes, utterance changes); each maximal
// run of word nodes within one utterance becomes its own span.
inline std::vector<RoleSpan> node_spans_to_utterance(const NodeSequence& seq,
                                                     const std::vector<NodeSpan>& spans, const Tagset& ts) {
  std::vector<RoleSpan> out;
  for (const NodeSpan& s : spans) {
    if (s.start < 0 || s.end >= seq.K())
      throw std::out_of_range("node_spans_to_utterance: span outside sequence");
    int run_start = -1;
    for (int i = s.start; i <= s.end + 1; ++i) {
      bool breaks = i > s.end || seq.nodes[static_cast<size_t>(i)].kind != NodeKind::word ||
                    (run_start >= 0 && seq.nodes[static_cast<size_t>(i)].utt !=
                                           seq.nodes[static_cast<size_t>(run_start)].utt);
      if (breaks) {
        if (run_start >= 0) {
          const DialogueNode& a = seq.nodes[static_cast<size_t>(run_start)];
          const DialogueNode& b = seq.nodes[static_cast<size_t>(i - 1)];
          out.push_back({ts.roles[static_cast<size_t>(s.role)], a.utt, a.token_idx, b.token_idx});
        }
        run_start = i <= s.end && seq.nodes[static_cast<size_t>(i)].kind == NodeKind::word ? i : -1;
      } else if (run_start < 0) {
        run_start = i;
      }
    }
  }
  return out;
}

}  // namespace polar
