#pragma once

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "polar/autograd.hpp"

namespace polar {

// Label inventory over roles R: indices 0..2|R|-1 are B-X / I-X pairs in role
// order, the last index is O.
struct Tagset {
  std::vector<std::string> roles;

  explicit Tagset(std::vector<std::string> role_names) : roles(std::move(role_names)) {
    if (roles.empty()) throw std::invalid_argument("Tagset: empty role inventory");
    std::vector<std::string> sorted(roles);
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("Tagset: duplicate role name");
  }

  int num_roles() const { return static_cast<int>(roles.size()); }
  int num_labels() const { return 2 * num_roles() + 1; }
  int b_label(int role) const { return 2 * role; }
  int i_label(int role) const { return 2 * role + 1; }
  int o_label() const { return 2 * num_roles(); }

  bool is_b(int label) const { return label < o_label() && label % 2 == 0; }
  bool is_i(int label) const { return label < o_label() && label % 2 == 1; }
  int role_of(int label) const {
    if (label < 0 || label >= o_label())
      throw std::out_of_range("Tagset: label " + std::to_string(label) + " carries no role");
    return label / 2;
  }

  int role_index(const std::string& name) const {
    for (size_t i = 0; i < roles.size(); ++i)
      if (roles[i] == name) return static_cast<int>(i);
    throw std::out_of_range("Tagset: unknown role '" + name + "'");
  }

  std::string label_name(int label) const {
    if (label == o_label()) return "O";
    return (is_b(label) ? "B-" : "I-") + roles[static_cast<size_t>(role_of(label))];
  }
};

// BIO validity: I-X may only follow B-X or I-X, and never starts a sequence.
struct TransitionMask {
  int num_labels;
  std::vector<bool> allowed;      // [from * num_labels + to]
  std::vector<bool> start_valid;  // [to]

  explicit TransitionMask(const Tagset& ts) : num_labels(ts.num_labels()) {
    allowed.assign(static_cast<size_t>(num_labels) * num_labels, true);
    start_valid.assign(static_cast<size_t>(num_labels), true);
    for (int to = 0; to < num_labels; ++to) {
      if (!ts.is_i(to)) continue;
      start_valid[static_cast<size_t>(to)] = false;
      int role = ts.role_of(to);
      for (int from = 0; from < num_labels; ++from) {
        bool same_span = (from == ts.b_label(role) || from == ts.i_label(role));
        allowed[static_cast<size_t>(from) * num_labels + to] = same_span;
      }
    }
  }

  bool ok(int from, int to) const { return allowed[static_cast<size_t>(from) * num_labels + to]; }
  bool ok_start(int to) const { return start_valid[static_cast<size_t>(to)]; }
};

// Argument span in linearized node coordinates, end inclusive.
struct NodeSpan {
  int role;
  int start;
  int end;

  bool operator==(const NodeSpan& o) const { return role == o.role && start == o.start && end == o.end; }
};

inline std::vector<int> tags_from_spans(const std::vector<NodeSpan>& spans, int K, const Tagset& ts) {
  std::vector<int> labels(static_cast<size_t>(K), ts.o_label());
  std::vector<bool> taken(static_cast<size_t>(K), false);
  for (const NodeSpan& s : spans) {
    if (s.role < 0 || s.role >= ts.num_roles())
      throw std::out_of_range("tags_from_spans: role index " + std::to_string(s.role));
    if (s.start < 0 || s.end >= K || s.start > s.end)
      throw std::invalid_argument("tags_from_spans: span [" + std::to_string(s.start) + "," +
                                  std::to_string(s.end) + "] outside sequence of length " +
                                  std::to_string(K));
    for (int i = s.start; i <= s.end; ++i) {
      if (taken[static_cast<size_t>(i)])
        throw std::invalid_argument("tags_from_spans: overlapping spans at position " + std::to_string(i));
      taken[static_cast<size_t>(i)] = true;
      labels[static_cast<size_t>(i)] = i == s.start ? ts.b_label(s.role) : ts.i_label(s.role);
    }
  }
  return labels;
}

inline std::vector<NodeSpan> spans_from_tags(const std::vector<int>& labels, const Tagset& ts) {
  std::vector<NodeSpan> spans;
  int K = static_cast<int>(labels.size());
  for (int i = 0; i < K; ++i) {
    int l = labels[static_cast<size_t>(i)];
    if (!ts.is_b(l)) continue;
    int role = ts.role_of(l);
    int end = i;
    while (end + 1 < K && labels[static_cast<size_t>(end + 1)] == ts.i_label(role)) ++end;
    spans.push_back({role, i, end});
    i = end;
  }
  return spans;
}

// Row-wise log-softmax over a linear map of the fused features.
inline Value classify(Tape& tape, const Value& feats, const Value& W, const Value& bias) {
  return tape.log_softmax_rows(tape.add(tape.matmul(feats, W), bias));
}

// L = -(1/K) sum_j log p(y_j)
inline Value sequence_loss(Tape& tape, const Value& log_probs, const std::vector<int>& gold) {
  if (static_cast<int>(gold.size()) != log_probs.shape()[0])
    throw std::invalid_argument("sequence_loss: " + std::to_string(gold.size()) + " gold labels for " +
                                std::to_string(log_probs.shape()[0]) + " positions");
  return tape.scale(tape.mean_pick_rows(log_probs, gold), -1.0);
}

// Highest-scoring BIO-valid sequence under emission scores alone. Computed
// as a backward DP (best suffix score per label) followed by a forward greedy
// walk; picking the lowest label index on exact score ties at each step makes
// the result the lexicographically smallest optimal sequence.
inline std::vector<int> viterbi_decode(const Tensor& log_probs, const TransitionMask& mask) {
  if (log_probs.rank() != 2 || log_probs.shape[1] != mask.num_labels)
    throw std::invalid_argument("viterbi_decode: emissions " + log_probs.shape_str() + " vs " +
                                std::to_string(mask.num_labels) + " labels");
  int K = log_probs.shape[0], L = mask.num_labels;
  const double neg_inf = -std::numeric_limits<double>::infinity();
  // beta[k][l]: best emission sum over a valid suffix starting at position k
  // with label l (every label can reach O, so the max below is never empty)
  std::vector<std::vector<double>> beta(static_cast<size_t>(K), std::vector<double>(static_cast<size_t>(L)));
  for (int l = 0; l < L; ++l) beta[static_cast<size_t>(K - 1)][static_cast<size_t>(l)] = log_probs.at(K - 1, l);
  for (int k = K - 2; k >= 0; --k)
    for (int l = 0; l < L; ++l) {
      double best = neg_inf;
      for (int to = 0; to < L; ++to)
        if (mask.ok(l, to) && beta[static_cast<size_t>(k + 1)][static_cast<size_t>(to)] > best)
          best = beta[static_cast<size_t>(k + 1)][static_cast<size_t>(to)];
      beta[static_cast<size_t>(k)][static_cast<size_t>(l)] = log_probs.at(k, l) + best;
    }
  std::vector<int> path(static_cast<size_t>(K));
  double best = neg_inf;
  int arg = -1;
  for (int l = 0; l < L; ++l)
    if (mask.ok_start(l) && beta[0][static_cast<size_t>(l)] > best) {
      best = beta[0][static_cast<size_t>(l)];
      arg = l;
    }
  path[0] = arg;
  for (int k = 1; k < K; ++k) {
    best = neg_inf;
    arg = -1;
    for (int to = 0; to < L; ++to)
      if (mask.ok(path[static_cast<size_t>(k - 1)], to) &&
          beta[static_cast<size_t>(k)][static_cast<size_t>(to)] > best) {
        best = beta[static_cast<size_t>(k)][static_cast<size_t>(to)];
        arg = to;
      }
    path[static_cast<size_t>(k)] = arg;
  }
  return path;
}

}  // namespace polar
