#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "polar/autograd.hpp"
#include "polar/entmax.hpp"
#include "polar/hardkuma.hpp"
#include "polar/init.hpp"

namespace polar {

struct InducerConfig {
  int d_score = 32;       // width of the distribution-parameter vectors
  int d_hidden = 64;      // hidden width of the two feed-forward heads
  double eps = 1e-4;      // floor added after softplus, keeps a,b > 0
  double l = -0.1;
  double r = 1.1;
  bool shared_row_noise = false;    // one noise draw per row instead of per edge
  bool row_normalize_scores = false;  // layer-norm the score vectors first
  bool columnwise_prune = false;

  void validate() const {
    if (d_score <= 0 || d_hidden <= 0) throw std::invalid_argument("InducerConfig: invalid dimensions");
    if (!(l < 0.0) || !(r > 1.0)) throw std::invalid_argument("InducerConfig: stretch bounds need l<0<1<r");
  }
};

// log-space attention bias toward the predicate: g_l = -pi * d(l, prd)^2,
// so exp(g) is the Gaussian distance weight
inline Tensor gaussian_bias(int K, int prd_index) {
  if (prd_index < 0 || prd_index >= K)
    throw std::out_of_range("gaussian_bias: predicate index " + std::to_string(prd_index) +
                            " outside sequence of length " + std::to_string(K));
  const double pi = 3.14159265358979323846;
  Tensor g = Tensor::zeros({K});
  for (int l = 0; l < K; ++l) {
    double d = static_cast<double>(l - prd_index);
    g.at(l) = -pi * d * d;
  }
  return g;
}

struct PgiResult {
  Value weights;  // K x K, rows on the simplex
  Value context;  // K x d_h, attention-weighted sums
};

// Predicate-centered attention: scaled dot-product scores plus the Gaussian
// bias over key positions, then a weighted sum of the original vectors.
inline PgiResult pgi_attend(Tape& tape, const Value& H, int prd_index) {
  if (H.tensor().rank() != 2) throw std::invalid_argument("pgi_attend: rank-2 input required");
  int K = H.shape()[0], dh = H.shape()[1];
  Value bias = make_input(gaussian_bias(K, prd_index));
  Value scores = tape.add(tape.scale(tape.matmul(H, tape.transpose(H)), 1.0 / std::sqrt(dh)), bias);
  Value w = tape.softmax_rows(scores);
  return {w, tape.matmul(w, H)};
}

// Two feed-forward heads map H' to score vectors; their Gram matrices pass
// through softplus + eps to give strictly positive HardKuma shapes.
class ParamHeads {
 public:
  ParamHeads(int d_h, const InducerConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    w1a_ = make_param(glorot(d_h, cfg_.d_hidden, rng));
    b1a_ = make_param(Tensor::zeros({cfg_.d_hidden}));
    w2a_ = make_param(glorot(cfg_.d_hidden, cfg_.d_score, rng));
    b2a_ = make_param(Tensor::zeros({cfg_.d_score}));
    w1b_ = make_param(glorot(d_h, cfg_.d_hidden, rng));
    b1b_ = make_param(Tensor::zeros({cfg_.d_hidden}));
    w2b_ = make_param(glorot(cfg_.d_hidden, cfg_.d_score, rng));
    b2b_ = make_param(Tensor::zeros({cfg_.d_score}));
  }

  std::pair<Value, Value> operator()(Tape& tape, const Value& Hp) const {
    Value a = head(tape, Hp, w1a_, b1a_, w2a_, b2a_);
    Value b = head(tape, Hp, w1b_, b1b_, w2b_, b2b_);
    return {a, b};
  }

  void collect_params(const std::string& prefix, std::vector<std::pair<std::string, Value>>& out) const {
    out.emplace_back(prefix + ".w1a", w1a_);
    out.emplace_back(prefix + ".b1a", b1a_);
    out.emplace_back(prefix + ".w2a", w2a_);
    out.emplace_back(prefix + ".b2a", b2a_);
    out.emplace_back(prefix + ".w1b", w1b_);
    out.emplace_back(prefix + ".b1b", b1b_);
    out.emplace_back(prefix + ".w2b", w2b_);
    out.emplace_back(prefix + ".b2b", b2b_);
  }

 private:
  Value head(Tape& tape, const Value& Hp, const Value& w1, const Value& b1, const Value& w2,
             const Value& b2) const {
    Value s = tape.add(tape.matmul(tape.relu(tape.add(tape.matmul(Hp, w1), b1)), w2), b2);
    if (cfg_.row_normalize_scores) s = tape.layer_norm_rows(s);
    return tape.add_const(tape.softplus(tape.matmul(s, tape.transpose(s))), cfg_.eps);
  }

  InducerConfig cfg_;
  Value w1a_, b1a_, w2a_, b2a_;
  Value w1b_, b1b_, w2b_, b2b_;
};

enum class EdgeMode { stochastic, deterministic };

// Noise matrix for edge sampling: independent per edge, one draw per row
// behind the shared_row_noise flag, or the 0.5 median in deterministic mode.
inline Tensor edge_noise(int K, EdgeMode mode, const InducerConfig& cfg, Rng& rng) {
  Tensor u = Tensor::full({K, K}, 0.5);
  if (mode == EdgeMode::stochastic) {
    if (cfg.shared_row_noise) {
      for (int i = 0; i < K; ++i) {
        double v = rng.uniform_open();
        for (int j = 0; j < K; ++j) u.at(i, j) = v;
      }
    } else {
      for (double& v : u.data) v = rng.uniform_open();
    }
  }
  return u;
}

// E_raw: one HardKuma gate per ordered node pair
inline Value induce(Tape& tape, const Value& A, const Value& B, const Tensor& noise,
                    const InducerConfig& cfg) {
  if (A.shape() != B.shape())
    throw std::invalid_argument("induce: A " + A.tensor().shape_str() + " vs B " + B.tensor().shape_str());
  return hardkuma_sample_matrix(tape, A, B, noise, cfg.l, cfg.r);
}

// Row-wise entmax drops weak edges and renormalizes the survivors.
inline Value prune(Tape& tape, const Value& E_raw, const Value& alpha_raw, const InducerConfig& cfg) {
  return entmax_rows(tape, E_raw, alpha_raw, cfg.columnwise_prune);
}

}  // namespace polar
