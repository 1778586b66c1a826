#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "polar/autograd.hpp"
#include "polar/init.hpp"

namespace polar {

struct GcnConfig {
  int layers = 2;
  int hidden = 350;
  double degree_eps = 1e-6;

  void validate() const {
    if (layers < 1) throw std::invalid_argument("GcnConfig: need at least one layer");
    if (hidden <= 0) throw std::invalid_argument("GcnConfig: invalid hidden size");
  }
};

// One propagation step: r'_i = ReLU( sum_j Abar_ij W r_j / d_i + bias ) with
// Abar = E + I and d_i the guarded row sum of Abar.
inline Value gcn_layer(Tape& tape, const Value& R, const Value& E, const Value& W, const Value& bias,
                       double degree_eps = 1e-6) {
  if (R.tensor().rank() != 2 || E.tensor().rank() != 2 || E.shape()[0] != E.shape()[1] ||
      E.shape()[0] != R.shape()[0])
    throw std::invalid_argument("gcn_layer: R " + R.tensor().shape_str() + " incompatible with E " +
                                E.tensor().shape_str());
  if (W.shape()[0] != R.shape()[1])
    throw std::invalid_argument("gcn_layer: W " + W.tensor().shape_str() + " incompatible with R " +
                                R.tensor().shape_str());
  int K = E.shape()[0];
  Value abar = tape.add(E, make_input(Tensor::identity(K)));
  // max(deg, eps) composed from relu; the self-loop already keeps deg >= 1
  Value deg = tape.add_const(tape.relu(tape.add_const(tape.row_sum(abar), -degree_eps)), degree_eps);
  Value msg = tape.div_rows(tape.matmul(abar, tape.matmul(R, W)), deg);
  return tape.relu(tape.add(msg, bias));
}

// M stacked layers; the first maps the encoder width onto the GCN width.
class GcnStack {
 public:
  GcnStack(int d_in, const GcnConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    for (int m = 0; m < cfg_.layers; ++m) {
      int in = m == 0 ? d_in : cfg_.hidden;
      ws_.push_back(make_param(glorot(in, cfg_.hidden, rng)));
      bs_.push_back(make_param(Tensor::zeros({cfg_.hidden})));
    }
  }

  Value operator()(Tape& tape, const Value& H, const Value& E) const {
    Value r = H;
    for (size_t m = 0; m < ws_.size(); ++m) r = gcn_layer(tape, r, E, ws_[m], bs_[m], cfg_.degree_eps);
    return r;
  }

  const GcnConfig& config() const { return cfg_; }

  void collect_params(const std::string& prefix, std::vector<std::pair<std::string, Value>>& out) const {
    for (size_t m = 0; m < ws_.size(); ++m) {
      out.emplace_back(prefix + ".w" + std::to_string(m), ws_[m]);
      out.emplace_back(prefix + ".b" + std::to_string(m), bs_[m]);
    }
  }

 private:
  GcnConfig cfg_;
  std::vector<Value> ws_, bs_;
};

// e_i = g_i * r_i + (1 - g_i) * h_i with g_i = sigmoid(W2 [r_i ; h_i]);
// computed as h + g * (r - h), which is the same convex combination
inline Value gated_fusion(Tape& tape, const Value& R, const Value& H, const Value& W2) {
  if (R.shape() != H.shape())
    throw std::invalid_argument("gated_fusion: R " + R.tensor().shape_str() + " vs H " +
                                H.tensor().shape_str());
  if (W2.shape()[0] != 2 * R.shape()[1] || W2.shape()[1] != R.shape()[1])
    throw std::invalid_argument("gated_fusion: W2 " + W2.tensor().shape_str() + " needs shape [2d,d]");
  Value g = tape.sigmoid(tape.matmul(tape.concat_cols({R, H}), W2));
  return tape.add(H, tape.mul(g, tape.sub(R, H)));
}

// ablation path: plain addition
inline Value additive_fusion(Tape& tape, const Value& R, const Value& H) {
  if (R.shape() != H.shape())
    throw std::invalid_argument("additive_fusion: R " + R.tensor().shape_str() + " vs H " +
                                H.tensor().shape_str());
  return tape.add(R, H);
}

}  // namespace polar
