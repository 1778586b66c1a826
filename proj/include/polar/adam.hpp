#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "polar/autograd.hpp"

namespace polar {

struct AdamOptions {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;  // decoupled, applied outside the moment update
};

// Adam with decoupled weight decay over a fixed parameter list.
class Adam {
 public:
  Adam(std::vector<Value> params, AdamOptions opt = {}) : params_(std::move(params)), opt_(opt) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const Value& p : params_) {
      m_.push_back(Tensor::zeros(p.shape()));
      v_.push_back(Tensor::zeros(p.shape()));
    }
  }

  // One update over all parameters; grads must have been populated by a
  // backward pass at least once. Zeroes grads afterwards.
  void step() {
    for (size_t k = 0; k < params_.size(); ++k)
      if (!params_[k].has_grad())
        throw std::logic_error("adam_step: parameter " + std::to_string(k) +
                               " has no gradient (missing backward pass)");
    ++step_count_;
    double bc1 = 1.0 - std::pow(opt_.beta1, step_count_);
    double bc2 = 1.0 - std::pow(opt_.beta2, step_count_);
    for (size_t k = 0; k < params_.size(); ++k) {
      Tensor& p = params_[k].tensor();
      const Tensor& g = params_[k].grad();
      Tensor& m = m_[k];
      Tensor& v = v_[k];
      for (size_t i = 0; i < p.data.size(); ++i) {
        m.data[i] = opt_.beta1 * m.data[i] + (1.0 - opt_.beta1) * g.data[i];
        v.data[i] = opt_.beta2 * v.data[i] + (1.0 - opt_.beta2) * g.data[i] * g.data[i];
        double mhat = m.data[i] / bc1;
        double vhat = v.data[i] / bc2;
        p.data[i] -= opt_.lr * (mhat / (std::sqrt(vhat) + opt_.eps) + opt_.weight_decay * p.data[i]);
      }
      params_[k].zero_grad();
    }
  }

  void zero_grad() {
    for (Value& p : params_) p.zero_grad();
  }

  void set_lr(double lr) { opt_.lr = lr; }

  long step_count() const { return step_count_; }
  const AdamOptions& options() const { return opt_; }

 private:
  std::vector<Value> params_;
  AdamOptions opt_;
  std::vector<Tensor> m_, v_;
  long step_count_ = 0;
};

}  // namespace polar
