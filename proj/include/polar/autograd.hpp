#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "polar/rng.hpp"
#include "polar/tensor.hpp"

namespace polar {

namespace detail {

struct Node {
  Tensor value;
  Tensor grad;  // allocated lazily on first accumulation
  bool requires_grad = false;
  bool on_tape = false;
  std::function<void(Node&)> backward;  // empty for leaves; called with this node

  void accumulate(const Tensor& g) {
    if (!requires_grad) return;
    if (grad.data.empty()) grad = Tensor::zeros(value.shape);
    for (size_t i = 0; i < g.data.size(); ++i) grad.data[i] += g.data[i];
  }
};

}  // namespace detail

// Handle to a node in the computation graph. Copies share the node.
class Value {
 public:
  Value() = default;

  const Tensor& tensor() const { return node_->value; }
  Tensor& tensor() { return node_->value; }
  const Tensor& grad() const {
    if (node_->grad.data.empty())
      throw std::logic_error("Value::grad: gradient never populated (no backward pass reached this value)");
    return node_->grad;
  }
  bool has_grad() const { return !node_->grad.data.empty(); }
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad() {
    if (!node_->grad.data.empty()) std::fill(node_->grad.data.begin(), node_->grad.data.end(), 0.0);
  }
  const std::vector<int>& shape() const { return node_->value.shape; }
  bool defined() const { return node_ != nullptr; }

  std::shared_ptr<detail::Node> node() const { return node_; }

  static Value leaf(Tensor t, bool requires_grad) {
    Value v;
    v.node_ = std::make_shared<detail::Node>();
    v.node_->value = std::move(t);
    v.node_->requires_grad = requires_grad;
    return v;
  }

 private:
  friend class Tape;
  std::shared_ptr<detail::Node> node_;
};

inline Value make_param(Tensor t) { return Value::leaf(std::move(t), true); }
inline Value make_input(Tensor t) { return Value::leaf(std::move(t), false); }

// Records ops in execution order; backward walks them once, in reverse.
// Construct with grad_enabled=false for inference passes: no backward rules
// are kept and nothing requires grad downstream.
class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  // Generic recorder. `bw` closes over whatever the op needs and accumulates
  // into the inputs' grads.
  Value record(Tensor out, const std::vector<Value>& inputs, std::function<void(detail::Node&)> bw) {
    Value v;
    v.node_ = std::make_shared<detail::Node>();
    v.node_->value = std::move(out);
    v.node_->on_tape = true;
    if (grad_enabled_) {
      for (const Value& in : inputs)
        if (in.requires_grad()) v.node_->requires_grad = true;
      if (v.node_->requires_grad) {
        v.node_->backward = std::move(bw);
        ops_.push_back(v.node_);
      }
    }
    return v;
  }

  // d(loss)/d(every reachable requires_grad value). Consumes the tape.
  void backward(const Value& loss) {
    if (ops_.empty())
      throw std::logic_error("backward: tape is empty (backward called twice, or no forward recorded)");
    if (loss.tensor().rank() != 0)
      throw std::invalid_argument("backward: loss must be a scalar, got shape " + loss.tensor().shape_str());
    if (!loss.node()->on_tape || !loss.node()->backward)
      throw std::logic_error("backward: loss was not produced on this tape");
    loss.node()->accumulate(Tensor::scalar(1.0));
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it)
      if ((*it)->backward) (*it)->backward(**it);
    ops_.clear();
  }

  size_t size() const { return ops_.size(); }
  void clear() { ops_.clear(); }
  bool grad_enabled() const { return grad_enabled_; }

  // ---- elementwise / broadcast ----

  // a + b; b may be a vector broadcast over the last axis of a matrix a
  Value add(const Value& a, const Value& b) { return binary_broadcast("add", a, b, false); }
  // a - b, same broadcast rule
  Value sub(const Value& a, const Value& b) { return binary_broadcast("sub", a, b, true); }

  // elementwise product, same broadcast rule
  Value mul(const Value& a, const Value& b) {
    if (a.shape() == b.shape()) {
      Tensor out = a.tensor();
      for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.tensor().data[i];
      auto an = a.node(), bn = b.node();
      return record(std::move(out), {a, b}, [an, bn](detail::Node& n) {
        Tensor ga = n.grad, gb = n.grad;
        for (size_t i = 0; i < ga.data.size(); ++i) {
          ga.data[i] *= bn->value.data[i];
          gb.data[i] *= an->value.data[i];
        }
        an->accumulate(ga);
        bn->accumulate(gb);
      });
    }
    check_broadcast("mul", a, b);
    int rows = a.shape()[0], cols = a.shape()[1];
    Tensor out = a.tensor();
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) out.at(i, j) *= b.tensor().at(j);
    auto an = a.node(), bn = b.node();
    return record(std::move(out), {a, b}, [an, bn, rows, cols](detail::Node& n) {
      Tensor ga = Tensor::zeros(an->value.shape);
      Tensor gb = Tensor::zeros(bn->value.shape);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
          ga.at(i, j) = n.grad.at(i, j) * bn->value.at(j);
          gb.at(j) += n.grad.at(i, j) * an->value.at(i, j);
        }
      an->accumulate(ga);
      bn->accumulate(gb);
    });
  }

  Value scale(const Value& a, double c) {
    Tensor out = a.tensor();
    for (double& v : out.data) v *= c;
    auto an = a.node();
    return record(std::move(out), {a}, [an, c](detail::Node& n) {
      Tensor g = n.grad;
      for (double& v : g.data) v *= c;
      an->accumulate(g);
    });
  }

  Value add_const(const Value& a, double c) {
    Tensor out = a.tensor();
    for (double& v : out.data) v += c;
    auto an = a.node();
    return record(std::move(out), {a}, [an](detail::Node& n) { an->accumulate(n.grad); });
  }

  // ---- unary maps ----

  Value relu(const Value& a) {
    return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
  }
  Value sigmoid(const Value& a) {
    return unary("sigmoid", a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                 [](double, double y) { return y * (1.0 - y); });
  }
  // log(1+e^x), overflow-safe
  Value softplus(const Value& a) {
    return unary("softplus", a,
                 [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); },
                 [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
  }
  Value exp(const Value& a) {
    return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
  }
  Value log(const Value& a) {
    for (double v : a.tensor().data)
      if (v <= 0.0) throw std::domain_error("log: non-positive input " + std::to_string(v));
    return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
  }
  // x^p for constant p; domain restricted to x > 0 when p is non-integral
  Value pow(const Value& a, double p) {
    return unary("pow", a, [p](double x) { return std::pow(x, p); },
                 [p](double x, double) { return p * std::pow(x, p - 1.0); });
  }

  // ---- linear algebra ----

  Value matmul(const Value& a, const Value& b) {
    if (a.tensor().rank() != 2 || b.tensor().rank() != 2 || a.shape()[1] != b.shape()[0])
      throw std::invalid_argument("matmul: incompatible shapes " + a.tensor().shape_str() + " and " +
                                  b.tensor().shape_str());
    auto an = a.node(), bn = b.node();
    Tensor out = matmul_raw(a.tensor(), b.tensor(), false, false);
    return record(std::move(out), {a, b}, [an, bn](detail::Node& n) {
      // dA = G B^T, dB = A^T G
      an->accumulate(matmul_raw(n.grad, bn->value, false, true));
      bn->accumulate(matmul_raw(an->value, n.grad, true, false));
    });
  }

  Value transpose(const Value& a) {
    if (a.tensor().rank() != 2) throw std::invalid_argument("transpose: rank-2 input required");
    int r = a.shape()[0], c = a.shape()[1];
    Tensor out = Tensor::zeros({c, r});
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) out.at(j, i) = a.tensor().at(i, j);
    auto an = a.node();
    return record(std::move(out), {a}, [an, r, c](detail::Node& n) {
      Tensor g = Tensor::zeros({r, c});
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) g.at(i, j) = n.grad.at(j, i);
      an->accumulate(g);
    });
  }

  // ---- shape ops ----

  Value concat_cols(const std::vector<Value>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: empty input list");
    int rows = parts[0].shape()[0], cols = 0;
    for (const Value& p : parts) {
      if (p.tensor().rank() != 2 || p.shape()[0] != rows)
        throw std::invalid_argument("concat_cols: row mismatch, " + p.tensor().shape_str() + " vs " +
                                    parts[0].tensor().shape_str());
      cols += p.shape()[1];
    }
    Tensor out = Tensor::zeros({rows, cols});
    int off = 0;
    for (const Value& p : parts) {
      int pc = p.shape()[1];
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < pc; ++j) out.at(i, off + j) = p.tensor().at(i, j);
      off += pc;
    }
    std::vector<std::shared_ptr<detail::Node>> nodes;
    for (const Value& p : parts) nodes.push_back(p.node());
    return record(std::move(out), parts, [nodes, rows](detail::Node& n) {
      int off = 0;
      for (const auto& pn : nodes) {
        int pc = pn->value.shape[1];
        Tensor g = Tensor::zeros({rows, pc});
        for (int i = 0; i < rows; ++i)
          for (int j = 0; j < pc; ++j) g.at(i, j) = n.grad.at(i, off + j);
        pn->accumulate(g);
        off += pc;
      }
    });
  }

  Value slice_cols(const Value& a, int begin, int end) {
    if (a.tensor().rank() != 2 || begin < 0 || end > a.shape()[1] || begin >= end)
      throw std::invalid_argument("slice_cols: bad range [" + std::to_string(begin) + "," +
                                  std::to_string(end) + ") for " + a.tensor().shape_str());
    int rows = a.shape()[0], w = end - begin;
    Tensor out = Tensor::zeros({rows, w});
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < w; ++j) out.at(i, j) = a.tensor().at(i, begin + j);
    auto an = a.node();
    return record(std::move(out), {a}, [an, begin, rows, w](detail::Node& n) {
      Tensor g = Tensor::zeros(an->value.shape);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < w; ++j) g.at(i, begin + j) = n.grad.at(i, j);
      an->accumulate(g);
    });
  }

  // rows of `table` selected by index; repeated indices scatter-add on backward
  Value gather_rows(const Value& table, const std::vector<int>& idx) {
    if (table.tensor().rank() != 2) throw std::invalid_argument("gather_rows: rank-2 table required");
    int cols = table.shape()[1], rows = table.shape()[0];
    for (int i : idx)
      if (i < 0 || i >= rows)
        throw std::out_of_range("gather_rows: index " + std::to_string(i) + " outside table " +
                                table.tensor().shape_str());
    Tensor out = Tensor::zeros({static_cast<int>(idx.size()), cols});
    for (size_t r = 0; r < idx.size(); ++r)
      for (int j = 0; j < cols; ++j) out.at(static_cast<int>(r), j) = table.tensor().at(idx[r], j);
    auto tn = table.node();
    return record(std::move(out), {table}, [tn, idx, cols](detail::Node& n) {
      Tensor g = Tensor::zeros(tn->value.shape);
      for (size_t r = 0; r < idx.size(); ++r)
        for (int j = 0; j < cols; ++j) g.at(idx[r], j) += n.grad.at(static_cast<int>(r), j);
      tn->accumulate(g);
    });
  }

  // ---- rowwise ----

  Value softmax_rows(const Value& a) {
    if (a.tensor().rank() != 2) throw std::invalid_argument("softmax_rows: rank-2 input required");
    int rows = a.shape()[0], cols = a.shape()[1];
    Tensor out = Tensor::zeros(a.shape());
    for (int i = 0; i < rows; ++i) {
      double mx = a.tensor().at(i, 0);
      for (int j = 1; j < cols; ++j) mx = std::max(mx, a.tensor().at(i, j));
      double z = 0.0;
      for (int j = 0; j < cols; ++j) z += std::exp(a.tensor().at(i, j) - mx);
      for (int j = 0; j < cols; ++j) out.at(i, j) = std::exp(a.tensor().at(i, j) - mx) / z;
    }
    auto an = a.node();
    return record(std::move(out), {a}, [an, rows, cols](detail::Node& n) {
      Tensor g = Tensor::zeros(an->value.shape);
      for (int i = 0; i < rows; ++i) {
        double dot = 0.0;
        for (int j = 0; j < cols; ++j) dot += n.grad.at(i, j) * n.value.at(i, j);
        for (int j = 0; j < cols; ++j) g.at(i, j) = n.value.at(i, j) * (n.grad.at(i, j) - dot);
      }
      an->accumulate(g);
    });
  }

  Value log_softmax_rows(const Value& a) {
    if (a.tensor().rank() != 2) throw std::invalid_argument("log_softmax_rows: rank-2 input required");
    int rows = a.shape()[0], cols = a.shape()[1];
    Tensor out = Tensor::zeros(a.shape());
    for (int i = 0; i < rows; ++i) {
      double mx = a.tensor().at(i, 0);
      for (int j = 1; j < cols; ++j) mx = std::max(mx, a.tensor().at(i, j));
      double z = 0.0;
      for (int j = 0; j < cols; ++j) z += std::exp(a.tensor().at(i, j) - mx);
      double lz = mx + std::log(z);
      for (int j = 0; j < cols; ++j) out.at(i, j) = a.tensor().at(i, j) - lz;
    }
    auto an = a.node();
    return record(std::move(out), {a}, [an, rows, cols](detail::Node& n) {
      Tensor g = Tensor::zeros(an->value.shape);
      for (int i = 0; i < rows; ++i) {
        double gsum = 0.0;
        for (int j = 0; j < cols; ++j) gsum += n.grad.at(i, j);
        for (int j = 0; j < cols; ++j) g.at(i, j) = n.grad.at(i, j) - std::exp(n.value.at(i, j)) * gsum;
      }
      an->accumulate(g);
    });
  }

  // normalize each row to zero mean / unit variance
  Value layer_norm_rows(const Value& a, double eps = 1e-5) {
    if (a.tensor().rank() != 2) throw std::invalid_argument("layer_norm_rows: rank-2 input required");
    int rows = a.shape()[0], cols = a.shape()[1];
    Tensor out = Tensor::zeros(a.shape());
    std::vector<double> inv_sd(static_cast<size_t>(rows));
    for (int i = 0; i < rows; ++i) {
      double mu = 0.0;
      for (int j = 0; j < cols; ++j) mu += a.tensor().at(i, j);
      mu /= cols;
      double var = 0.0;
      for (int j = 0; j < cols; ++j) {
        double d = a.tensor().at(i, j) - mu;
        var += d * d;
      }
      var /= cols;
      double isd = 1.0 / std::sqrt(var + eps);
      inv_sd[static_cast<size_t>(i)] = isd;
      for (int j = 0; j < cols; ++j) out.at(i, j) = (a.tensor().at(i, j) - mu) * isd;
    }
    auto an = a.node();
    return record(std::move(out), {a}, [an, inv_sd, rows, cols](detail::Node& n) {
      Tensor g = Tensor::zeros(an->value.shape);
      for (int i = 0; i < rows; ++i) {
        double gmean = 0.0, gydot = 0.0;
        for (int j = 0; j < cols; ++j) {
          gmean += n.grad.at(i, j);
          gydot += n.grad.at(i, j) * n.value.at(i, j);
        }
        gmean /= cols;
        gydot /= cols;
        for (int j = 0; j < cols; ++j)
          g.at(i, j) = inv_sd[static_cast<size_t>(i)] * (n.grad.at(i, j) - gmean - n.value.at(i, j) * gydot);
      }
      an->accumulate(g);
    });
  }

  Value row_sum(const Value& a) {
    if (a.tensor().rank() != 2) throw std::invalid_argument("row_sum: rank-2 input required");
    int rows = a.shape()[0], cols = a.shape()[1];
    Tensor out = Tensor::zeros({rows});
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) out.at(i) += a.tensor().at(i, j);
    auto an = a.node();
    return record(std::move(out), {a}, [an, rows, cols](detail::Node& n) {
      Tensor g = Tensor::zeros(an->value.shape);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) g.at(i, j) = n.grad.at(i);
      an->accumulate(g);
    });
  }

  // divide each row i of a by s[i]
  Value div_rows(const Value& a, const Value& s) {
    if (a.tensor().rank() != 2 || s.tensor().rank() != 1 || s.shape()[0] != a.shape()[0])
      throw std::invalid_argument("div_rows: need [K,n] and [K], got " + a.tensor().shape_str() + " and " +
                                  s.tensor().shape_str());
    int rows = a.shape()[0], cols = a.shape()[1];
    Tensor out = Tensor::zeros(a.shape());
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) out.at(i, j) = a.tensor().at(i, j) / s.tensor().at(i);
    auto an = a.node(), sn = s.node();
    return record(std::move(out), {a, s}, [an, sn, rows, cols](detail::Node& n) {
      Tensor ga = Tensor::zeros(an->value.shape);
      Tensor gs = Tensor::zeros(sn->value.shape);
      for (int i = 0; i < rows; ++i) {
        double si = sn->value.at(i);
        for (int j = 0; j < cols; ++j) {
          ga.at(i, j) = n.grad.at(i, j) / si;
          gs.at(i) -= n.grad.at(i, j) * an->value.at(i, j) / (si * si);
        }
      }
      an->accumulate(ga);
      sn->accumulate(gs);
    });
  }

  // ---- reductions ----

  Value sum(const Value& a) {
    double s = 0.0;
    for (double v : a.tensor().data) s += v;
    auto an = a.node();
    return record(Tensor::scalar(s), {a}, [an](detail::Node& n) {
      an->accumulate(Tensor::full(an->value.shape, n.grad.item()));
    });
  }

  Value mean(const Value& a) {
    if (a.tensor().size() == 0) throw std::invalid_argument("mean: empty input");
    double s = 0.0;
    for (double v : a.tensor().data) s += v;
    double inv = 1.0 / static_cast<double>(a.tensor().size());
    auto an = a.node();
    return record(Tensor::scalar(s * inv), {a}, [an, inv](detail::Node& n) {
      an->accumulate(Tensor::full(an->value.shape, n.grad.item() * inv));
    });
  }

  // (1/K) * sum_i logp[i, idx[i]]  (the mean-pick used by cross-entropy)
  Value mean_pick_rows(const Value& a, const std::vector<int>& idx) {
    if (a.tensor().rank() != 2 || static_cast<int>(idx.size()) != a.shape()[0])
      throw std::invalid_argument("mean_pick_rows: index count " + std::to_string(idx.size()) +
                                  " does not match rows of " + a.tensor().shape_str());
    int cols = a.shape()[1];
    for (int j : idx)
      if (j < 0 || j >= cols) throw std::out_of_range("mean_pick_rows: index " + std::to_string(j));
    double s = 0.0;
    for (size_t i = 0; i < idx.size(); ++i) s += a.tensor().at(static_cast<int>(i), idx[i]);
    double inv = 1.0 / static_cast<double>(idx.size());
    auto an = a.node();
    return record(Tensor::scalar(s * inv), {a}, [an, idx, inv](detail::Node& n) {
      Tensor g = Tensor::zeros(an->value.shape);
      for (size_t i = 0; i < idx.size(); ++i) g.at(static_cast<int>(i), idx[i]) = n.grad.item() * inv;
      an->accumulate(g);
    });
  }

  // ---- stochastic ----

  // inverted dropout: train mode scales kept entries by 1/(1-rate); eval is identity
  Value dropout(const Value& a, double rate, bool train, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
    if (!train || rate == 0.0) return a;
    Tensor mask = Tensor::zeros(a.shape());
    double keep = 1.0 / (1.0 - rate);
    for (double& m : mask.data) m = rng.uniform() >= rate ? keep : 0.0;
    Tensor out = a.tensor();
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= mask.data[i];
    auto an = a.node();
    return record(std::move(out), {a}, [an, mask](detail::Node& n) {
      Tensor g = n.grad;
      for (size_t i = 0; i < g.data.size(); ++i) g.data[i] *= mask.data[i];
      an->accumulate(g);
    });
  }

  static Tensor matmul_raw(const Tensor& a, const Tensor& b, bool ta, bool tb) {
    int ar = ta ? a.shape[1] : a.shape[0];
    int ac = ta ? a.shape[0] : a.shape[1];
    int br = tb ? b.shape[1] : b.shape[0];
    int bc = tb ? b.shape[0] : b.shape[1];
    if (ac != br) throw std::invalid_argument("matmul: inner dimension mismatch");
    Tensor out = Tensor::zeros({ar, bc});
    // ikj order over the untransposed layouts keeps the inner loop contiguous
    if (!ta && !tb) {
      for (int i = 0; i < ar; ++i)
        for (int k = 0; k < ac; ++k) {
          double av = a.at(i, k);
          if (av == 0.0) continue;
          const double* brow = &b.data[static_cast<size_t>(k) * bc];
          double* orow = &out.data[static_cast<size_t>(i) * bc];
          for (int j = 0; j < bc; ++j) orow[j] += av * brow[j];
        }
    } else if (ta && !tb) {
      for (int k = 0; k < ac; ++k) {
        const double* arow = &a.data[static_cast<size_t>(k) * ar];
        const double* brow = &b.data[static_cast<size_t>(k) * bc];
        for (int i = 0; i < ar; ++i) {
          double av = arow[i];
          if (av == 0.0) continue;
          double* orow = &out.data[static_cast<size_t>(i) * bc];
          for (int j = 0; j < bc; ++j) orow[j] += av * brow[j];
        }
      }
    } else if (!ta && tb) {
      for (int i = 0; i < ar; ++i) {
        const double* arow = &a.data[static_cast<size_t>(i) * ac];
        double* orow = &out.data[static_cast<size_t>(i) * bc];
        for (int j = 0; j < bc; ++j) {
          const double* brow = &b.data[static_cast<size_t>(j) * ac];
          double s = 0.0;
          for (int k = 0; k < ac; ++k) s += arow[k] * brow[k];
          orow[j] = s;
        }
      }
    } else {
      for (int i = 0; i < ar; ++i)
        for (int j = 0; j < bc; ++j) {
          double s = 0.0;
          for (int k = 0; k < ac; ++k) s += a.at(k, i) * b.at(j, k);
          out.at(i, j) = s;
        }
    }
    return out;
  }

 private:
  template <typename F, typename DF>
  Value unary(const char* name, const Value& a, F f, DF df) {
    (void)name;
    Tensor out = a.tensor();
    for (double& v : out.data) v = f(v);
    auto an = a.node();
    return record(std::move(out), {a}, [an, df](detail::Node& n) {
      Tensor g = n.grad;
      for (size_t i = 0; i < g.data.size(); ++i) g.data[i] *= df(an->value.data[i], n.value.data[i]);
      an->accumulate(g);
    });
  }

  void check_broadcast(const char* op, const Value& a, const Value& b) {
    bool ok = a.tensor().rank() == 2 && b.tensor().rank() == 1 && a.shape()[1] == b.shape()[0];
    if (!ok)
      throw std::invalid_argument(std::string(op) + ": incompatible shapes " + a.tensor().shape_str() +
                                  " and " + b.tensor().shape_str() +
                                  " (need identical shapes or [K,n] with [n])");
  }

  Value binary_broadcast(const char* op, const Value& a, const Value& b, bool negate_b) {
    double sb = negate_b ? -1.0 : 1.0;
    if (a.shape() == b.shape()) {
      Tensor out = a.tensor();
      for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += sb * b.tensor().data[i];
      auto an = a.node(), bn = b.node();
      return record(std::move(out), {a, b}, [an, bn, sb](detail::Node& n) {
        an->accumulate(n.grad);
        Tensor gb = n.grad;
        for (double& v : gb.data) v *= sb;
        bn->accumulate(gb);
      });
    }
    check_broadcast(op, a, b);
    int rows = a.shape()[0], cols = a.shape()[1];
    Tensor out = a.tensor();
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) out.at(i, j) += sb * b.tensor().at(j);
    auto an = a.node(), bn = b.node();
    return record(std::move(out), {a, b}, [an, bn, sb, rows, cols](detail::Node& n) {
      an->accumulate(n.grad);
      Tensor gb = Tensor::zeros(bn->value.shape);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) gb.at(j) += sb * n.grad.at(i, j);
      bn->accumulate(gb);
    });
  }

  std::vector<std::shared_ptr<detail::Node>> ops_;
  bool grad_enabled_ = true;
};

}  // namespace polar
