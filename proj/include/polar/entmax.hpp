#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "polar/autograd.hpp"

namespace polar {

inline std::vector<double> softmax(const std::vector<double>& z) {
  if (z.empty()) throw std::invalid_argument("softmax: empty input");
  double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double s = 0.0;
  for (size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] - mx));
  for (double& v : p) v /= s;
  return p;
}

// Euclidean projection onto the probability simplex (closed form via sort).
inline std::vector<double> sparsemax(const std::vector<double>& z) {
  if (z.empty()) throw std::invalid_argument("sparsemax: empty input");
  std::vector<double> sorted(z);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumsum = 0.0, tau = 0.0;
  int support = 0;
  for (size_t k = 0; k < sorted.size(); ++k) {
    cumsum += sorted[k];
    double t = (cumsum - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] > t) {
      tau = t;
      support = static_cast<int>(k + 1);
    }
  }
  (void)support;
  std::vector<double> p(z.size());
  for (size_t i = 0; i < z.size(); ++i) p[i] = std::max(z[i] - tau, 0.0);
  return p;
}

// alpha-entmax for alpha in (1,2]: p_i = [(alpha-1) z_i - tau]_+^{1/(alpha-1)}
// with tau located by 50 bisection steps. alpha=2 reproduces sparsemax;
// alpha->1 approaches softmax (the caller routes alpha<=1 to softmax itself).
inline std::vector<double> entmax(const std::vector<double>& z, double alpha) {
  if (z.empty()) throw std::invalid_argument("entmax: empty input");
  if (!(alpha > 1.0))
    throw std::invalid_argument("entmax: alpha=" + std::to_string(alpha) +
                                " <= 1; route to softmax explicitly");
  if (alpha > 2.0) throw std::invalid_argument("entmax: alpha=" + std::to_string(alpha) + " > 2 unsupported");
  double am1 = alpha - 1.0;
  double inv = 1.0 / am1;
  // shift by max(z) first: tau absorbs constant shifts, so the result is
  // invariant whenever the subtraction itself is exact
  double mz = *std::max_element(z.begin(), z.end());
  std::vector<double> s(z.size());
  for (size_t i = 0; i < z.size(); ++i) s[i] = am1 * (z[i] - mz);
  double lo = -1.0, hi = 0.0;
  auto mass = [&](double tau) {
    double sum = 0.0;
    for (double si : s) {
      double d = si - tau;
      if (d > 0.0) sum += std::pow(d, inv);
    }
    return sum;
  };
  for (int it = 0; it < 50; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mass(mid) >= 1.0)
      lo = mid;
    else
      hi = mid;
  }
  double tau = 0.5 * (lo + hi);
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    double d = s[i] - tau;
    p[i] = d > 0.0 ? std::pow(d, inv) : 0.0;
    sum += p[i];
  }
  // bisection leaves a ~1e-15 residual; rescale onto the simplex
  if (sum > 0.0)
    for (double& v : p) v /= sum;
  return p;
}

// Closed-form Jacobian-vector product of entmax at output p:
//   with s_i = p_i^{2-alpha} on the support, grad = s .* g - (s.g / sum s) s
inline std::vector<double> entmax_backward(const std::vector<double>& p, const std::vector<double>& upstream,
                                           double alpha) {
  if (p.size() != upstream.size())
    throw std::invalid_argument("entmax_backward: size mismatch");
  std::vector<double> s(p.size());
  double ssum = 0.0, sdot = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    s[i] = p[i] > 0.0 ? std::pow(p[i], 2.0 - alpha) : 0.0;
    ssum += s[i];
    sdot += s[i] * upstream[i];
  }
  if (ssum == 0.0) throw std::logic_error("entmax_backward: empty support");
  double ratio = sdot / ssum;
  std::vector<double> g(p.size());
  for (size_t i = 0; i < p.size(); ++i) g[i] = s[i] * (upstream[i] - ratio);
  return g;
}

// Learnable sparsity exponent, kept strictly inside (1,2) via
// alpha = 1 + sigmoid(raw). raw = 0 gives the 1.5 initialization.
struct AlphaParam {
  Value raw;

  static AlphaParam create() { return {make_param(Tensor::scalar(0.0))}; }
  double alpha() const { return alpha_of(raw.tensor().item()); }
  // the sigmoid is clamped so alpha stays strictly inside (1,2) even when
  // extreme raw values would round it onto a boundary
  static double alpha_of(double raw_v) {
    double sg = 1.0 / (1.0 + std::exp(-raw_v));
    return 1.0 + std::min(1.0 - 1e-7, std::max(1e-7, sg));
  }
  static double dalpha_draw(double raw_v) {
    double sg = 1.0 / (1.0 + std::exp(-raw_v));
    return sg * (1.0 - sg);
  }
};

// d loss / d raw for one vector mapped through entmax: central difference on
// alpha (two extra solves, step clipped inside the valid domain) chained with
// the sigmoid derivative.
inline double alpha_grad_raw(const std::vector<double>& z, double raw_v, const std::vector<double>& upstream,
                             double step = 1e-4) {
  double alpha = AlphaParam::alpha_of(raw_v);
  double hi = std::min(alpha + step, 2.0);
  double lo = std::max(alpha - step, 1.0 + 1e-9);
  std::vector<double> phi = entmax(z, hi);
  std::vector<double> plo = entmax(z, lo);
  double dl_dalpha = 0.0;
  for (size_t i = 0; i < z.size(); ++i) dl_dalpha += upstream[i] * (phi[i] - plo[i]);
  dl_dalpha /= (hi - lo);
  return dl_dalpha * AlphaParam::dalpha_draw(raw_v);
}

// Row-wise (or column-wise) entmax over a matrix with a learnable raw-alpha
// scalar. Input gradients use the closed-form Jacobian; the raw gradient uses
// the finite-difference route above, summed over rows.
inline Value entmax_rows(Tape& tape, const Value& Z, const Value& alpha_raw, bool columnwise = false) {
  if (Z.tensor().rank() != 2) throw std::invalid_argument("entmax_rows: rank-2 input required");
  if (alpha_raw.tensor().rank() != 0) throw std::invalid_argument("entmax_rows: alpha raw must be scalar");
  double raw_v = alpha_raw.tensor().item();
  double alpha = AlphaParam::alpha_of(raw_v);
  int rows = Z.shape()[0], cols = Z.shape()[1];
  Tensor out = Tensor::zeros(Z.shape());
  if (!columnwise) {
    for (int i = 0; i < rows; ++i) {
      std::vector<double> zrow(static_cast<size_t>(cols));
      for (int j = 0; j < cols; ++j) zrow[static_cast<size_t>(j)] = Z.tensor().at(i, j);
      std::vector<double> p = entmax(zrow, alpha);
      for (int j = 0; j < cols; ++j) out.at(i, j) = p[static_cast<size_t>(j)];
    }
  } else {
    for (int j = 0; j < cols; ++j) {
      std::vector<double> zcol(static_cast<size_t>(rows));
      for (int i = 0; i < rows; ++i) zcol[static_cast<size_t>(i)] = Z.tensor().at(i, j);
      std::vector<double> p = entmax(zcol, alpha);
      for (int i = 0; i < rows; ++i) out.at(i, j) = p[static_cast<size_t>(i)];
    }
  }
  auto zn = Z.node(), rn = alpha_raw.node();
  return tape.record(std::move(out), {Z, alpha_raw},
                     [zn, rn, raw_v, alpha, rows, cols, columnwise](detail::Node& n) {
    Tensor gz = Tensor::zeros(zn->value.shape);
    double graw = 0.0;
    int outer = columnwise ? cols : rows;
    int inner = columnwise ? rows : cols;
    std::vector<double> zv(static_cast<size_t>(inner)), pv(static_cast<size_t>(inner)),
        up(static_cast<size_t>(inner));
    for (int o = 0; o < outer; ++o) {
      for (int k = 0; k < inner; ++k) {
        int i = columnwise ? k : o;
        int j = columnwise ? o : k;
        zv[static_cast<size_t>(k)] = zn->value.at(i, j);
        pv[static_cast<size_t>(k)] = n.value.at(i, j);
        up[static_cast<size_t>(k)] = n.grad.at(i, j);
      }
      std::vector<double> g = entmax_backward(pv, up, alpha);
      for (int k = 0; k < inner; ++k) {
        int i = columnwise ? k : o;
        int j = columnwise ? o : k;
        gz.at(i, j) = g[static_cast<size_t>(k)];
      }
      if (rn->requires_grad) graw += alpha_grad_raw(zv, raw_v, up);
    }
    zn->accumulate(gz);
    rn->accumulate(Tensor::scalar(graw));
  });
}

}  // namespace polar
