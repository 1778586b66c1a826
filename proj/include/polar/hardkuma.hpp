#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "polar/autograd.hpp"

namespace polar {

// Kumaraswamy stretched to (l, r) and rectified onto [0, 1]. The stretch
// bounds are shared by every edge; only the shapes (a, b) are learned.
struct HardKumaParams {
  double a;
  double b;
  double l = -0.1;
  double r = 1.1;

  void validate() const {
    if (!(a > 0.0) || !(b > 0.0))
      throw std::domain_error("HardKuma: shape parameters must be positive, got a=" + std::to_string(a) +
                              " b=" + std::to_string(b));
    if (!(l < 0.0) || !(r > 1.0))
      throw std::domain_error("HardKuma: stretch bounds need l<0<1<r, got l=" + std::to_string(l) +
                              " r=" + std::to_string(r));
  }
};

namespace detail {
// guard against 0^fractional and log(0)
inline double clamp_unit(double x) { return x < 1e-12 ? 1e-12 : (x > 1.0 ? 1.0 : x); }
}  // namespace detail

inline double kuma_cdf(double k, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("kuma_cdf: shape parameters must be positive");
  if (k < 0.0 || k > 1.0) throw std::domain_error("kuma_cdf: k=" + std::to_string(k) + " outside [0,1]");
  if (k == 0.0) return 0.0;
  if (k == 1.0) return 1.0;
  return 1.0 - std::pow(detail::clamp_unit(1.0 - std::pow(k, a)), b);
}

inline double kuma_pdf(double k, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("kuma_pdf: shape parameters must be positive");
  if (k < 0.0 || k > 1.0) throw std::domain_error("kuma_pdf: k outside [0,1]");
  double ka = std::pow(k, a);
  return a * b * std::pow(k, a - 1.0) * std::pow(detail::clamp_unit(1.0 - ka), b - 1.0);
}

inline double kuma_icdf(double u, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("kuma_icdf: shape parameters must be positive");
  if (u < 0.0 || u > 1.0) throw std::domain_error("kuma_icdf: u=" + std::to_string(u) + " outside [0,1]");
  if (u == 0.0) return 0.0;
  if (u == 1.0) return 1.0;
  return std::pow(detail::clamp_unit(1.0 - std::pow(detail::clamp_unit(1.0 - u), 1.0 / b)), 1.0 / a);
}

// sample -> stretch -> rectify
inline double hardkuma_sample(const HardKumaParams& p, double u) {
  p.validate();
  if (!(u > 0.0) || !(u < 1.0))
    throw std::domain_error("hardkuma_sample: noise u=" + std::to_string(u) + " outside (0,1)");
  double k = kuma_icdf(u, p.a, p.b);
  double t = p.l + (p.r - p.l) * k;
  return t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
}

struct HardKumaGrad {
  double h;
  double dh_da;
  double dh_db;
};

// Sample plus its reparameterization partials. The rectified regions (t<=0 or
// t>=1) carry zero gradient.
inline HardKumaGrad hardkuma_sample_grad(const HardKumaParams& p, double u) {
  p.validate();
  if (!(u > 0.0) || !(u < 1.0))
    throw std::domain_error("hardkuma_sample: noise u=" + std::to_string(u) + " outside (0,1)");
  double one_minus_u = detail::clamp_unit(1.0 - u);
  double q = std::pow(one_minus_u, 1.0 / p.b);
  double c = detail::clamp_unit(1.0 - q);
  double k = std::pow(c, 1.0 / p.a);
  double t = p.l + (p.r - p.l) * k;
  if (t <= 0.0) return {0.0, 0.0, 0.0};
  if (t >= 1.0) return {1.0, 0.0, 0.0};
  double dk_da = -k * std::log(c) / (p.a * p.a);
  double dc_db = q * std::log(one_minus_u) / (p.b * p.b);
  double dk_db = (1.0 / p.a) * std::pow(c, 1.0 / p.a - 1.0) * dc_db;
  double stretch = p.r - p.l;
  return {t, stretch * dk_da, stretch * dk_db};
}

// probability of the sample rectifying to exactly 0 / exactly 1
inline std::pair<double, double> hardkuma_point_masses(const HardKumaParams& p) {
  p.validate();
  double p0 = kuma_cdf(-p.l / (p.r - p.l), p.a, p.b);
  double p1 = 1.0 - kuma_cdf((1.0 - p.l) / (p.r - p.l), p.a, p.b);
  return {p0, p1};
}

// Elementwise reparameterized sampling of a matrix of gates: entry (i,j) is
// drawn from HardKuma(A_ij, B_ij, l, r) with noise U_ij. Gradients flow to A
// and B through the interior samples.
inline Value hardkuma_sample_matrix(Tape& tape, const Value& A, const Value& B, const Tensor& U,
                                    double l, double r) {
  if (A.shape() != B.shape() || A.shape() != U.shape)
    throw std::invalid_argument("hardkuma_sample_matrix: shape mismatch, A=" + A.tensor().shape_str() +
                                " B=" + B.tensor().shape_str() + " U=" + Tensor::shape_str(U.shape));
  size_t n = A.tensor().size();
  Tensor out = Tensor::zeros(A.shape());
  Tensor da = Tensor::zeros(A.shape());
  Tensor db = Tensor::zeros(A.shape());
  for (size_t i = 0; i < n; ++i) {
    HardKumaGrad g = hardkuma_sample_grad({A.tensor().data[i], B.tensor().data[i], l, r}, U.data[i]);
    out.data[i] = g.h;
    da.data[i] = g.dh_da;
    db.data[i] = g.dh_db;
  }
  auto an = A.node(), bn = B.node();
  return tape.record(std::move(out), {A, B}, [an, bn, da, db](detail::Node& nd) {
    Tensor ga = nd.grad, gb = nd.grad;
    for (size_t i = 0; i < ga.data.size(); ++i) {
      ga.data[i] *= da.data[i];
      gb.data[i] *= db.data[i];
    }
    an->accumulate(ga);
    bn->accumulate(gb);
  });
}

}  // namespace polar
