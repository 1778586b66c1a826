#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "polar/hardkuma.hpp"
#include "polar/rng.hpp"

using namespace polar;
using polar::testing::rel_err;

TEST(KumaCdf, KnownValues) {
  EXPECT_DOUBLE_EQ(kuma_cdf(0.5, 1.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(kuma_cdf(0.5, 2.0, 2.0), 0.4375);
  EXPECT_DOUBLE_EQ(kuma_cdf(0.0, 3.0, 0.4), 0.0);
  EXPECT_DOUBLE_EQ(kuma_cdf(1.0, 3.0, 0.4), 1.0);
}

TEST(KumaCdf, DomainErrors) {
  EXPECT_THROW(kuma_cdf(-0.1, 1.0, 1.0), std::domain_error);
  EXPECT_THROW(kuma_cdf(1.1, 1.0, 1.0), std::domain_error);
  EXPECT_THROW(kuma_cdf(0.5, 0.0, 1.0), std::domain_error);
  EXPECT_THROW(kuma_cdf(0.5, 1.0, -2.0), std::domain_error);
}

TEST(KumaIcdf, KnownValues) {
  EXPECT_DOUBLE_EQ(kuma_icdf(0.25, 1.0, 1.0), 0.25);
  EXPECT_DOUBLE_EQ(kuma_icdf(0.0, 2.5, 0.7), 0.0);
  EXPECT_DOUBLE_EQ(kuma_icdf(1.0, 2.5, 0.7), 1.0);
  EXPECT_THROW(kuma_icdf(-0.5, 1.0, 1.0), std::domain_error);
}

TEST(KumaIcdf, RoundtripAcrossShapeGrid) {
  const double shapes[] = {0.3, 1.0, 2.5, 7.0};
  for (double a : shapes)
    for (double b : shapes)
      for (int i = 1; i <= 99; ++i) {
        double u = i / 100.0;
        double back = kuma_cdf(kuma_icdf(u, a, b), a, b);
        EXPECT_NEAR(back, u, 1e-9) << "a=" << a << " b=" << b << " u=" << u;
      }
}

TEST(KumaPdf, MonotoneCdfSlope) {
  // pdf is the derivative of the cdf; spot-check by central difference
  for (double k : {0.2, 0.5, 0.8}) {
    double fd = (kuma_cdf(k + 1e-6, 2.5, 0.7) - kuma_cdf(k - 1e-6, 2.5, 0.7)) / 2e-6;
    EXPECT_LT(rel_err(kuma_pdf(k, 2.5, 0.7), fd), 1e-5);
  }
}

TEST(HardKumaSample, ClosedFormUniformCase) {
  HardKumaParams p{1.0, 1.0};
  EXPECT_DOUBLE_EQ(hardkuma_sample(p, 0.5), 0.5);
  // u = 1/24 stretches to t = -0.05 and rectifies to exactly 0
  EXPECT_EQ(hardkuma_sample(p, 1.0 / 24.0), 0.0);
  // u = 23/24 stretches to t = 1.05 and rectifies to exactly 1
  EXPECT_EQ(hardkuma_sample(p, 23.0 / 24.0), 1.0);
}

TEST(HardKumaSample, ParamValidation) {
  EXPECT_THROW(hardkuma_sample({0.0, 1.0}, 0.5), std::domain_error);
  EXPECT_THROW(hardkuma_sample({1.0, -1.0}, 0.5), std::domain_error);
  EXPECT_THROW(hardkuma_sample({1.0, 1.0, 0.1, 1.1}, 0.5), std::domain_error);
  EXPECT_THROW(hardkuma_sample({1.0, 1.0, -0.1, 0.9}, 0.5), std::domain_error);
  EXPECT_THROW(hardkuma_sample({1.0, 1.0}, 0.0), std::domain_error);
  EXPECT_THROW(hardkuma_sample({1.0, 1.0}, 1.0), std::domain_error);
}

TEST(HardKumaSample, RectificationMatchesStretchSign) {
  Rng rng(42);
  for (int i = 0; i < 2000; ++i) {
    HardKumaParams p{rng.uniform(0.2, 5.0), rng.uniform(0.2, 5.0)};
    double u = rng.uniform_open();
    double t = p.l + (p.r - p.l) * kuma_icdf(u, p.a, p.b);
    double h = hardkuma_sample(p, u);
    EXPECT_GE(h, 0.0);
    EXPECT_LE(h, 1.0);
    if (t <= 0.0) EXPECT_EQ(h, 0.0);
    if (t >= 1.0) EXPECT_EQ(h, 1.0);
    if (t > 0.0 && t < 1.0) EXPECT_DOUBLE_EQ(h, t);
  }
}

TEST(HardKumaPointMasses, UniformCaseIsOneTwelfth) {
  auto [p0, p1] = hardkuma_point_masses({1.0, 1.0});
  EXPECT_NEAR(p0, 1.0 / 12.0, 1e-15);
  EXPECT_NEAR(p1, 1.0 / 12.0, 1e-15);
}

TEST(HardKumaPointMasses, LargeAShiftsMassUp) {
  auto [p0_a50, p1_a50] = hardkuma_point_masses({50.0, 1.0});
  auto [p0_a1, p1_a1] = hardkuma_point_masses({1.0, 1.0});
  (void)p0_a50;
  (void)p0_a1;
  EXPECT_GT(p1_a50, p1_a1);
}

TEST(HardKumaPointMasses, MassesPlusDensityIntegrateToOne) {
  // interior density of the stretched variable: f_K((x-l)/(r-l)) / (r-l)
  const double pairs[][2] = {{1.0, 1.0}, {2.5, 0.7}, {0.3, 7.0}, {7.0, 2.5}};
  for (auto& ab : pairs) {
    HardKumaParams p{ab[0], ab[1]};
    auto [p0, p1] = hardkuma_point_masses(p);
    const int n = 10000;
    double integral = 0.0;
    auto dens = [&](double x) { return kuma_pdf((x - p.l) / (p.r - p.l), p.a, p.b) / (p.r - p.l); };
    for (int i = 0; i < n; ++i) {
      double x0 = static_cast<double>(i) / n;
      double x1 = static_cast<double>(i + 1) / n;
      integral += 0.5 * (dens(x0) + dens(x1)) * (x1 - x0);
    }
    EXPECT_NEAR(p0 + p1 + integral, 1.0, 1e-3) << "a=" << p.a << " b=" << p.b;
  }
}

TEST(HardKumaPointMasses, MonteCarloZeroFrequency) {
  HardKumaParams p{1.3, 0.8};
  auto [p0, p1] = hardkuma_point_masses(p);
  (void)p1;
  const int n = 100000;
  Rng rng(2024);
  int zeros = 0;
  for (int i = 0; i < n; ++i)
    if (hardkuma_sample(p, rng.uniform_open()) == 0.0) ++zeros;
  double freq = static_cast<double>(zeros) / n;
  double se = std::sqrt(p0 * (1.0 - p0) / n);
  EXPECT_NEAR(freq, p0, 3.0 * se);
}

TEST(HardKumaGradients, MatchFiniteDifferences) {
  Rng rng(77);
  const double step = 1e-5;
  int checked = 0;
  for (int i = 0; i < 400 && checked < 40; ++i) {
    HardKumaParams p{rng.uniform(0.3, 3.0), rng.uniform(0.3, 3.0)};
    double u = rng.uniform(0.05, 0.95);
    HardKumaGrad g = hardkuma_sample_grad(p, u);
    if (g.h <= 0.0 || g.h >= 1.0) continue;
    double ha_p = hardkuma_sample({p.a + step, p.b}, u);
    double ha_m = hardkuma_sample({p.a - step, p.b}, u);
    double hb_p = hardkuma_sample({p.a, p.b + step}, u);
    double hb_m = hardkuma_sample({p.a, p.b - step}, u);
    if (ha_p <= 0.0 || ha_p >= 1.0 || ha_m <= 0.0 || ha_m >= 1.0) continue;
    if (hb_p <= 0.0 || hb_p >= 1.0 || hb_m <= 0.0 || hb_m >= 1.0) continue;
    EXPECT_LT(rel_err(g.dh_da, (ha_p - ha_m) / (2.0 * step)), 1e-4)
        << "a=" << p.a << " b=" << p.b << " u=" << u;
    EXPECT_LT(rel_err(g.dh_db, (hb_p - hb_m) / (2.0 * step)), 1e-4)
        << "a=" << p.a << " b=" << p.b << " u=" << u;
    ++checked;
  }
  EXPECT_GE(checked, 20);
}

TEST(HardKumaGradients, RectifiedRegionsAreFlat) {
  HardKumaParams p{1.0, 1.0};
  HardKumaGrad lo = hardkuma_sample_grad(p, 1.0 / 48.0);
  EXPECT_EQ(lo.h, 0.0);
  EXPECT_EQ(lo.dh_da, 0.0);
  EXPECT_EQ(lo.dh_db, 0.0);
  HardKumaGrad hi = hardkuma_sample_grad(p, 47.0 / 48.0);
  EXPECT_EQ(hi.h, 1.0);
  EXPECT_EQ(hi.dh_da, 0.0);
  EXPECT_EQ(hi.dh_db, 0.0);
}

TEST(HardKumaMatrix, ForwardMatchesScalarPath) {
  Rng rng(9);
  Tensor a = Tensor::zeros({3, 3}), b = Tensor::zeros({3, 3}), u = Tensor::zeros({3, 3});
  for (size_t i = 0; i < a.data.size(); ++i) {
    a.data[i] = rng.uniform(0.5, 2.0);
    b.data[i] = rng.uniform(0.5, 2.0);
    u.data[i] = rng.uniform(0.05, 0.95);
  }
  Tape t;
  Value E = hardkuma_sample_matrix(t, make_input(a), make_input(b), u, -0.1, 1.1);
  for (size_t i = 0; i < a.data.size(); ++i)
    EXPECT_DOUBLE_EQ(E.tensor().data[i],
                     hardkuma_sample({a.data[i], b.data[i], -0.1, 1.1}, u.data[i]));
}

TEST(HardKumaMatrix, GradCheckThroughTape) {
  Rng rng(10);
  Tensor u = Tensor::zeros({3, 3});
  for (double& v : u.data) v = rng.uniform(0.2, 0.8);
  Value A = make_param(Tensor::full({3, 3}, 1.2));
  Value B = make_param(Tensor::full({3, 3}, 0.9));
  for (double& v : A.tensor().data) v += rng.uniform(-0.2, 0.2);
  for (double& v : B.tensor().data) v += rng.uniform(-0.2, 0.2);
  Tensor w = Tensor::zeros({3, 3});
  for (double& v : w.data) v = rng.uniform(-1.0, 1.0);
  Value W = make_input(w);
  auto f = [&](Tape& t) { return t.sum(t.mul(hardkuma_sample_matrix(t, A, B, u, -0.1, 1.1), W)); };
  EXPECT_LT(polar::testing::gradcheck(f, {A, B}).max_rel_err, 1e-4);
}

TEST(HardKumaMatrix, SeededNoiseReproducesSamples) {
  auto draw = [] {
    Rng rng(123);
    Tensor u = Tensor::zeros({4, 4});
    for (double& v : u.data) v = rng.uniform_open();
    Tape t;
    Value E = hardkuma_sample_matrix(t, make_input(Tensor::full({4, 4}, 1.1)),
                                     make_input(Tensor::full({4, 4}, 0.8)), u, -0.1, 1.1);
    return E.tensor();
  };
  Tensor e1 = draw(), e2 = draw();
  for (size_t i = 0; i < e1.data.size(); ++i) EXPECT_EQ(e1.data[i], e2.data[i]);
}
