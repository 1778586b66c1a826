#include <gtest/gtest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "polar/entmax.hpp"
#include "polar/rng.hpp"

using namespace polar;
using polar::testing::rel_err;

namespace {

std::vector<double> random_vec(int n, Rng& rng, double lo = -2.0, double hi = 2.0) {
  std::vector<double> z(static_cast<size_t>(n));
  for (double& v : z) v = rng.uniform(lo, hi);
  return z;
}

std::vector<int> support_of(const std::vector<double>& p) {
  std::vector<int> s;
  for (size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) s.push_back(static_cast<int>(i));
  return s;
}

}  // namespace

TEST(Softmax, UniformAtSymmetry) {
  std::vector<double> p = softmax({0.0, 0.0});
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
  EXPECT_THROW(softmax({}), std::invalid_argument);
}

TEST(Sparsemax, KnownProjections) {
  std::vector<double> a = sparsemax({0.5, 0.5});
  EXPECT_DOUBLE_EQ(a[0], 0.5);
  EXPECT_DOUBLE_EQ(a[1], 0.5);
  std::vector<double> b = sparsemax({1.0, 0.0});
  EXPECT_DOUBLE_EQ(b[0], 1.0);
  EXPECT_DOUBLE_EQ(b[1], 0.0);
  std::vector<double> c = sparsemax({10.0, 0.0});
  EXPECT_DOUBLE_EQ(c[0], 1.0);
  EXPECT_DOUBLE_EQ(c[1], 0.0);
  EXPECT_THROW(sparsemax({}), std::invalid_argument);
}

TEST(Entmax, UniformAtSymmetry) {
  std::vector<double> p = entmax({0.0, 0.0}, 1.5);
  EXPECT_NEAR(p[0], 0.5, 1e-12);
  EXPECT_NEAR(p[1], 0.5, 1e-12);
}

TEST(Entmax, DomainErrors) {
  EXPECT_THROW(entmax({1.0, 0.0}, 1.0), std::invalid_argument);
  EXPECT_THROW(entmax({1.0, 0.0}, 0.5), std::invalid_argument);
  EXPECT_THROW(entmax({1.0, 0.0}, 2.1), std::invalid_argument);
  EXPECT_THROW(entmax({}, 1.5), std::invalid_argument);
}

TEST(Entmax, AlphaTwoMatchesSparsemax) {
  Rng rng(51);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> z = random_vec(16, rng);
    std::vector<double> p = entmax(z, 2.0);
    std::vector<double> q = sparsemax(z);
    for (size_t j = 0; j < z.size(); ++j) EXPECT_NEAR(p[j], q[j], 1e-6);
  }
}

TEST(Entmax, AlphaNearOneMatchesSoftmax) {
  Rng rng(52);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> z = random_vec(16, rng);
    std::vector<double> p = entmax(z, 1.0001);
    std::vector<double> q = softmax(z);
    for (size_t j = 0; j < z.size(); ++j) EXPECT_NEAR(p[j], q[j], 1e-3);
  }
}

TEST(Entmax, OutputsLieOnSimplex) {
  Rng rng(53);
  for (double alpha : {1.1, 1.3, 1.5, 1.7, 1.9, 2.0})
    for (int i = 0; i < 20; ++i) {
      std::vector<double> p = entmax(random_vec(2 + static_cast<int>(rng.below(14)), rng), alpha);
      double sum = 0.0;
      for (double v : p) {
        EXPECT_GE(v, 0.0);
        sum += v;
      }
      EXPECT_NEAR(sum, 1.0, 1e-6);
    }
}

TEST(Entmax, OrderPreserving) {
  Rng rng(54);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> z = random_vec(10, rng);
    std::vector<double> p = entmax(z, 1.6);
    for (size_t a = 0; a < z.size(); ++a)
      for (size_t b = 0; b < z.size(); ++b)
        if (z[a] >= z[b]) EXPECT_GE(p[a], p[b] - 1e-12);
  }
}

TEST(Entmax, SupportShrinksAsAlphaGrows) {
  Rng rng(55);
  std::vector<double> z = random_vec(16, rng);
  size_t prev = z.size() + 1;
  for (double alpha : {1.1, 1.3, 1.5, 1.7, 1.9, 2.0}) {
    size_t sup = support_of(entmax(z, alpha)).size();
    EXPECT_LE(sup, prev) << "alpha=" << alpha;
    prev = sup;
  }
}

TEST(Entmax, ShiftInvarianceExactOnDyadicInputs) {
  // entries and shifts are small dyadic rationals, so z + c*1 is exact and
  // the internal max-subtraction cancels the shift bit-for-bit
  Rng rng(56);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> z(8);
    for (double& v : z) v = static_cast<double>(static_cast<int>(rng.below(33)) - 16) / 8.0;
    for (double c : {0.5, 1.25, -0.75})
      for (double alpha : {1.25, 1.5, 2.0}) {
        std::vector<double> shifted(z);
        for (double& v : shifted) v += c;
        std::vector<double> p = entmax(z, alpha);
        std::vector<double> q = entmax(shifted, alpha);
        for (size_t j = 0; j < z.size(); ++j) EXPECT_EQ(p[j], q[j]);
      }
  }
}

TEST(EntmaxBackward, ConstantUpstreamGivesZero) {
  std::vector<double> p = entmax({0.9, 0.1, -0.4}, 1.5);
  std::vector<double> g = entmax_backward(p, {2.5, 2.5, 2.5}, 1.5);
  for (double v : g) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(EntmaxBackward, DeadEntriesStayDead) {
  std::vector<double> g = entmax_backward({1.0, 0.0}, {0.7, -0.3}, 2.0);
  EXPECT_DOUBLE_EQ(g[1], 0.0);
}

TEST(EntmaxBackward, MatchesFiniteDifferences) {
  Rng rng(57);
  const double step = 1e-5;
  int checked = 0;
  for (int trial = 0; trial < 200 && checked < 30; ++trial) {
    double alpha = 1.2 + 0.7 * rng.uniform();
    std::vector<double> z = random_vec(8, rng);
    std::vector<double> w = random_vec(8, rng, -1.0, 1.0);
    std::vector<double> p = entmax(z, alpha);
    std::vector<int> sup = support_of(p);

    // skip instances where a perturbation flips the support (kink in the map)
    bool boundary = false;
    std::vector<double> numeric(z.size());
    for (size_t j = 0; j < z.size() && !boundary; ++j) {
      std::vector<double> zp(z), zm(z);
      zp[j] += step;
      zm[j] -= step;
      std::vector<double> pp = entmax(zp, alpha), pm = entmax(zm, alpha);
      if (support_of(pp) != sup || support_of(pm) != sup) {
        boundary = true;
        break;
      }
      double lp = 0.0, lm = 0.0;
      for (size_t i = 0; i < z.size(); ++i) {
        lp += w[i] * pp[i];
        lm += w[i] * pm[i];
      }
      numeric[j] = (lp - lm) / (2.0 * step);
    }
    if (boundary) continue;

    std::vector<double> analytic = entmax_backward(p, w, alpha);
    for (size_t j = 0; j < z.size(); ++j)
      EXPECT_LT(rel_err(analytic[j], numeric[j]), 1e-4) << "alpha=" << alpha << " j=" << j;
    ++checked;
  }
  EXPECT_GE(checked, 20);
}

TEST(AlphaParam, InitializesAtOnePointFive) {
  AlphaParam a = AlphaParam::create();
  EXPECT_DOUBLE_EQ(a.alpha(), 1.5);
  EXPECT_GT(AlphaParam::alpha_of(-50.0), 1.0);
  EXPECT_LT(AlphaParam::alpha_of(50.0), 2.0);
}

TEST(AlphaGrad, ZeroAtSymmetricInput) {
  EXPECT_EQ(alpha_grad_raw({0.3, 0.3, 0.3}, 0.0, {1.0, -2.0, 0.5}), 0.0);
}

TEST(AlphaGrad, MatchesDirectFiniteDifference) {
  std::vector<double> z{0.9, 0.2, -0.4, -1.1};
  std::vector<double> w{0.7, -0.3, 0.5, 0.1};
  double raw = 0.3;
  double h = 1e-3;
  auto loss_at = [&](double r) {
    std::vector<double> p = entmax(z, AlphaParam::alpha_of(r));
    double l = 0.0;
    for (size_t i = 0; i < z.size(); ++i) l += w[i] * p[i];
    return l;
  };
  double numeric = (loss_at(raw + h) - loss_at(raw - h)) / (2.0 * h);
  double analytic = alpha_grad_raw(z, raw, w);
  EXPECT_LT(rel_err(analytic, numeric), 1e-3);
  EXPECT_GT(analytic * numeric, 0.0);
}

TEST(AlphaGrad, StepClippedNearDomainEdge) {
  // raw = 12 puts alpha ~2 - 6e-6; the probe step must clip inside (1,2]
  double g = alpha_grad_raw({1.0, 0.2, -0.5}, 12.0, {0.4, -0.1, 0.3});
  EXPECT_TRUE(std::isfinite(g));
}

TEST(EntmaxRows, RowsMatchVectorPath) {
  Tensor z = Tensor::mat(2, 4, {0.9, 0.2, -0.4, -1.1, 1.5, 1.4, -2.0, 0.0});
  Tape t;
  Value raw = make_input(Tensor::scalar(0.0));
  Value P = entmax_rows(t, make_input(z), raw);
  for (int i = 0; i < 2; ++i) {
    std::vector<double> row(4);
    for (int j = 0; j < 4; ++j) row[static_cast<size_t>(j)] = z.at(i, j);
    std::vector<double> p = entmax(row, 1.5);
    for (int j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(P.tensor().at(i, j), p[static_cast<size_t>(j)]);
  }
}

TEST(EntmaxRows, ColumnwiseNormalizesColumns) {
  Tensor z = Tensor::mat(3, 2, {0.9, 0.2, -0.4, 1.1, 0.3, -0.8});
  Tape t;
  Value P = entmax_rows(t, make_input(z), make_input(Tensor::scalar(0.0)), true);
  for (int j = 0; j < 2; ++j) {
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) sum += P.tensor().at(i, j);
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

TEST(EntmaxRows, GradCheckThroughTape) {
  // entries well separated so the 1e-5 probes never cross a support boundary
  Value Z = make_param(Tensor::mat(3, 5,
                                   {1.2, 0.4, -0.6, -1.4, 0.1,
                                    -0.3, 0.8, 1.6, -0.9, 0.2,
                                    0.5, -1.2, 0.9, 1.3, -0.5}));
  Value raw = make_param(Tensor::scalar(0.2));
  Rng rng(58);
  Tensor w = Tensor::zeros({3, 5});
  for (double& v : w.data) v = rng.uniform(-1.0, 1.0);
  Value W = make_input(w);
  auto f = [&](Tape& t) { return t.sum(t.mul(entmax_rows(t, Z, raw), W)); };
  EXPECT_LT(polar::testing::gradcheck(f, {Z, raw}).max_rel_err, 1e-4);
}
