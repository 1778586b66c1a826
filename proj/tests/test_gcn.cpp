#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "gradcheck.hpp"
#include "polar/gcn.hpp"

using namespace polar;

namespace {

Tensor random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  Tensor t = Tensor::zeros({rows, cols});
  for (double& v : t.data) v = rng.gaussian() * scale;
  return t;
}

Tensor row_stochastic(int K, Rng& rng) {
  Tensor e = Tensor::zeros({K, K});
  for (int i = 0; i < K; ++i) {
    double s = 0.0;
    for (int j = 0; j < K; ++j) {
      e.at(i, j) = rng.uniform(0.0, 1.0);
      s += e.at(i, j);
    }
    for (int j = 0; j < K; ++j) e.at(i, j) /= s;
  }
  return e;
}

Tensor permute_rows(const Tensor& m, const std::vector<int>& perm) {
  Tensor out = Tensor::zeros(m.shape);
  for (int i = 0; i < m.shape[0]; ++i)
    for (int j = 0; j < m.shape[1]; ++j) out.at(i, j) = m.at(perm[i], j);
  return out;
}

Tensor permute_both(const Tensor& m, const std::vector<int>& perm) {
  Tensor out = Tensor::zeros(m.shape);
  for (int i = 0; i < m.shape[0]; ++i)
    for (int j = 0; j < m.shape[1]; ++j) out.at(i, j) = m.at(perm[i], perm[j]);
  return out;
}

}  // namespace

TEST(GcnLayer, IsolatedNodesWithIdentityWeightsPassThrough) {
  // E = 0 leaves only the self-loop: degree 1, message = r itself
  Tape t;
  Tensor r = Tensor::mat(3, 2, {0.5, 1.0, 2.0, 0.25, 3.0, 0.125});
  Value out = gcn_layer(t, make_input(r), make_input(Tensor::zeros({3, 3})),
                        make_input(Tensor::identity(2)), make_input(Tensor::zeros({2})));
  for (size_t i = 0; i < r.data.size(); ++i) EXPECT_DOUBLE_EQ(out.tensor().data[i], r.data[i]);
}

TEST(GcnLayer, NegativePreActivationsDie) {
  Tape t;
  Tensor r = Tensor::full({3, 2}, 0.7);
  Tensor w = Tensor::zeros({2, 2});
  w.at(0, 0) = -1.0;
  w.at(1, 1) = -1.0;
  Value out = gcn_layer(t, make_input(r), make_input(Tensor::zeros({3, 3})), make_input(w),
                        make_input(Tensor::zeros({2})));
  for (double v : out.tensor().data) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(GcnLayer, PermutationEquivariant) {
  Rng rng(21);
  Tensor r = random_matrix(5, 4, rng);
  Tensor e = row_stochastic(5, rng);
  Tensor w = random_matrix(4, 3, rng);
  Tensor b = Tensor::zeros({3});
  for (int j = 0; j < 3; ++j) b.at(j) = rng.gaussian() * 0.1;
  std::vector<int> perm = {3, 0, 4, 1, 2};

  Tape t;
  Value base = gcn_layer(t, make_input(r), make_input(e), make_input(w), make_input(b));
  Value permuted = gcn_layer(t, make_input(permute_rows(r, perm)), make_input(permute_both(e, perm)),
                             make_input(w), make_input(b));
  Tensor want = permute_rows(base.tensor(), perm);
  for (size_t i = 0; i < want.data.size(); ++i)
    EXPECT_NEAR(permuted.tensor().data[i], want.data[i], 1e-12);
}

TEST(GcnLayer, ShapeValidation) {
  Tape t;
  Value r = make_input(Tensor::zeros({3, 2}));
  Value e = make_input(Tensor::zeros({3, 3}));
  EXPECT_THROW(gcn_layer(t, r, make_input(Tensor::zeros({3, 4})), make_input(Tensor::identity(2)),
                         make_input(Tensor::zeros({2}))),
               std::invalid_argument);
  EXPECT_THROW(gcn_layer(t, r, make_input(Tensor::zeros({4, 4})), make_input(Tensor::identity(2)),
                         make_input(Tensor::zeros({2}))),
               std::invalid_argument);
  EXPECT_THROW(
      gcn_layer(t, r, e, make_input(Tensor::identity(3)), make_input(Tensor::zeros({3}))),
      std::invalid_argument);
}

TEST(GcnStack, OneLayerMatchesDirectCall) {
  GcnConfig cfg;
  cfg.layers = 1;
  cfg.hidden = 6;
  Rng rng(22);
  GcnStack stack(4, cfg, rng);
  std::vector<std::pair<std::string, Value>> params;
  stack.collect_params("gcn", params);
  ASSERT_EQ(params.size(), 2u);

  Rng data_rng(23);
  Tensor h = random_matrix(5, 4, data_rng);
  Tensor e = row_stochastic(5, data_rng);
  Tape t;
  Value via_stack = stack(t, make_input(h), make_input(e));
  Value direct = gcn_layer(t, make_input(h), make_input(e), params[0].second, params[1].second);
  EXPECT_EQ(via_stack.shape(), (std::vector<int>{5, 6}));
  for (size_t i = 0; i < via_stack.tensor().data.size(); ++i)
    EXPECT_EQ(via_stack.tensor().data[i], direct.tensor().data[i]);
}

TEST(GcnStack, DefaultConfigProducesWideOutput) {
  GcnConfig cfg;
  Rng rng(24);
  GcnStack stack(96, cfg, rng);
  Rng data_rng(25);
  Tape t;
  Value out = stack(t, make_input(random_matrix(4, 96, data_rng, 0.2)),
                    make_input(row_stochastic(4, data_rng)));
  EXPECT_EQ(out.shape(), (std::vector<int>{4, 350}));
  EXPECT_TRUE(all_finite(out.tensor()));
}

TEST(GcnStack, TwoLayersReachTwoHopNeighbours) {
  // chain 0 <- 1 <- 2: node 0 sees node 2 only through the second layer
  GcnConfig cfg;
  cfg.hidden = 5;
  Rng rng(26);
  Tensor e = Tensor::zeros({3, 3});
  e.at(0, 1) = 1.0;
  e.at(1, 2) = 1.0;
  Rng data_rng(27);
  Tensor h = random_matrix(3, 5, data_rng, 0.5);
  Tensor h2 = h;
  h2.at(2, 3) += 1.0;

  auto run = [&](int layers, const Tensor& feats) {
    GcnConfig c = cfg;
    c.layers = layers;
    Rng wr(26);
    GcnStack stack(5, c, wr);
    Tape t;
    return stack(t, make_input(feats), make_input(e)).tensor();
  };
  Tensor one_a = run(1, h), one_b = run(1, h2);
  for (int j = 0; j < 5; ++j) EXPECT_EQ(one_a.at(0, j), one_b.at(0, j));
  Tensor two_a = run(2, h), two_b = run(2, h2);
  double diff = 0.0;
  for (int j = 0; j < 5; ++j) diff += std::fabs(two_a.at(0, j) - two_b.at(0, j));
  EXPECT_GT(diff, 1e-9);
}

TEST(GatedFusion, GateBoundaries) {
  Tape t;
  Value r = make_input(Tensor::full({2, 3}, 2.0));
  Value h = make_input(Tensor::full({2, 3}, -1.0));
  // zero gate weights: sigmoid(0) = 1/2, the plain average
  Value mid = gated_fusion(t, r, h, make_input(Tensor::zeros({6, 3})));
  for (double v : mid.tensor().data) EXPECT_DOUBLE_EQ(v, 0.5);
  // saturated gate logits pick one side
  Value open = gated_fusion(t, r, h, make_input(Tensor::full({6, 3}, 60.0)));
  for (double v : open.tensor().data) EXPECT_NEAR(v, 2.0, 1e-9);
  Value closed = gated_fusion(t, r, h, make_input(Tensor::full({6, 3}, -60.0)));
  for (double v : closed.tensor().data) EXPECT_NEAR(v, -1.0, 1e-9);
  EXPECT_THROW(gated_fusion(t, r, h, make_input(Tensor::zeros({5, 3}))), std::invalid_argument);
  EXPECT_THROW(gated_fusion(t, r, make_input(Tensor::zeros({3, 3})), make_input(Tensor::zeros({6, 3}))),
               std::invalid_argument);
}

TEST(AdditiveFusion, PlainSum) {
  Tape t;
  Rng rng(28);
  Tensor r = random_matrix(3, 4, rng), h = random_matrix(3, 4, rng);
  Value out = additive_fusion(t, make_input(r), make_input(h));
  for (size_t i = 0; i < r.data.size(); ++i)
    EXPECT_DOUBLE_EQ(out.tensor().data[i], r.data[i] + h.data[i]);
  EXPECT_THROW(additive_fusion(t, make_input(r), make_input(Tensor::zeros({4, 4}))),
               std::invalid_argument);
}

TEST(Gcn, StackAndFusionGradientsMatchFiniteDifferences) {
  GcnConfig cfg;
  cfg.layers = 2;
  cfg.hidden = 4;
  Rng rng(29);
  GcnStack stack(4, cfg, rng);
  Value h = make_param(random_matrix(5, 4, rng, 0.6));
  Value e = make_param(row_stochastic(5, rng));
  Value w2 = make_param(random_matrix(8, 4, rng, 0.4));
  Tensor pick = random_matrix(5, 4, rng);

  std::vector<std::pair<std::string, Value>> named;
  stack.collect_params("gcn", named);
  std::vector<Value> params{h, e, w2};
  for (auto& [name, val] : named) params.push_back(val);

  auto f = [&](Tape& t) {
    Value r = stack(t, h, e);
    Value fused = gated_fusion(t, r, h, w2);
    return t.sum(t.mul(fused, make_input(pick)));
  };
  EXPECT_LT(polar::testing::gradcheck(f, params).max_rel_err, 1e-4);
}
