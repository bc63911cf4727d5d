#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "gradcheck.hpp"
#include "ksgan/error.hpp"
#include "ksgan/losses.hpp"
#include "ksgan/metrics.hpp"
#include "ksgan/nn.hpp"

namespace ad = ksgan::ad;
namespace losses = ksgan::losses;
namespace nn = ksgan::nn;
using ksgan::Rng;
using ksgan::Tensor;
using losses::Aggregation;

namespace {

losses::GeneratorLossOptions max_mode() {
  losses::GeneratorLossOptions o;
  o.mode = Aggregation::Max;
  return o;
}

struct Parts {
  double f, g, total;
};

Parts gen_loss(const std::vector<double>& cf, const std::vector<double>& cg, losses::GeneratorLossOptions o) {
  ad::Graph g;
  const auto p = losses::generator_loss(g.leaf(Tensor::vector(cf)), g.leaf(Tensor::vector(cg)), o);
  return {p.loss_f.value().item(), p.loss_g.value().item(), p.total.value().item()};
}

std::vector<double> uniform_values(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

ad::Var linear_critic(ad::Graph& g, const ad::Var& x) {
  return ad::add_scalar(ad::matmul(x, g.constant(Tensor::matrix({{3}, {4}}))), 0.5);
}

}  // namespace

TEST(LevelGrid, SortedUnion) {
  const std::vector<double> a{3, 1}, b{2, 1};
  EXPECT_EQ(losses::level_grid(a, b), (std::vector<double>{1, 1, 2, 3}));
}

TEST(GeneratorLoss, IdenticalMultisetsGiveZero) {
  const auto p = gen_loss({1, 5, 2, 2}, {2, 1, 2, 5}, max_mode());
  EXPECT_EQ(p.total, 0.0);
  EXPECT_EQ(gen_loss({1, 5, 2, 2}, {2, 1, 2, 5}, {}).total, 0.0);
}

TEST(GeneratorLoss, DisjointPairMaxMode) {
  ad::Graph g;
  const auto p = losses::generator_loss(g.leaf(Tensor::vector({1, 2})), g.leaf(Tensor::vector({3, 4})), max_mode());
  EXPECT_EQ(p.loss_f.value().item(), 1.0);
  EXPECT_EQ(p.loss_g.value().item(), 1.0);
  EXPECT_EQ(p.total.value().item(), 2.0);
  EXPECT_EQ(p.argmax_lambda_f, 2.0);
  EXPECT_EQ(p.argmax_lambda_g, 3.0);
}

TEST(GeneratorLoss, DisjointPairMeanMode) {
  const auto p = gen_loss({1, 2}, {3, 4}, {});
  EXPECT_DOUBLE_EQ(p.f, 0.5);
  EXPECT_DOUBLE_EQ(p.g, 0.5);
  EXPECT_DOUBLE_EQ(p.total, 1.0);
}

TEST(GeneratorLoss, IdentityCriticEqualsClassicalKs) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = uniform_values(37, rng);
    auto b = uniform_values(53, rng);
    for (double& x : b) x += 0.3;
    EXPECT_NEAR(gen_loss(a, b, max_mode()).f, ksgan::metrics::ks_two_sample_1d(a, b), 1e-12);
  }
}

TEST(GeneratorLoss, MonotoneTransformInvariance) {
  Rng rng(13);
  const auto a = uniform_values(40, rng);
  const auto b = uniform_values(30, rng);
  auto ta = a, tb = b;
  for (double& x : ta) x = std::exp(x) * 3 + 1;
  for (double& x : tb) x = std::exp(x) * 3 + 1;
  const auto p = gen_loss(a, b, max_mode());
  const auto q = gen_loss(ta, tb, max_mode());
  EXPECT_EQ(p.f, q.f);
  EXPECT_EQ(p.g, q.g);
}

TEST(GeneratorLoss, PermutationInvarianceAndRange) {
  Rng rng(14);
  auto a = uniform_values(25, rng);
  auto b = uniform_values(31, rng);
  const auto p = gen_loss(a, b, {});
  std::reverse(a.begin(), a.end());
  std::rotate(b.begin(), b.begin() + 7, b.end());
  const auto q = gen_loss(a, b, {});
  EXPECT_DOUBLE_EQ(p.total, q.total);
  const auto m = gen_loss(a, b, max_mode());
  EXPECT_GE(m.total, 0.0);
  EXPECT_LE(m.total, 2.0);
}

TEST(GeneratorLoss, EmptyBatchIsAnError) {
  ad::Graph g;
  EXPECT_THROW(losses::generator_loss(g.leaf(Tensor({0})), g.leaf(Tensor::vector({1})), {}), ksgan::ContractError);
}

TEST(GeneratorLoss, StraightThroughGradientClosesTheGap) {
  ad::Graph g;
  auto cf = g.leaf(Tensor::vector({1, 2}));
  auto cg = g.leaf(Tensor::vector({3, 4}));
  const auto p = losses::generator_loss(cf, cg, {});
  const auto grads = ad::grad_values(p.total, {cf, cg});
  // Descent lowers the generated values and raises the real ones.
  for (double v : grads[0].data()) EXPECT_LT(v, 0.0);
  for (double v : grads[1].data()) EXPECT_GT(v, 0.0);
}

TEST(GeneratorLoss, SmoothModeGradientMatchesFiniteDifferences) {
  Rng rng(15);
  const Tensor cf = ksgan::testing::normal_tensor({9}, rng);
  const Tensor cg = ksgan::testing::normal_tensor({7}, rng);
  losses::GeneratorLossOptions o;
  o.indicator = losses::IndicatorKind::Smooth;
  const auto levels = losses::level_grid(cf.data(), cg.data());
  const double err = ksgan::testing::gradcheck(
      [&](ad::Graph&, const std::vector<ad::Var>& v) {
        return losses::generator_loss_at_levels(v[0], v[1], levels, o).total;
      },
      {cf, cg});
  EXPECT_LT(err, 1e-6);
}

TEST(GeneratorLoss, FixedLevelsMatchDefaultGrid) {
  ad::Graph g;
  const std::vector<double> cf = {0.3, -1.2, 2.0}, cg = {0.1, 0.9};
  const auto levels = losses::level_grid(cf, cg);
  const double a = losses::generator_loss(g.leaf(Tensor::vector(cf)), g.leaf(Tensor::vector(cg))).total.value().item();
  const double b = losses::generator_loss_at_levels(g.leaf(Tensor::vector(cf)), g.leaf(Tensor::vector(cg)), levels)
                       .total.value()
                       .item();
  EXPECT_EQ(a, b);
}

TEST(GeneratorLoss, ForwardOnlyMatchesRecordedGraph) {
  Rng rng(33);
  const Tensor cf = ksgan::testing::normal_tensor({40}, rng);
  const Tensor cg = ksgan::testing::normal_tensor({25}, rng);
  for (auto mode : {losses::Aggregation::Max, losses::Aggregation::Mean}) {
    losses::GeneratorLossOptions o;
    o.mode = mode;
    ad::Graph recorded;
    const auto a = losses::generator_loss(recorded.leaf(cf, true), recorded.leaf(cg, true), o);
    ad::Graph plain;
    ad::NoGradGuard guard(plain);
    const auto b = losses::generator_loss(plain.leaf(cf), plain.leaf(cg), o);
    EXPECT_NEAR(a.loss_f.value().item(), b.loss_f.value().item(), 1e-14);
    EXPECT_NEAR(a.loss_g.value().item(), b.loss_g.value().item(), 1e-14);
    if (mode == losses::Aggregation::Max) {
      EXPECT_EQ(a.argmax_lambda_f, b.argmax_lambda_f);
      EXPECT_EQ(a.argmax_lambda_g, b.argmax_lambda_g);
    }
  }
}

TEST(CriticLoss, Examples) {
  ad::Graph g;
  EXPECT_EQ(losses::critic_loss(g.leaf(Tensor::vector({0, 2})), g.leaf(Tensor::vector({3, 5}))).value().item(), 3.0);
  EXPECT_EQ(losses::critic_loss(g.leaf(Tensor::vector({1, 2})), g.leaf(Tensor::vector({2, 1}))).value().item(), 0.0);
  EXPECT_EQ(losses::critic_loss(g.leaf(Tensor::vector({10, 12})), g.leaf(Tensor::vector({13, 15}))).value().item(),
            3.0);
}

TEST(ScorePenalty, LinearCritic) {
  ad::Graph g;
  Rng rng(1);
  const auto critic = [&](const ad::Var& x) { return linear_critic(g, x); };
  const Tensor xf = ksgan::testing::normal_tensor({5, 2}, rng);
  const Tensor xg = ksgan::testing::normal_tensor({3, 2}, rng);
  EXPECT_DOUBLE_EQ(losses::score_penalty(g, critic, xf, xg).value().item(), 50.0);
}

TEST(ScorePenalty, ConstantCritic) {
  ad::Graph g;
  const auto critic = [&](const ad::Var& x) { return ad::scale(ad::sum(x, 1, true), 0.0); };
  EXPECT_EQ(losses::score_penalty(g, critic, Tensor({4, 2}, 1.0), Tensor({4, 2}, -1.0)).value().item(), 0.0);
}

TEST(ScorePenalty, ParameterGradientMatchesFiniteDifferences) {
  Rng rng(16);
  const nn::MlpSpec spec{2, {16}, 1, nn::Activation::LeakyRelu, true, false};
  const auto store = nn::init(spec, rng);
  const Tensor xf = ksgan::testing::normal_tensor({6, 2}, rng);
  const Tensor xg = ksgan::testing::normal_tensor({5, 2}, rng);
  const double err = ksgan::testing::gradcheck_params(
      [&](ad::Graph& g, const nn::Bound& b, nn::ParamStore& s) {
        const auto critic = [&](const ad::Var& x) { return nn::forward(spec, s, b, x); };
        return losses::score_penalty(g, critic, xf, xg);
      },
      store);
  EXPECT_LT(err, 1e-3);
}

TEST(GksEstimate, Examples) {
  const std::vector<double> a{1, 2, 3}, b{3, 1, 2}, c{5, 6};
  EXPECT_EQ(losses::gks_from_values(a, b).value, 0.0);
  const auto e = losses::gks_from_values(a, c);
  EXPECT_EQ(e.value, 1.0);
  EXPECT_EQ(losses::gks_from_values(c, a).value, 1.0);
  EXPECT_THROW(losses::gks_from_values({}, a), ksgan::ContractError);
}

TEST(GksEstimate, MatchesMaxModeLossParts) {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = uniform_values(33, rng);
    const auto b = uniform_values(21, rng);
    const auto p = gen_loss(a, b, max_mode());
    const auto e = losses::gks_from_values(a, b);
    EXPECT_NEAR(e.loss_f, p.f, 1e-15);
    EXPECT_NEAR(e.loss_g, p.g, 1e-15);
    EXPECT_EQ(e.value, std::max(e.loss_f, e.loss_g));
    EXPECT_EQ(losses::gks_from_values(b, a).value, e.value);
  }
}

TEST(GksEstimate, UsesTheCritic) {
  const auto critic = [](const Tensor& x) {
    Tensor out({x.dim(0)});
    for (std::size_t i = 0; i < x.dim(0); ++i) out[i] = x.at(i, 0);
    return out;
  };
  const Tensor f = Tensor::matrix({{0, 9}, {1, -9}});
  const Tensor g = Tensor::matrix({{2, 0}, {3, 0}});
  EXPECT_EQ(losses::gks_estimate(f, g, critic).value, 1.0);
  EXPECT_THROW(losses::gks_estimate(f, Tensor::matrix({{1}}), critic), ksgan::ContractError);
}

TEST(GanLosses, Examples) {
  ad::Graph g;
  const auto sep = losses::gan_losses(g.leaf(Tensor::vector({50, 60})), g.leaf(Tensor::vector({-50, -70})), false);
  EXPECT_LT(sep.critic.value().item(), 1e-20);
  const auto zero = losses::gan_losses(g.leaf(Tensor::vector({0, 0})), g.leaf(Tensor::vector({0})), false);
  EXPECT_NEAR(zero.critic.value().item(), 2 * std::log(2.0), 1e-15);
  EXPECT_NEAR(zero.generator.value().item(), std::log(2.0), 1e-15);
}

TEST(GanLosses, FlipEqualsSwappedBatches) {
  ad::Graph g;
  auto a = g.leaf(Tensor::vector({0.3, -1.2, 2.0}));
  auto b = g.leaf(Tensor::vector({1.1, -0.4}));
  EXPECT_DOUBLE_EQ(losses::gan_losses(a, b, true).critic.value().item(),
                   losses::gan_losses(b, a, false).critic.value().item());
}

TEST(WganGp, UnitLinearCriticHasNoPenalty) {
  ad::Graph g;
  Rng rng(18);
  const auto critic = [&](const ad::Var& x) { return ad::matmul(x, g.constant(Tensor::matrix({{0.6}, {0.8}}))); };
  const Tensor xf = ksgan::testing::normal_tensor({4, 2}, rng);
  const Tensor xg = ksgan::testing::normal_tensor({4, 2}, rng);
  const auto parts = losses::wgan_gp_losses(g, critic, xf, g.constant(xg), 0.1, rng);
  EXPECT_LT(parts.penalty.value().item(), 1e-20);
}

TEST(WganGp, ZeroWeightReducesToCriticLoss) {
  ad::Graph g;
  Rng rng(19);
  const auto critic = [&](const ad::Var& x) { return ad::sum(ad::square(x), 1, true); };
  const Tensor xf = ksgan::testing::normal_tensor({4, 2}, rng);
  const Tensor xg = ksgan::testing::normal_tensor({4, 2}, rng);
  const auto parts = losses::wgan_gp_losses(g, critic, xf, g.constant(xg), 0.0, rng);
  const double expected =
      losses::critic_loss(critic(g.constant(xf)), critic(g.constant(xg))).value().item();
  EXPECT_DOUBLE_EQ(parts.critic.value().item(), expected);
  EXPECT_DOUBLE_EQ(parts.generator.value().item(), -ad::mean(critic(g.constant(xg))).value().item());
}

TEST(WganGp, UnitMixingInterpolatesAtRealPoints) {
  ad::Graph g;
  Rng rng(20);
  const auto critic = [&](const ad::Var& x) { return ad::sum(ad::square(x), 1, true); };
  const Tensor xf = ksgan::testing::normal_tensor({3, 2}, rng);
  const Tensor xg = ksgan::testing::normal_tensor({3, 2}, rng);
  const auto parts = losses::wgan_gp_losses(g, critic, xf, g.constant(xg), 1.0, Tensor({3}, 1.0));
  // Gradient of |x|^2 is 2x, so the penalty is mean((2|x_F| - 1)^2).
  double expected = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double n = 2 * std::hypot(xf.at(i, 0), xf.at(i, 1));
    expected += (n - 1) * (n - 1) / 3;
  }
  EXPECT_NEAR(parts.penalty.value().item(), expected, 1e-9);
}

TEST(WganGp, RequiresPairedBatches) {
  ad::Graph g;
  Rng rng(1);
  const auto critic = [&](const ad::Var& x) { return ad::sum(x, 1, true); };
  EXPECT_THROW(losses::wgan_gp_losses(g, critic, Tensor({3, 2}), g.constant(Tensor({4, 2})), 0.1, rng),
               ksgan::ContractError);
}

TEST(ChiGaussian, OneSidedNearZeroSymmetricNearHalf) {
  Rng rng(21);
  const auto [half, normal] = ksgan::targets::analytic_pair_chi_gaussian(65536, rng);
  const auto d = losses::chi_gaussian_discrepancy(half, normal);
  EXPECT_LE(d.one_sided_sup, 0.02);
  EXPECT_NEAR(d.symmetric_gks, 0.5, 0.02);
}
