#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "heat/attack.hpp"
#include "heat/cgrads.hpp"
#include "heat/dharmo.hpp"
#include "heat/linalg.hpp"
#include "support/test_models.hpp"

namespace heat {
namespace {

using namespace heat::testing;

constexpr double kEps = 8.0 / 255.0;
constexpr double kAlpha = kEps / 10.0;
constexpr double kStab = 1e-8;

void expect_simplex(const WeightVector& w) {
  double total = 0;
  for (double v : w.weights) {
    EXPECT_GE(v, 0.0);
    total += v;
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(IntraWeights, IdenticalModelsAreSymmetric) {
  const auto m = load_model(zoo_path("mlp_a"));
  const std::vector<ClassifierPtr> two{m, m};
  const auto& s = fixture_dataset().samples[0];
  const auto w = intra_weights(two, s.x, s.x, s.y, kAlpha, kEps, kStab);
  EXPECT_EQ(w.kind, WeightKind::Intra);
  EXPECT_NEAR(w[0], 0.5, 1e-12);
  EXPECT_NEAR(w[1], 0.5, 1e-12);
}

TEST(IntraWeights, SingleModel) {
  const std::vector<ClassifierPtr> one{load_model(zoo_path("linear_a"))};
  const auto& s = fixture_dataset().samples[0];
  const auto w = intra_weights(one, s.x, s.x, s.y, kAlpha, kEps, kStab);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0], 1.0);
}

// Scalar oracle: probes, cross losses, log-ratio sums, clamp and normalize,
// spelled out with direct model calls.
TEST(IntraWeights, MatchesScalarOracleOnFixture) {
  const auto models = fixture_surrogates();
  const auto& s = fixture_dataset().samples[0];
  const std::size_t M = models.size(), D = s.x.size();
  std::vector<std::vector<double>> probes(M, std::vector<double>(D));
  for (std::size_t m = 0; m < M; ++m) {
    const auto g = models[m]->loss_and_grad(s.x, s.y).grad;
    for (std::size_t d = 0; d < D; ++d) {
      const double sg = g[d] > 0 ? 1.0 : (g[d] < 0 ? -1.0 : 0.0);
      double v = s.x[d] + kAlpha * sg;
      v = std::min(std::max(v, s.x[d] - kEps), s.x[d] + kEps);
      probes[m][d] = std::min(std::max(v, 0.0), 1.0);
    }
  }
  std::vector<double> raw(M);
  double total = 0;
  for (std::size_t m = 0; m < M; ++m) {
    double acc = 0;
    for (std::size_t j = 0; j < M; ++j) {
      if (j == m) continue;
      acc += std::log(models[j]->loss(probes[m], s.y) + kStab) / (models[j]->loss(probes[j], s.y) + kStab);
    }
    raw[m] = std::max(acc, kStab);
    total += raw[m];
  }
  const auto w = intra_weights(models, s.x, s.x, s.y, kAlpha, kEps, kStab);
  for (std::size_t m = 0; m < M; ++m) EXPECT_NEAR(w[m], raw[m] / total, 1e-9);
}

TEST(IntraWeights, NegativeRawScoresAreClamped) {
  // Every cross loss well below 1 makes each log term negative.
  const auto models = fixture_surrogates();
  const auto& s = fixture_dataset().samples[2];
  const auto w = intra_weights(models, s.x, s.x, s.y, kAlpha, kEps, kStab);
  expect_simplex(w);
}

TEST(LossContributions, Examples) {
  const std::vector<ClassifierPtr> u{std::make_shared<UniformModel>(3, 10)};
  const auto s = loss_contributions(u, ImageTensor::flat({0.1, 0.2, 0.3}), 4, kStab);
  EXPECT_DOUBLE_EQ(s[0], std::log(10.0) + kStab);
  const auto models = fixture_surrogates();
  const auto& x = fixture_dataset().samples[1];
  const auto c = loss_contributions(models, x.x, x.y, kStab);
  for (std::size_t m = 0; m < models.size(); ++m) EXPECT_EQ(c[m], models[m]->loss(x.x, x.y) + kStab);
  const std::vector<ClassifierPtr> twins{models[0], models[0]};
  const auto t = loss_contributions(twins, x.x, x.y, kStab);
  EXPECT_EQ(t[0], t[1]);
}

TEST(AlignmentContributions, Examples) {
  const auto same = alignment_contributions(GradientMatrix::from_rows({{1, 2}, {1, 2}, {1, 2}}), kStab);
  for (double a : same) EXPECT_DOUBLE_EQ(a, 1.0 / (1.0 + kStab));
  const auto ortho = alignment_contributions(GradientMatrix::from_rows({{1, 0}, {0, 1}}), kStab);
  EXPECT_DOUBLE_EQ(ortho[0], 1.0 / kStab);
  EXPECT_DOUBLE_EQ(ortho[1], 1.0 / kStab);
  const auto mix = alignment_contributions(GradientMatrix::from_rows({{1, 0, 0}, {1, 0, 0}, {0, 1, 0}}), kStab);
  EXPECT_DOUBLE_EQ(mix[0], 1.0 / (0.5 + kStab));
  EXPECT_DOUBLE_EQ(mix[1], 1.0 / (0.5 + kStab));
  EXPECT_DOUBLE_EQ(mix[2], 1.0 / kStab);
  EXPECT_HEAT_ERROR(alignment_contributions(GradientMatrix::from_rows({{1, 0}}), kStab),
                    ErrorCode::EnsembleTooSmall);
}

TEST(AlignmentContributions, NegativeMeanFlooredAndZeroRowIgnored) {
  const auto anti = alignment_contributions(GradientMatrix::from_rows({{1, 0}, {-1, 0}}), kStab);
  EXPECT_DOUBLE_EQ(anti[0], 1.0 / kStab);
  const auto zero = alignment_contributions(GradientMatrix::from_rows({{1, 0}, {0, 0}, {1, 0}}), kStab);
  EXPECT_DOUBLE_EQ(zero[0], 1.0 / (0.5 + kStab));
  EXPECT_DOUBLE_EQ(zero[1], 1.0 / kStab);
  for (double a : zero) EXPECT_GT(a, 0.0);
}

TEST(TemperatureNormalize, Examples) {
  const auto t1 = temperature_normalize(std::vector<double>{1, 3}, 1.0);
  EXPECT_DOUBLE_EQ(t1[0], 0.25);
  EXPECT_DOUBLE_EQ(t1[1], 0.75);
  const auto t2 = temperature_normalize(std::vector<double>{1, 3}, 0.5);
  EXPECT_DOUBLE_EQ(t2[0], 0.0625);
  EXPECT_DOUBLE_EQ(t2[1], 0.5625);
  for (double tau : {0.3, 1.0, 2.5}) {
    for (double v : temperature_normalize(std::vector<double>(5, 7.0), tau))
      EXPECT_NEAR(v, std::pow(0.2, 1.0 / tau), 1e-15);
  }
  EXPECT_HEAT_ERROR(temperature_normalize(std::vector<double>{1, 0}, 1.0), ErrorCode::NonPositiveEntry);
  EXPECT_HEAT_ERROR(temperature_normalize(std::vector<double>{1, -2}, 1.0), ErrorCode::NonPositiveEntry);
  EXPECT_HEAT_ERROR(temperature_normalize(std::vector<double>{1, 2}, 0.0), ErrorCode::NonPositiveTau);
}

TEST(EntropyWeights, Examples) {
  const std::vector<double> half(4, 0.5);
  const auto h = contribution_entropies(half, half);
  for (double v : h) EXPECT_NEAR(v, 0.693147, 1e-6);
  const auto w = entropy_weights(half, half, kStab);
  EXPECT_EQ(w.kind, WeightKind::Inter);
  for (double v : w.weights) EXPECT_DOUBLE_EQ(v, 0.25);

  const auto h1 = contribution_entropies(std::vector<double>{1.0}, std::vector<double>{1.0});
  EXPECT_EQ(h1[0], 0.0);
  EXPECT_DOUBLE_EQ(1.0 / (h1[0] + kStab), 1.0 / kStab);

  // H = (0.2, 0.8) is out of reach (H <= 2/e when both entries lie in [0, 1]),
  // so the same 4:1 reciprocal ratio is checked with H = (0.1, 0.4), taking
  // a = s and solving -2 s ln s = H on (0, 1/e].
  auto solve = [](double target) {
    double lo = 1e-12, hi = std::exp(-1.0);
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (-2 * mid * std::log(mid) < target ? lo : hi) = mid;
    }
    return lo;
  };
  const std::vector<double> s{solve(0.1), solve(0.4)};
  const auto hs = contribution_entropies(s, s);
  EXPECT_NEAR(hs[0], 0.1, 1e-12);
  EXPECT_NEAR(hs[1], 0.4, 1e-12);
  const auto w2 = entropy_weights(s, s, 1e-15);
  EXPECT_NEAR(w2[0], 0.8, 1e-9);
  EXPECT_NEAR(w2[1], 0.2, 1e-9);

  EXPECT_HEAT_ERROR(entropy_weights(std::vector<double>{1.5}, std::vector<double>{0.5}, kStab),
                    ErrorCode::OutOfRangeEntry);
  EXPECT_HEAT_ERROR(entropy_weights(std::vector<double>{0.5}, std::vector<double>{-0.1}, kStab),
                    ErrorCode::OutOfRangeEntry);
}

TEST(ContributionProfile, InvariantsOnFixture) {
  const auto models = fixture_surrogates();
  for (std::size_t i = 0; i < 10; ++i) {
    const auto& s = fixture_dataset().samples[i];
    const auto S = loss_contributions(models, s.x, s.y, kStab);
    const auto A = alignment_contributions(build_gradient_matrix(models, s.x, s.y), kStab);
    for (double v : S) EXPECT_GE(v, kStab);
    const auto sn = temperature_normalize(S, 1.0);
    const auto an = temperature_normalize(A, 1.0);
    for (double v : sn) EXPECT_TRUE(v > 0 && v <= 1);
    for (double v : an) EXPECT_TRUE(v > 0 && v <= 1);
    for (double h : contribution_entropies(sn, an)) EXPECT_GE(h, 0.0);
  }
}

TEST(OrderFreeSum, PermutationIndependent) {
  const std::vector<double> a{1e16, 1.0, -1e16, 3.0, 0.1};
  const std::vector<double> b{0.1, 3.0, -1e16, 1.0, 1e16};
  EXPECT_EQ(order_free_sum(a), order_free_sum(b));
}

TEST(WeightVectorType, Uniform) {
  const auto u = WeightVector::uniform(4, WeightKind::Inter);
  expect_simplex(u);
  EXPECT_EQ(u[2], 0.25);
}

}  // namespace
}  // namespace heat
