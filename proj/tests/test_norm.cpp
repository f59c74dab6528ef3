#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support.hpp"

using namespace plg;
using namespace plg::testing;

namespace {

NormSpec uni(NormKind k, double a, Sym2 m = {}) { return NormSpec::uniform(k, 2, 2, a, m); }
constexpr CellIndex c0{0, 0};

}  // namespace

TEST(Norm, PhiExamples) {
  EXPECT_DOUBLE_EQ(uni(NormKind::WeightedEuclidean, 2.0).phi(c0, {3, 4}), 10.0);
  EXPECT_DOUBLE_EQ(uni(NormKind::WeightedL1, 1.0).phi(c0, {1, -2}), 3.0);
  for (auto k : kAllKinds) EXPECT_EQ(uni(k, 1.7, {2, 0.3, 1}).phi(c0, {0, 0}), 0.0);
}

TEST(Norm, PhiErrors) {
  const auto n = uni(NormKind::WeightedEuclidean, 1.0);
  EXPECT_THROW(n.phi({2, 0}, {1, 0}), DomainError);
  EXPECT_THROW(n.phi({0, -1}, {1, 0}), DomainError);
  EXPECT_THROW(n.phi(c0, {std::nan(""), 0}), InputError);
  EXPECT_THROW(n.phi_dual(c0, {std::numeric_limits<double>::infinity(), 0}), InputError);
}

TEST(Norm, SingularMetricIsConfigError) {
  EXPECT_THROW(uni(NormKind::AnisotropicRiemannian, 1.0, {1, 1, 1}), ConfigError);
  EXPECT_THROW(uni(NormKind::AnisotropicRiemannian, 1.0, {1, 0, -1}), ConfigError);
  EXPECT_THROW(uni(NormKind::WeightedEuclidean, 0.0), ConfigError);
}

TEST(Norm, DualExamples) {
  EXPECT_DOUBLE_EQ(uni(NormKind::WeightedEuclidean, 2.0).phi_dual(c0, {0, 4}), 2.0);
  EXPECT_DOUBLE_EQ(uni(NormKind::WeightedL1, 1.0).phi_dual(c0, {1, -2}), 2.0);
  EXPECT_DOUBLE_EQ(uni(NormKind::WeightedLinf, 1.0).phi_dual(c0, {1, -2}), 3.0);
}

TEST(Norm, RiemannianDualAgreesWithSampledSupremum) {
  const auto n = uni(NormKind::AnisotropicRiemannian, 1.0, {4, 0, 1});
  const double sampled = n.support_sample_dual(c0, {2, 0}, 10000);
  EXPECT_NEAR(sampled, 1.0, 1e-3);
  EXPECT_NEAR(n.phi_dual(c0, {2, 0}), sampled, 1e-3);
  EXPECT_NEAR(n.phi_dual(c0, {2, 0}), 1.0, 1e-14);
}

TEST(Norm, SupportSampleExamples) {
  const auto n = uni(NormKind::WeightedEuclidean, 1.0);
  EXPECT_DOUBLE_EQ(n.support_sample_dual(c0, {1, 0}, 4), 1.0);
  for (auto k : kAllKinds) EXPECT_EQ(uni(k, 1.3, {2, 0.5, 1}).support_sample_dual(c0, {0, 0}, 64), 0.0);
  EXPECT_THROW(n.support_sample_dual(c0, {1, 0}, 3), InputError);
}

TEST(Norm, ProjectionExamples) {
  const auto e = uni(NormKind::WeightedEuclidean, 1.0);
  const Vec2 p = e.project_dual_ball(c0, {3, 4});
  EXPECT_NEAR(p.x, 0.6, 1e-15);
  EXPECT_NEAR(p.y, 0.8, 1e-15);
  const Vec2 q = uni(NormKind::WeightedL1, 1.0).project_dual_ball(c0, {2, -0.5});
  EXPECT_EQ(q.x, 1.0);
  EXPECT_EQ(q.y, -0.5);
  const Vec2 r = uni(NormKind::WeightedLinf, 1.0).project_dual_ball(c0, {2, 0.5});
  EXPECT_NEAR(r.x, 1.0, 1e-15);
  EXPECT_NEAR(r.y, 0.0, 1e-15);
  for (auto k : kAllKinds) {
    const auto n = uni(k, 1.0, {2, 0.3, 1});
    const Vec2 in{0.1, -0.2};
    const Vec2 out = n.project_dual_ball(c0, in);
    EXPECT_EQ(out.x, in.x);
    EXPECT_EQ(out.y, in.y);
  }
}

// The ellipse projection is the nearest feasible point: no sampled boundary
// point of the dual ball is closer.
TEST(Norm, RiemannianProjectionIsNearest) {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    const auto n = NormSpec::uniform(NormKind::AnisotropicRiemannian, 1, 1, uniform(rng, 0.5, 2), random_metric(rng));
    const Vec2 b = random_vec(rng, 4.0);
    const Vec2 p = n.project_dual_ball(c0, b);
    EXPECT_LE(n.phi_dual(c0, p), 1.0 + 1e-12);
    const double d = norm2(b - p);
    for (int k = 0; k < 720; ++k) {
      const double th = 2.0 * 3.141592653589793 * k / 720;
      Vec2 q{std::cos(th), std::sin(th)};
      q = q / n.phi_dual(c0, q);
      EXPECT_LE(d, norm2(b - q) + 1e-9);
    }
  }
}

class NormAxioms : public ::testing::TestWithParam<NormKind> {};

TEST_P(NormAxioms, RandomSamples) {
  Rng rng(1234 + static_cast<int>(GetParam()));
  const auto n = random_norm(rng, GetParam(), 4, 4);
  for (int s = 0; s < 1000; ++s) {
    const CellIndex c{static_cast<int>(rng() % 4), static_cast<int>(rng() % 4)};
    const Vec2 xi = random_vec(rng, 3.0), eta = random_vec(rng, 3.0), p = random_vec(rng, 3.0);
    const double t = uniform(rng, -5, 5);
    const double f = n.phi(c, xi);
    EXPECT_NEAR(n.phi(c, xi * t), std::abs(t) * f, 1e-12 * (1 + std::abs(t) * f));
    EXPECT_LE(n.phi(c, xi + eta), f + n.phi(c, eta) + 1e-12);
    EXPECT_LE(dot(xi, p), f * n.phi_dual(c, p) + 1e-12);
    EXPECT_LE(n.beta() * norm2(xi), f + 1e-12);
    EXPECT_LE(f, n.alpha() * norm2(xi) + 1e-12);
    const double fd = n.phi_dual(c, xi);
    EXPECT_LE(norm2(xi) / n.alpha(), fd + 1e-12);
    EXPECT_LE(fd, norm2(xi) / n.beta() + 1e-12);
    const Vec2 q = n.project_dual_ball(c, p);
    EXPECT_LE(n.phi_dual(c, q), 1.0 + 1e-12);
    const Vec2 qq = n.project_dual_ball(c, q);
    EXPECT_NEAR(qq.x, q.x, 1e-12);
    EXPECT_NEAR(qq.y, q.y, 1e-12);
  }
}

TEST_P(NormAxioms, SampledDualBracketsClosedForm) {
  Rng rng(99 + static_cast<int>(GetParam()));
  const auto n = random_norm(rng, GetParam(), 3, 3);
  for (int s = 0; s < 50; ++s) {
    const CellIndex c{static_cast<int>(rng() % 3), static_cast<int>(rng() % 3)};
    const Vec2 xi = random_vec(rng, 2.0);
    const double sampled = n.support_sample_dual(c, xi, 10000);
    const double exact = n.phi_dual(c, xi);
    EXPECT_LE(sampled, exact + 1e-12);
    EXPECT_LE(exact, sampled + 1e-3);
  }
}

INSTANTIATE_TEST_SUITE_P(AllKinds, NormAxioms, ::testing::ValuesIn(kAllKinds),
                         [](const auto& info) { return std::string(to_string(info.param)); });
