#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qatlab/stats.hpp"

using namespace qatlab;

namespace {

// Closed forms evaluated at 30 significant digits.
constexpr double kRdfsE021 = 0.302457430973864;
constexpr double kRdfsV021 = 0.0722108171468124;
constexpr double kRdfsE010 = 0.578135763029017;
constexpr double kRdfsV010 = 0.0323889774634516;
constexpr double kRdfsV0224 = 0.0762150436158921;
constexpr double kDsqV05 = 0.00706126461243388;
constexpr double kSech4At1 = 1.22869221075743;

}  // namespace

TEST(ClosedForm, RdfsFrozenValues) {
  EXPECT_NEAR(expectation_closed(SurrogateSpec::rdfs(0.21)), kRdfsE021, 1e-13);
  EXPECT_NEAR(variance_closed(SurrogateSpec::rdfs(0.21)).value(), kRdfsV021, 1e-13);
  EXPECT_NEAR(expectation_closed(SurrogateSpec::rdfs(0.10)), kRdfsE010, 1e-13);
  EXPECT_NEAR(variance_closed(SurrogateSpec::rdfs(0.10)).value(), kRdfsV010, 1e-13);
  EXPECT_NEAR(variance_closed(SurrogateSpec::rdfs(0.224)).value(), kRdfsV0224, 1e-12);
}

TEST(ClosedForm, ZeroAmplitudeIsSte) {
  EXPECT_NEAR(expectation_closed(SurrogateSpec::rdfs(0.0)), 1.0, 1e-15);
  EXPECT_NEAR(variance_closed(SurrogateSpec::rdfs(0.0)).value(), 0.0, 1e-15);
  EXPECT_EQ(expectation_closed(SurrogateSpec::ste()), 1.0);
  EXPECT_EQ(variance_closed(SurrogateSpec::ste()).value(), 0.0);
}

TEST(ClosedForm, Dsq) {
  for (int i = 1; i <= 100; ++i) EXPECT_EQ(expectation_closed(SurrogateSpec::dsq(i / 101.0)), 1.0);
  EXPECT_NEAR(variance_closed(SurrogateSpec::dsq(0.5)).value(), kDsqV05, 1e-15);
  EXPECT_NEAR(variance_closed(SurrogateSpec::dsq(0.5)).value(), std::log(3.0) * 2.75 / 3.0 - 1.0, 1e-15);
  EXPECT_NEAR(variance_closed(SurrogateSpec::dsq(1e-3)).value(), 1.53853818372831, 1e-12);
  EXPECT_NEAR(variance_closed(SurrogateSpec::dsq(1e-6)).value(), 3.83622875195344, 1e-12);
  EXPECT_GT(variance_closed(SurrogateSpec::dsq(1e-9)).value(), variance_closed(SurrogateSpec::dsq(1e-3)).value());
}

TEST(ClosedForm, UnsupportedSpecs) {
  EXPECT_THROW(expectation_closed(SurrogateSpec::rdfs(0.21, 1)), UnsupportedSpecError);
  EXPECT_THROW(variance_closed(SurrogateSpec::rdfs(0.21, 2)), UnsupportedSpecError);
  EXPECT_THROW(variance_closed(SurrogateSpec::rdfs_ablation(0.25)), UnsupportedSpecError);
  EXPECT_NO_THROW(variance_closed(SurrogateSpec::rdfs_ablation(0.2)));
}

TEST(ClosedForm, IndependentOfRange) {
  const auto spec = SurrogateSpec::dsq(0.3);
  const auto a = monte_carlo_stats(spec, -1, 1, 1000, 1, 3, 1);
  const auto b = monte_carlo_stats(spec, 0.5, 9, 1000, 1, 5, 1);
  EXPECT_EQ(*a.expectation_closed, *b.expectation_closed);
  EXPECT_EQ(*a.variance_closed, *b.variance_closed);
}

TEST(ClosedForm, ContinuousInAmplitude) {
  double pe = expectation_closed(SurrogateSpec::rdfs(0.0));
  double pv = variance_closed(SurrogateSpec::rdfs(0.0)).value();
  for (int i = 1; i <= 225; ++i) {
    const auto s = SurrogateSpec::rdfs(i * 1e-3);
    const double e = expectation_closed(s), v = variance_closed(s).value();
    EXPECT_LT(std::abs(e - pe), 0.05);
    EXPECT_LT(std::abs(v - pv), 0.05);
    pe = e;
    pv = v;
  }
}

TEST(Limits, Values) {
  EXPECT_EQ(expectation_limit(SurrogateKind::dsq), 1.0);
  EXPECT_NEAR(expectation_limit(SurrogateKind::rdfs), 4.0 / std::numbers::pi - 1.0, 1e-16);
  EXPECT_NEAR(expectation_limit(SurrogateKind::rdfs), 0.273240, 1e-6);
  EXPECT_TRUE(variance_limit(SurrogateKind::dsq).is_infinite());
  EXPECT_THROW(variance_limit(SurrogateKind::dsq).value(), DomainError);
  EXPECT_EQ(variance_limit(SurrogateKind::dsq).to_string(), "inf");
  EXPECT_NEAR(variance_limit(SurrogateKind::rdfs).value(), 0.0765137880361459, 1e-15);
  EXPECT_THROW(expectation_limit(SurrogateKind::ste), DomainError);
  EXPECT_THROW(variance_limit(SurrogateKind::ste), DomainError);
}

TEST(Limits, ApproachedNearBoundary) {
  const auto spec = SurrogateSpec::rdfs((1 - 1e-8) / (std::numbers::sqrt2 * std::numbers::pi));
  EXPECT_NEAR(expectation_closed(spec), expectation_limit(SurrogateKind::rdfs), 1e-3);
  EXPECT_NEAR(variance_closed(spec).value(), variance_limit(SurrogateKind::rdfs).value(), 1e-2);
  const auto spec4 = SurrogateSpec::rdfs(0.9999 / (std::numbers::sqrt2 * std::numbers::pi));
  EXPECT_NEAR(variance_closed(spec4).value(), 0.07651, 1e-2);
}

TEST(ReferenceIntegral, Examples) {
  EXPECT_NEAR(reference_integral(IntegralKind::cosine_linear, 0.0), std::numbers::pi, 1e-15);
  EXPECT_NEAR(reference_integral(IntegralKind::cosine_quadratic, 0.0), std::numbers::pi, 1e-15);
  EXPECT_NEAR(reference_integral(IntegralKind::sech4, 1.0), kSech4At1, 1e-14);
  EXPECT_THROW(reference_integral(IntegralKind::cosine_linear, 1.0), DomainError);
  EXPECT_THROW(reference_integral(IntegralKind::cosine_quadratic, -1.2), DomainError);
  EXPECT_THROW(reference_integral(IntegralKind::sech4, 0.0), DomainError);
}

TEST(MonteCarlo, SteIsExact) {
  const auto r = monte_carlo_stats(SurrogateSpec::ste(), -1, 1, 5000, 3);
  EXPECT_EQ(r.expectation_mc, 1.0);
  EXPECT_EQ(r.variance_mc, 0.0);
  EXPECT_EQ(r.mc_stderr_mean, 0.0);
  EXPECT_EQ(r.mc_samples, 5000u);
}

TEST(MonteCarlo, DsqAndRdfsAgreeWithClosedForms) {
  for (const auto& spec : {SurrogateSpec::dsq(0.5), SurrogateSpec::rdfs(0.21)}) {
    const auto r = monte_carlo_stats(spec, -1.3, 0.9, 1'000'000, 17);
    EXPECT_LE(std::abs(r.expectation_mc - *r.expectation_closed), 4 * r.mc_stderr_mean) << spec.label();
    const double v = r.variance_closed->value();
    EXPECT_LE(std::abs(r.variance_mc - v), 0.05 * std::max(v, 0.01)) << spec.label();
  }
}

TEST(MonteCarlo, StderrDefinition) {
  const auto r = monte_carlo_stats(SurrogateSpec::dsq(0.2), 0, 1, 12345, 4);
  EXPECT_DOUBLE_EQ(r.mc_stderr_mean, std::sqrt(r.variance_mc / 12345.0));
  EXPECT_EQ(r.seed, 4u);
}

TEST(MonteCarlo, WorkerCountDoesNotChangeResult) {
  const auto spec = SurrogateSpec::rdfs(0.14);
  const auto a = monte_carlo_stats(spec, -2, 2, 300'000, 99, 3, 1);
  const auto b = monte_carlo_stats(spec, -2, 2, 300'000, 99, 3, 4);
  const auto c = monte_carlo_stats(spec, -2, 2, 300'000, 99, 3, 3);
  EXPECT_EQ(a.expectation_mc, b.expectation_mc);
  EXPECT_EQ(a.variance_mc, b.variance_mc);
  EXPECT_EQ(a.expectation_mc, c.expectation_mc);
  EXPECT_EQ(a.variance_mc, c.variance_mc);
}

TEST(MonteCarlo, HigherOrderHasNoClosedForm) {
  const auto r = monte_carlo_stats(SurrogateSpec::rdfs(0.21, 1), -1, 1, 2000, 5);
  EXPECT_FALSE(r.expectation_closed.has_value());
  EXPECT_FALSE(r.variance_closed.has_value());
  EXPECT_GT(r.expectation_mc, 0.0);
}

TEST(MonteCarlo, RejectsBadArguments) {
  EXPECT_THROW(monte_carlo_stats(SurrogateSpec::ste(), 1, 1, 5000, 0), DomainError);
  EXPECT_THROW(monte_carlo_stats(SurrogateSpec::ste(), 0, 1, 999, 0), DomainError);
  EXPECT_THROW(monte_carlo_stats(SurrogateSpec::ste(), 0, INFINITY, 5000, 0), DomainError);
}
