#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "qatlab/rng.hpp"
#include "qatlab/rotation_fourier.hpp"
#include "qatlab/surrogates.hpp"

using namespace qatlab;

namespace {

// Evaluated at 30 significant digits.
constexpr double kZigzagNorm = 0.242745885853662;        // ||zigzag|| over one period
constexpr double kZigzagDegree1Error = 0.0291958859474158;
constexpr double kVanillaSlopeAtZero = -0.120198307023115;
constexpr double kRdfsAtOrigin = 0.0346582489614842;

constexpr double kSqrt2 = std::numbers::sqrt2;

}  // namespace

TEST(FractionalPart, AlwaysInUnitInterval) {
  EXPECT_EQ(fractional_part(-0.25), 0.75);
  EXPECT_EQ(fractional_part(1.5), 0.5);
  EXPECT_EQ(fractional_part(-3.0), 0.0);
  Rng rng(41);
  for (int i = 0; i < 10000; ++i) {
    const double r = fractional_part(rng.uniform(-1e6, 1e6));
    EXPECT_GE(r, 0.0);
    EXPECT_LT(r, 1.0);
  }
  EXPECT_LT(fractional_part(-1e-18), 1.0);
}

TEST(Zigzag, Examples) {
  EXPECT_NEAR(zigzag(0.0), 0.0, 1e-16);
  EXPECT_NEAR(zigzag(kSqrt2 / 4), -1.0 / (2 * kSqrt2), 1e-15);
  EXPECT_NEAR(zigzag(-kSqrt2 / 4), 1.0 / (2 * kSqrt2), 1e-15);
  Rng rng(42);
  for (int i = 0; i < 1000; ++i) {
    const double t = rng.uniform(-10, 10);
    EXPECT_NEAR(zigzag(t + kSqrt2), zigzag(t), 1e-12);
    EXPECT_NEAR(zigzag(-t), -zigzag(t), 1e-12);
  }
}

TEST(Rotation, Examples) {
  const CurvePoint o = rotate_to_curve(0, 0);
  EXPECT_EQ(o.t, 0.0);
  EXPECT_EQ(o.f, 0.0);
  const CurvePoint p = rotate_to_curve(0.3, 0.0);
  EXPECT_NEAR(p.t, 0.212132034355964, 1e-15);
  EXPECT_NEAR(p.f, -0.212132034355964, 1e-15);
  EXPECT_NEAR(zigzag(p.t), p.f, 1e-15);
  const CurvePoint q = rotate_to_curve(1, 1);
  EXPECT_NEAR(q.t, kSqrt2, 1e-15);
  EXPECT_EQ(q.f, 0.0);
  const InputPoint back = inverse_rotate(kSqrt2, 0.0);
  EXPECT_NEAR(back.x, 1.0, 1e-15);
  EXPECT_NEAR(back.x_q, 1.0, 1e-15);
  const InputPoint zero = inverse_rotate(0, 0);
  EXPECT_EQ(zero.x, 0.0);
  EXPECT_EQ(zero.x_q, 0.0);
}

TEST(Rotation, RoundTrip) {
  Rng rng(43);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-10, 10), xq = rng.uniform(-10, 10);
    const CurvePoint p = rotate_to_curve(x, xq);
    const InputPoint b = inverse_rotate(p.t, p.f);
    EXPECT_NEAR(b.x, x, 1e-14);
    EXPECT_NEAR(b.x_q, xq, 1e-14);
  }
}

TEST(Rotation, RoundedPointsLieOnZigzag) {
  Rng rng(44);
  for (int i = 0; i < 1000; ++i) {
    double x = rng.uniform(-20, 20);
    if (std::abs(x - std::floor(x) - 0.5) < 1e-6) continue;
    const CurvePoint p = rotate_to_curve(x, std::round(x));
    EXPECT_NEAR(zigzag(p.t), p.f, 1e-12);
  }
}

TEST(PartialSum, Examples) {
  for (int m = 0; m < 4; ++m) EXPECT_EQ(fourier_partial_sum(0.0, m, 0.21), 0.0);
  EXPECT_NEAR(fourier_partial_sum(kSqrt2 / 4, 0, kVanillaAmplitude), -0.286579584125378, 1e-15);
  Rng rng(45);
  for (int i = 0; i < 1000; ++i) {
    const double t = rng.uniform(-5, 5);
    const int m = static_cast<int>(rng.below(4));
    EXPECT_NEAR(fourier_partial_sum(-t, m, 0.2), -fourier_partial_sum(t, m, 0.2), 1e-15);
  }
}

TEST(PartialSum, ConvergesToZigzagAtVanillaAmplitude) {
  Rng rng(46);
  for (int i = 0; i < 100; ++i) {
    const double t = rng.uniform(-2, 2);
    // tail of sum 1/(2m+1)^2 beyond m=200 is below 1/800
    EXPECT_NEAR(fourier_partial_sum(t, 200, kVanillaAmplitude), zigzag(t), kVanillaAmplitude / 800);
  }
}

TEST(CurveSlope, Examples) {
  Rng rng(47);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(curve_slope(rng.uniform(-5, 5), 2, 0.0), 1.0);
  EXPECT_NEAR(curve_slope(0, 0, 0.21), kRdfsAtOrigin, 1e-14);
  EXPECT_NEAR(curve_slope(0, 0, 0.21), g_rdfs_first_order(0, 0, 0.21), 1e-15);
  EXPECT_NEAR(curve_slope(0, 0, kVanillaAmplitude), kVanillaSlopeAtZero, 1e-14);
  EXPECT_LT(curve_slope(0, 0, kVanillaAmplitude), 0.0);
}

TEST(CurveSlope, SingularThrows) {
  // f'(t) = 1 where c cos(sqrt2 pi t) = -1; c = 1 at the boundary amplitude, cos = -1 at t = 1/sqrt2.
  EXPECT_THROW(curve_slope(1.0 / kSqrt2, 0, 1.0 / (kSqrt2 * std::numbers::pi)), SingularError);
}

TEST(TrigPolynomial, EvaluationAndAlgebra) {
  const TrigPolynomial p(0.5, {1.0, 0.0}, {0.0, 2.0}, 2.0);
  const double u = 0.3;
  const double w = std::numbers::pi * u;
  EXPECT_NEAR(p(u), 0.5 + std::cos(w) + 2.0 * std::sin(2.0 * w), 1e-14);
  const TrigPolynomial q = p + TrigPolynomial::constant(1.0, 2.0);
  EXPECT_NEAR(q(u), p(u) + 1.0, 1e-14);
  EXPECT_EQ(p.truncated(1).degree(), 1u);
  EXPECT_THROW(p.truncated(3), DomainError);
  EXPECT_THROW(TrigPolynomial(0, {1.0}, {}, 1.0), DomainError);
  EXPECT_THROW(TrigPolynomial(0, {}, {}, 0.0), DomainError);
  EXPECT_THROW(p + TrigPolynomial::constant(1.0, 3.0), DomainError);
}

TEST(FourierCoefficients, Zigzag) {
  const auto f = fourier_coefficients(zigzag, 5, kZigzagPeriod);
  EXPECT_NEAR(f.a0(), 0.0, 1e-8);
  for (double a : f.a()) EXPECT_NEAR(a, 0.0, 1e-8);
  for (std::size_t k = 1; k <= 5; ++k) EXPECT_NEAR(f.b()[k - 1], zigzag_sine_coefficient(k), 1e-8) << k;
  EXPECT_NEAR(f.b()[0], -2 * kSqrt2 / (std::numbers::pi * std::numbers::pi), 1e-8);
  EXPECT_NEAR(f.b()[2], 0.0318421760139309, 1e-8);
}

TEST(FourierCoefficients, ConstantAndPureSine) {
  const auto c = fourier_coefficients([](double) { return 5.0; }, 3, 1.7);
  EXPECT_NEAR(c.a0(), 5.0, 1e-12);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_NEAR(c.a()[k], 0.0, 1e-10);
    EXPECT_NEAR(c.b()[k], 0.0, 1e-10);
  }
  const double T = 1.7;
  const auto s = fourier_coefficients([T](double u) { return std::sin(2 * std::numbers::pi * u / T); }, 3, T);
  EXPECT_NEAR(s.a0(), 0.0, 1e-10);
  EXPECT_NEAR(s.b()[0], 1.0, 1e-10);
  for (std::size_t k = 1; k < 3; ++k) EXPECT_NEAR(s.b()[k], 0.0, 1e-10);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(s.a()[k], 0.0, 1e-10);
}

TEST(L2Error, Examples) {
  const TrigPolynomial zero = TrigPolynomial::constant(0.0, kZigzagPeriod);
  const double norm = l2_error(zigzag, zero, kZigzagPeriod);
  EXPECT_NEAR(norm, kZigzagNorm, 1e-10);
  EXPECT_NEAR(norm, std::sqrt(kZigzagPeriod * kZigzagHeight * kZigzagHeight / 3.0), 1e-10);
  const auto f1 = fourier_coefficients(zigzag, 1, kZigzagPeriod);
  const double e1 = l2_error(zigzag, f1, kZigzagPeriod);
  EXPECT_NEAR(e1, kZigzagDegree1Error, 1e-10);
  EXPECT_LT(e1, norm);

  const TrigPolynomial g(0.3, {0.1, -0.2}, {0.05, 0.4}, 2.5);
  const auto gg = fourier_coefficients(g, 2, 2.5);
  EXPECT_LE(l2_error(g, gg, 2.5), 1e-9);
}

TEST(SineCoefficients, ClosedForm) {
  EXPECT_EQ(zigzag_sine_coefficient(2), 0.0);
  EXPECT_EQ(zigzag_sine_coefficient(0), 0.0);
  EXPECT_NEAR(zigzag_sine_coefficient(1), -kVanillaAmplitude, 1e-16);
  EXPECT_NEAR(zigzag_sine_coefficient(3), kVanillaAmplitude / 9, 1e-16);
  EXPECT_NEAR(zigzag_sine_coefficient(5), -kVanillaAmplitude / 25, 1e-16);
}
