#pragma once

/**
 * Rotated-coordinate view of the rounding staircase.
 *
 * Rotating (x, x_q) by 45 degrees,
 *
 *   t = (x + x_q)/sqrt2,   f = (-x + x_q)/sqrt2,
 *
 * turns x_q = round(x) into a centered triangle wave of period T = sqrt2 and
 * amplitude 1/(2 sqrt2). Its sine series has only odd harmonics,
 *
 *   f(t) = -A * sum_m (-1)^m/(2m+1)^2 sin((2m+1) sqrt2 pi t),   A = 2 sqrt2/pi^2,
 *
 * and rotating a truncated, re-scaled series back gives the parameterized curve
 * whose slope dx_q/dx = (1 + f'(t))/(1 - f'(t)) is the RDFS multiplier.
 *
 * The generic Fourier machinery (TrigPolynomial, fourier_coefficients, l2_error)
 * works for any period T.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "qatlab/error.hpp"
#include "qatlab/quadrature.hpp"
#include "qatlab/surrogates.hpp"

namespace qatlab {

inline constexpr double kZigzagPeriod = std::numbers::sqrt2;
inline constexpr double kZigzagHeight = 1.0 / (2.0 * std::numbers::sqrt2);

/// {v} in [0, 1), also for negative v ({-0.25} = 0.75).
inline double fractional_part(double v) {
  double r = v - std::floor(v);
  if (r >= 1.0) r = 0.0;
  return r;
}

/// Centered triangle wave of period sqrt2; odd, zero at t = 0.
inline double zigzag(double t) {
  const double r = fractional_part((t - kZigzagPeriod / 4.0) / kZigzagPeriod);
  return kZigzagHeight * (1.0 - 4.0 * std::abs(r - 0.5));
}

struct CurvePoint {
  double t = 0.0;
  double f = 0.0;
  double x = 0.0;
  double x_q = 0.0;
};

struct InputPoint {
  double x = 0.0;
  double x_q = 0.0;
};

inline CurvePoint rotate_to_curve(double x, double x_q) {
  return CurvePoint{(x + x_q) / std::numbers::sqrt2, (-x + x_q) / std::numbers::sqrt2, x, x_q};
}

inline InputPoint inverse_rotate(double t, double f) {
  return InputPoint{(t - f) / std::numbers::sqrt2, (t + f) / std::numbers::sqrt2};
}

/// f_M(t) = -A sum_{m=0..M} (-1)^m/(2m+1)^2 sin((2m+1) sqrt2 pi t)
inline double fourier_partial_sum(double t, int order, double amplitude) {
  if (order < 0) throw DomainError("fourier_partial_sum: order must be >= 0");
  if (!(amplitude >= 0.0)) throw DomainError("fourier_partial_sum: amplitude must be >= 0");
  const double w = std::numbers::sqrt2 * std::numbers::pi * t;
  double sum = 0.0;
  for (int m = 0; m <= order; ++m) {
    const double k = 2.0 * m + 1.0;
    const double term = std::sin(k * w) / (k * k);
    sum += (m % 2 == 0) ? term : -term;
  }
  return -amplitude * sum;
}

/// f'_M(t) = -A sqrt2 pi sum_{m=0..M} (-1)^m/(2m+1) cos((2m+1) sqrt2 pi t)
inline double fourier_partial_sum_derivative(double t, int order, double amplitude) {
  if (order < 0) throw DomainError("fourier_partial_sum_derivative: order must be >= 0");
  const double w = std::numbers::sqrt2 * std::numbers::pi * t;
  double sum = 0.0;
  for (int m = 0; m <= order; ++m) {
    const double k = 2.0 * m + 1.0;
    const double term = std::cos(k * w) / k;
    sum += (m % 2 == 0) ? term : -term;
  }
  return -amplitude_to_c(amplitude) * sum;
}

/// Point (x, x_q) of the rotated-back truncated series at parameter t.
inline InputPoint curve_point(double t, int order, double amplitude) {
  return inverse_rotate(t, fourier_partial_sum(t, order, amplitude));
}

/// dx_q/dx along the curve: (1 + f'_M(t)) / (1 - f'_M(t)).
inline double curve_slope(double t, int order, double amplitude) {
  const double fp = fourier_partial_sum_derivative(t, order, amplitude);
  const double den = 1.0 - fp;
  if (std::abs(den) < kSingularTolerance) throw SingularError("curve_slope: 1 - f'(t) vanished");
  return (1.0 + fp) / den;
}

/// g(u) = a0 + sum_{k=1..n} [a_k cos(2 pi k u/T) + b_k sin(2 pi k u/T)]
class TrigPolynomial {
 public:
  TrigPolynomial() = default;

  TrigPolynomial(double a0, std::vector<double> a, std::vector<double> b, double period)
      : a0_(a0), a_(std::move(a)), b_(std::move(b)), period_(period) {
    if (a_.size() != b_.size()) throw DomainError("TrigPolynomial: cosine and sine coefficient counts differ");
    if (!(period_ > 0.0)) throw DomainError("TrigPolynomial: period must be positive");
  }

  static TrigPolynomial constant(double a0, double period) { return TrigPolynomial(a0, {}, {}, period); }

  std::size_t degree() const noexcept { return a_.size(); }
  double a0() const noexcept { return a0_; }
  const std::vector<double>& a() const noexcept { return a_; }
  const std::vector<double>& b() const noexcept { return b_; }
  double period() const noexcept { return period_; }

  /// Evaluates with the angle-addition recurrence: one sin/cos pair per point.
  double operator()(double u) const {
    double value = a0_;
    if (a_.empty()) return value;
    const double w = 2.0 * std::numbers::pi * u / period_;
    const double c1 = std::cos(w), s1 = std::sin(w);
    double ck = c1, sk = s1;
    for (std::size_t k = 0; k < a_.size(); ++k) {
      value += a_[k] * ck + b_[k] * sk;
      const double cn = ck * c1 - sk * s1;
      sk = sk * c1 + ck * s1;
      ck = cn;
    }
    return value;
  }

  /// Coefficientwise sum; degrees may differ, periods must match.
  friend TrigPolynomial operator+(const TrigPolynomial& p, const TrigPolynomial& q) {
    if (p.period_ != q.period_) throw DomainError("TrigPolynomial: period mismatch");
    const std::size_t n = std::max(p.degree(), q.degree());
    std::vector<double> a(n, 0.0), b(n, 0.0);
    for (std::size_t k = 0; k < p.degree(); ++k) {
      a[k] += p.a_[k];
      b[k] += p.b_[k];
    }
    for (std::size_t k = 0; k < q.degree(); ++k) {
      a[k] += q.a_[k];
      b[k] += q.b_[k];
    }
    return TrigPolynomial(p.a0_ + q.a0_, std::move(a), std::move(b), p.period_);
  }

  /// Truncation to degree m (m <= degree()).
  TrigPolynomial truncated(std::size_t m) const {
    if (m > degree()) throw DomainError("TrigPolynomial::truncated: degree too large");
    return TrigPolynomial(a0_, {a_.begin(), a_.begin() + static_cast<std::ptrdiff_t>(m)},
                          {b_.begin(), b_.begin() + static_cast<std::ptrdiff_t>(m)}, period_);
  }

 private:
  double a0_ = 0.0;
  std::vector<double> a_;
  std::vector<double> b_;
  double period_ = 1.0;
};

/// Fourier coefficients of f on [0, T] by composite Simpson quadrature:
/// a0 = (1/T) int f, a_k = (2/T) int f cos(2 pi k u/T), b_k = (2/T) int f sin(2 pi k u/T).
template <typename F>
TrigPolynomial fourier_coefficients(F&& f, std::size_t n, double period, std::size_t panels = kDefaultSimpsonPanels) {
  if (!(period > 0.0)) throw DomainError("fourier_coefficients: period must be positive");
  const double w = 2.0 * std::numbers::pi / period;
  const double a0 = simpson(f, 0.0, period, panels) / period;
  std::vector<double> a(n), b(n);
  for (std::size_t k = 1; k <= n; ++k) {
    const double kw = static_cast<double>(k) * w;
    a[k - 1] = 2.0 / period * simpson([&](double u) { return f(u) * std::cos(kw * u); }, 0.0, period, panels);
    b[k - 1] = 2.0 / period * simpson([&](double u) { return f(u) * std::sin(kw * u); }, 0.0, period, panels);
  }
  return TrigPolynomial(a0, std::move(a), std::move(b), period);
}

/// sqrt( int_0^T (f - g)^2 du ), same quadrature rule as fourier_coefficients.
template <typename F>
double l2_error(F&& f, const TrigPolynomial& g, double period, std::size_t panels = kDefaultSimpsonPanels) {
  const double sq = simpson(
      [&](double u) {
        const double d = f(u) - g(u);
        return d * d;
      },
      0.0, period, panels);
  return std::sqrt(std::max(sq, 0.0));
}

/// Closed-form sine coefficient b_k of the unit zigzag: -(2 sqrt2/pi^2)(-1)^m/(2m+1)^2 for k = 2m+1, else 0.
inline double zigzag_sine_coefficient(std::size_t k, double vanilla_amplitude = kVanillaAmplitude) {
  if (k == 0 || k % 2 == 0) return 0.0;
  const std::size_t m = (k - 1) / 2;
  const double kk = static_cast<double>(k);
  return -vanilla_amplitude * ((m % 2 == 0) ? 1.0 : -1.0) / (kk * kk);
}

}  // namespace qatlab
