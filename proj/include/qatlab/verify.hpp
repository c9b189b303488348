#pragma once

// Numerical verification suites for the Fourier best-approximation results and
// the gradient-statistics closed forms. Each check reports what it measured next
// to what it expected, so failures are diagnosable from the printed table.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qatlab/rng.hpp"
#include "qatlab/rotation_fourier.hpp"
#include "qatlab/stats.hpp"
#include "qatlab/surrogates.hpp"

namespace qatlab {

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string note;

  double delta() const { return std::abs(measured - expected); }
};

inline bool all_passed(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

/// Columns: status,check,measured,expected,delta,tolerance,note
inline void print_checks(std::ostream& os, const std::vector<CheckResult>& checks) {
  os << "status,check,measured,expected,delta,tolerance,note\n";
  char buf[512];
  for (const auto& c : checks) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.12g,%.12g,%.3e,%.3e,%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                  c.measured, c.expected, c.delta(), c.tolerance, c.note.c_str());
    os << buf;
  }
}

namespace detail {

inline CheckResult abs_check(std::string name, double measured, double expected, double tol, std::string note = {}) {
  return {std::move(name), measured, expected, tol, std::abs(measured - expected) <= tol, std::move(note)};
}

inline CheckResult rel_check(std::string name, double measured, double expected, double rel, std::string note = {}) {
  const double tol = rel * std::max(std::abs(expected), 1e-300);
  return {std::move(name), measured, expected, tol, std::abs(measured - expected) <= tol, std::move(note)};
}

/// Random trig polynomial of degree n with coefficients ~ N(0, sigma^2), sigma log-uniform in [1e-4, 1e-1].
inline TrigPolynomial random_trig_polynomial(Rng& rng, std::size_t n, double period) {
  const double sigma = std::pow(10.0, rng.uniform(-4.0, -1.0));
  std::vector<double> a(n), b(n);
  for (auto& v : a) v = sigma * rng.normal();
  for (auto& v : b) v = sigma * rng.normal();
  return TrigPolynomial(sigma * rng.normal(), std::move(a), std::move(b), period);
}

/// T (alpha0 - a0)^2 + T/2 sum_k [(alpha_k - a_k)^2 + (beta_k - b_k)^2]
inline double parseval_excess(const TrigPolynomial& exact, const TrigPolynomial& g) {
  const double T = exact.period();
  double s = T * (exact.a0() - g.a0()) * (exact.a0() - g.a0());
  for (std::size_t k = 0; k < exact.degree(); ++k) {
    const double da = exact.a()[k] - (k < g.degree() ? g.a()[k] : 0.0);
    const double db = exact.b()[k] - (k < g.degree() ? g.b()[k] : 0.0);
    s += T / 2.0 * (da * da + db * db);
  }
  return s;
}

}  // namespace detail

struct FourierVerifyOptions {
  /// Reference amplitude of the zigzag sine series; altered only by negative-control tests.
  double vanilla_amplitude = kVanillaAmplitude;
  std::size_t competitors = 1000;
  std::size_t curve_points = 1000;
  std::uint64_t seed = 0;
};

/// Coefficients of the zigzag series (b1, b2, b3 and the vanishing cosine terms).
inline std::vector<CheckResult> check_zigzag_coefficients(const FourierVerifyOptions& opt) {
  std::vector<CheckResult> out;
  const TrigPolynomial fz = fourier_coefficients(zigzag, 3, kZigzagPeriod);
  out.push_back(detail::abs_check("zigzag.b1", fz.b()[0], -opt.vanilla_amplitude, 1e-6));
  out.push_back(detail::abs_check("zigzag.b2", fz.b()[1], 0.0, 1e-8));
  out.push_back(detail::abs_check("zigzag.b3", fz.b()[2], opt.vanilla_amplitude / 9.0, 1e-6));
  out.push_back(detail::abs_check("zigzag.a0", fz.a0(), 0.0, 1e-8));
  double max_cos = 0.0;
  for (double a : fz.a()) max_cos = std::max(max_cos, std::abs(a));
  out.push_back(detail::abs_check("zigzag.max|a_k|", max_cos, 0.0, 1e-8));
  return out;
}

/// The degree-n partial sum beats random degree-<=n competitors, and the deficit equals the Parseval excess.
inline std::vector<CheckResult> check_best_approximation(const FourierVerifyOptions& opt) {
  std::vector<CheckResult> out;
  Rng rng(opt.seed);
  const auto fz3 = fourier_coefficients(zigzag, 3, kZigzagPeriod);
  for (std::size_t n = 1; n <= 3; ++n) {
    const TrigPolynomial fn = fz3.truncated(n);
    const double best = l2_error(zigzag, fn, kZigzagPeriod);
    std::size_t wins = 0;
    double worst_parseval = 0.0;
    Rng stream = rng.split(n);
    for (std::size_t i = 0; i < opt.competitors; ++i) {
      const TrigPolynomial g = fn + detail::random_trig_polynomial(stream, n, kZigzagPeriod);
      const double err = l2_error(zigzag, g, kZigzagPeriod);
      if (err > best) ++wins;
      const double deficit = err * err - best * best;
      worst_parseval = std::max(worst_parseval, std::abs(deficit - detail::parseval_excess(fn, g)));
    }
    const std::string tag = "n=" + std::to_string(n);
    out.push_back(detail::abs_check("best_l2.wins[" + tag + "]", static_cast<double>(wins),
                                    static_cast<double>(opt.competitors), 0.0, "competitors beaten"));
    out.push_back(detail::abs_check("best_l2.parseval[" + tag + "]", worst_parseval, 0.0, 1e-8,
                                    "max |deficit - parseval excess|"));
  }
  return out;
}

/// ||f - f1|| < ||f - f0|| for the zigzag; equality for a constant function.
inline std::vector<CheckResult> check_strict_improvement() {
  std::vector<CheckResult> out;
  const auto fz = fourier_coefficients(zigzag, 1, kZigzagPeriod);
  const double e0 = l2_error(zigzag, fz.truncated(0), kZigzagPeriod);
  const double e1 = l2_error(zigzag, fz, kZigzagPeriod);
  out.push_back({"strict.zigzag e1<e0", e1, e0, 0.0, e1 < e0, "measured=e1 expected=e0"});

  const auto constant = [](double) { return 5.0; };
  const auto fc = fourier_coefficients(constant, 1, kZigzagPeriod);
  const double c0 = l2_error(constant, fc.truncated(0), kZigzagPeriod);
  const double c1 = l2_error(constant, fc, kZigzagPeriod);
  out.push_back(detail::abs_check("strict.constant e1==e0", c1, c0, 1e-10));
  return out;
}

/// Rotating (x, round(x)) lands on the zigzag.
inline CheckResult check_on_curve(const FourierVerifyOptions& opt) {
  Rng rng(derive_seed(opt.seed, 11));
  double worst = 0.0;
  for (std::size_t i = 0; i < opt.curve_points; ++i) {
    double x = rng.uniform(-5.0, 5.0);
    if (std::abs(x - std::floor(x) - 0.5) < 1e-6) x += 0.1;
    const CurvePoint p = rotate_to_curve(x, std::round(x));
    worst = std::max(worst, std::abs(zigzag(p.t) - p.f));
  }
  return detail::abs_check("curve.on_zigzag", worst, 0.0, 1e-12, "max |zigzag(t) - f|");
}

/// curve_slope vs central differences of the rotated-back curve, and g_rdfs vs curve_slope.
inline std::vector<CheckResult> check_slopes(const FourierVerifyOptions& opt) {
  std::vector<CheckResult> out;
  constexpr double h = 1e-6;
  for (int order : {0, 1, 2}) {
    for (double amplitude : {0.1, 0.21}) {
      Rng rng(derive_seed(opt.seed, 100 + static_cast<std::uint64_t>(order) * 10 +
                                        static_cast<std::uint64_t>(amplitude * 100)));
      double worst_fd = 0.0;
      double worst_map = 0.0;
      for (std::size_t i = 0; i < opt.curve_points; ++i) {
        const double t = rng.uniform(-3.0, 3.0);
        const InputPoint a = curve_point(t - h, order, amplitude);
        const InputPoint b = curve_point(t + h, order, amplitude);
        const double fd = (b.x_q - a.x_q) / (b.x - a.x);
        const double slope = curve_slope(t, order, amplitude);
        worst_fd = std::max(worst_fd, std::abs(fd - slope) / std::abs(slope));

        const double x = rng.uniform(-5.0, 5.0);
        const double xq = std::round(x);
        const double g = g_rdfs(x, xq, amplitude, order);
        const double s = curve_slope((x + xq) / std::numbers::sqrt2, order, amplitude);
        worst_map = std::max(worst_map, std::abs(g - s) / std::abs(s));
      }
      char tag[64];
      std::snprintf(tag, sizeof tag, "[M=%d,A=%.2f]", order, amplitude);
      out.push_back(detail::abs_check(std::string("slope.finite_diff") + tag, worst_fd, 0.0, 1e-4,
                                      "max relative error"));
      out.push_back(detail::abs_check(std::string("slope.g_rdfs_map") + tag, worst_map, 0.0, 1e-12,
                                      "max relative error"));
    }
  }
  return out;
}

inline std::vector<CheckResult> verify_fourier(const FourierVerifyOptions& opt = {}) {
  std::vector<CheckResult> out = check_zigzag_coefficients(opt);
  for (auto& c : check_best_approximation(opt)) out.push_back(std::move(c));
  for (auto& c : check_strict_improvement()) out.push_back(std::move(c));
  out.push_back(check_on_curve(opt));
  for (auto& c : check_slopes(opt)) out.push_back(std::move(c));
  return out;
}

// ---------------------------------------------------------------------------

struct StatsVerifyOptions {
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

struct McCase {
  SurrogateSpec spec;
  double l;
  double u;
  int bits;
};

/// Five DSQ alphas and five RDFS amplitudes, each on its own clip range and bitwidth.
inline std::vector<McCase> stats_mc_grid() {
  return {
      {SurrogateSpec::dsq(0.9), -1.0, 1.0, 2},   {SurrogateSpec::dsq(0.5), -0.5, 2.0, 3},
      {SurrogateSpec::dsq(0.2), 0.0, 3.0, 4},    {SurrogateSpec::dsq(0.1), -4.0, 4.0, 3},
      {SurrogateSpec::dsq(0.01), -2.5, 0.7, 2},  {SurrogateSpec::rdfs(0.02), -1.0, 1.0, 2},
      {SurrogateSpec::rdfs(0.08), -0.5, 2.0, 3}, {SurrogateSpec::rdfs(0.14), 0.0, 3.0, 4},
      {SurrogateSpec::rdfs(0.21), -4.0, 4.0, 3}, {SurrogateSpec::rdfs(0.22), -2.5, 0.7, 2},
  };
}

/// Sharpening limits of the closed forms.
inline std::vector<CheckResult> check_limits() {
  const double a_edge = (1.0 - 1e-8) / (std::numbers::sqrt2 * std::numbers::pi);
  const auto spec = SurrogateSpec::rdfs(a_edge);
  return {
      detail::abs_check("limit.rdfs_expectation", expectation_closed(spec), expectation_limit(SurrogateKind::rdfs),
                        1e-3, "A=(1-1e-8)/(sqrt2 pi)"),
      detail::abs_check("limit.rdfs_variance", variance_closed(spec).value(),
                        variance_limit(SurrogateKind::rdfs).value(), 1e-2, "A=(1-1e-8)/(sqrt2 pi)"),
      {"limit.dsq_variance_infinite", variance_limit(SurrogateKind::dsq).is_infinite() ? 1.0 : 0.0, 1.0, 0.0,
       variance_limit(SurrogateKind::dsq).is_infinite(), "flag"},
  };
}

/// Monte Carlo mean within 4 stderr and variance within 5% of the closed forms.
inline std::vector<CheckResult> check_monte_carlo(const StatsVerifyOptions& opt) {
  std::vector<CheckResult> out;
  std::uint64_t stream = 0;
  for (const McCase& c : stats_mc_grid()) {
    const StatsReport r = monte_carlo_stats(c.spec, c.l, c.u, opt.samples, derive_seed(opt.seed, stream++), c.bits,
                                            opt.workers);
    const double e = *r.expectation_closed;
    const double v = r.variance_closed->value();
    out.push_back(detail::abs_check("mc.mean[" + c.spec.label() + "]", r.expectation_mc, e, 4.0 * r.mc_stderr_mean,
                                    "tol = 4 stderr"));
    out.push_back(detail::rel_check("mc.var[" + c.spec.label() + "]", r.variance_mc, v, 0.05, "tol = 5% relative"));
  }
  return out;
}

/// DSQ expectation is exactly 1 across a 100-point alpha grid.
inline CheckResult check_dsq_expectation_grid() {
  double worst = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double alpha = static_cast<double>(i) / 101.0;
    worst = std::max(worst, std::abs(expectation_closed(SurrogateSpec::dsq(alpha)) - 1.0));
  }
  return detail::abs_check("dsq.expectation==1", worst, 0.0, 0.0, "max |E - 1| over 100 alphas");
}

/// Reference values of the DSQ variance formula, evaluated at 30 significant digits.
inline constexpr double kDsqVarianceAlpha1em1 = 0.194133585995278631;
inline constexpr double kDsqVarianceAlpha1em2 = 0.799990979033838752;
inline constexpr double kDsqVarianceAlpha1em3 = 1.53853818372830604;
inline constexpr double kDsqVarianceAlpha1em6 = 3.83622875195344482;

/// Var[g_dsq] grows without bound as alpha -> 0.
inline std::vector<CheckResult> check_dsq_divergence() {
  const double alphas[] = {1e-1, 1e-2, 1e-3, 1e-6};
  const double reference[] = {kDsqVarianceAlpha1em1, kDsqVarianceAlpha1em2, kDsqVarianceAlpha1em3,
                              kDsqVarianceAlpha1em6};
  std::vector<CheckResult> out;
  double prev = -1.0;
  bool increasing = true;
  for (int i = 0; i < 4; ++i) {
    const double v = variance_closed(SurrogateSpec::dsq(alphas[i])).value();
    increasing = increasing && v > prev;
    prev = v;
    char name[64];
    std::snprintf(name, sizeof name, "dsq.variance[alpha=%.0e]", alphas[i]);
    out.push_back(detail::rel_check(name, v, reference[i], 0.01, "1% of formula value"));
  }
  out.push_back({"dsq.variance_increasing", prev, kDsqVarianceAlpha1em6, 0.0, increasing, "alpha 1e-1 -> 1e-6"});
  const double v9 = variance_closed(SurrogateSpec::dsq(1e-9)).value();
  const double v3 = variance_closed(SurrogateSpec::dsq(1e-3)).value();
  out.push_back({"dsq.variance[1e-9]>[1e-3]", v9, v3, 0.0, v9 > v3, "measured=Var(1e-9) expected=Var(1e-3)"});
  return out;
}

/// Closed-form integral identities against adaptive Gauss-Kronrod quadrature, 20 parameters each.
inline std::vector<CheckResult> check_reference_integrals() {
  using boost::math::quadrature::gauss_kronrod;
  std::vector<CheckResult> out;
  const double half_pi = std::numbers::pi / 2.0;
  struct Worst {
    double rel = 0.0, measured = 0.0, expected = 0.0;
  };
  Worst lin, quad, sech;
  auto track = [](Worst& w, double closed, double numeric) {
    const double rel = std::abs(closed - numeric) / std::abs(numeric);
    if (rel >= w.rel) w = {rel, closed, numeric};
  };
  for (int i = 0; i < 20; ++i) {
    const double c = -0.95 + 1.9 * static_cast<double>(i) / 19.0;
    const double n1 = gauss_kronrod<double, 61>::integrate([c](double x) { return 1.0 / (1.0 + c * std::cos(x)); },
                                                           -half_pi, half_pi, 15, 1e-14);
    const double n2 = gauss_kronrod<double, 61>::integrate(
        [c](double x) {
          const double d = 1.0 + c * std::cos(x);
          return 1.0 / (d * d);
        },
        -half_pi, half_pi, 15, 1e-14);
    track(lin, reference_integral(IntegralKind::cosine_linear, c), n1);
    track(quad, reference_integral(IntegralKind::cosine_quadratic, c), n2);

    const double s = 0.1 + 3.9 * static_cast<double>(i) / 19.0;
    const double n3 = gauss_kronrod<double, 61>::integrate(
        [](double x) {
          const double ch = std::cosh(x);
          return 1.0 / (ch * ch * ch * ch);
        },
        -s, s, 15, 1e-14);
    track(sech, reference_integral(IntegralKind::sech4, s), n3);
  }
  for (auto [name, w] : {std::pair{"integral.cosine_linear", lin}, std::pair{"integral.cosine_quadratic", quad},
                         std::pair{"integral.sech4", sech}}) {
    out.push_back({name, w.measured, w.expected, 1e-8 * std::abs(w.expected), w.rel <= 1e-8,
                   "worst of 20 parameters vs Gauss-Kronrod"});
  }
  return out;
}

/// Adjacent amplitudes 1e-3 apart give closed forms within 0.05 of each other.
inline CheckResult check_rdfs_continuity() {
  double worst = 0.0;
  double prev_e = expectation_closed(SurrogateSpec::rdfs(0.0));
  double prev_v = variance_closed(SurrogateSpec::rdfs(0.0)).value();
  for (int i = 1; i <= 225; ++i) {
    const auto spec = SurrogateSpec::rdfs(1e-3 * i);
    const double e = expectation_closed(spec);
    const double v = variance_closed(spec).value();
    worst = std::max({worst, std::abs(e - prev_e), std::abs(v - prev_v)});
    prev_e = e;
    prev_v = v;
  }
  return {"rdfs.continuity", worst, 0.0, 0.05, worst < 0.05, "max adjacent step for A in [0; 0.225]"};
}

/// Var grows toward the 1/(sqrt2 pi) boundary: Var(0.224) > Var(0.21) > Var(0.10).
inline CheckResult check_ill_conditioned_ordering() {
  const double v224 = variance_closed(SurrogateSpec::rdfs(0.224)).value();
  const double v21 = variance_closed(SurrogateSpec::rdfs(0.21)).value();
  const double v10 = variance_closed(SurrogateSpec::rdfs(0.10)).value();
  char note[128];
  std::snprintf(note, sizeof note, "Var(0.224)=%.6g Var(0.21)=%.6g Var(0.10)=%.6g", v224, v21, v10);
  return {"rdfs.variance_ordering", v224, v21, 0.0, v224 > v21 && v21 > v10, note};
}

/// Closed forms do not depend on the clip range.
inline CheckResult check_range_independence(const StatsVerifyOptions& opt) {
  const auto spec = SurrogateSpec::rdfs(0.21);
  const StatsReport a = monte_carlo_stats(spec, -1.0, 1.0, 1000, opt.seed, 3, 1);
  const StatsReport b = monte_carlo_stats(spec, -7.0, 2.5, 1000, opt.seed, 4, 1);
  const bool same = *a.expectation_closed == *b.expectation_closed && *a.variance_closed == *b.variance_closed;
  return {"closed.range_independent", *b.expectation_closed, *a.expectation_closed, 0.0, same, "[-1,1] vs [-7,2.5]"};
}

inline std::vector<CheckResult> verify_stats(const StatsVerifyOptions& opt = {}) {
  std::vector<CheckResult> out = check_limits();
  for (auto& c : check_monte_carlo(opt)) out.push_back(std::move(c));
  out.push_back(check_dsq_expectation_grid());
  for (auto& c : check_dsq_divergence()) out.push_back(std::move(c));
  for (auto& c : check_reference_integrals()) out.push_back(std::move(c));
  out.push_back(check_rdfs_continuity());
  out.push_back(check_ill_conditioned_ordering());
  out.push_back(check_range_independence(opt));
  return out;
}

}  // namespace qatlab
