#pragma once

// Gradient statistics of the surrogates under xi ~ U(l, u).
//
// With c = sqrt2*pi*A and T = arctan(sqrt((1 - c)/(1 + c))):
//
//   E[g_dsq]    = 1
//   Var[g_dsq]  = ln((2 - alpha)/alpha) (3 - (1 - alpha)^2) / (6 (1 - alpha)) - 1
//   E[g_rdfs]   = 8 T / (pi sqrt(1 - c^2)) - 1
//   Var[g_rdfs] = T1(c) + 1 - T2(c),
//       T1(c) = 16 c^2 T / (pi (1 - c^2)^(3/2)) - 8c / (pi (1 - c^2)),   T2(c) = E[g_rdfs]^2
//
// Closed forms hold for any clip range split into 2^b - 1 whole intervals, so they do not depend on (l, u).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "qatlab/error.hpp"
#include "qatlab/quantizer.hpp"
#include "qatlab/rng.hpp"
#include "qatlab/surrogates.hpp"

namespace qatlab {

/// A variance that may be +infinity; callers must branch on is_infinite().
class Variance {
 public:
  static Variance finite(double v) { return Variance(v, false); }
  static Variance infinite() { return Variance(0.0, true); }

  bool is_infinite() const noexcept { return infinite_; }

  double value() const {
    if (infinite_) throw DomainError("variance is unbounded");
    return value_;
  }

  std::string to_string() const;

  bool operator==(const Variance&) const = default;

 private:
  Variance(double v, bool inf) : value_(v), infinite_(inf) {}
  double value_;
  bool infinite_;
};

namespace detail {

inline void require_closed_form(const SurrogateSpec& spec) {
  if (spec.kind() != SurrogateKind::rdfs) return;
  const Rdfs& r = spec.as_rdfs();
  if (r.order != 0) {
    throw UnsupportedSpecError("no closed-form statistics for RDFS of order " + std::to_string(r.order));
  }
  if (!(amplitude_to_c(r.amplitude) < 1.0)) {
    throw UnsupportedSpecError("closed-form RDFS statistics need A < 1/(sqrt(2)*pi)");
  }
}

/// arctan(sqrt((1 - c)/(1 + c)))
inline double rdfs_arctan(double c) { return std::atan(std::sqrt((1.0 - c) / (1.0 + c))); }

inline double rdfs_expectation(double c) {
  const double one_minus_c2 = (1.0 - c) * (1.0 + c);
  return 8.0 / (std::numbers::pi * std::sqrt(one_minus_c2)) * rdfs_arctan(c) - 1.0;
}

inline double rdfs_variance(double c) {
  const double one_minus_c2 = (1.0 - c) * (1.0 + c);
  const double t1 = 16.0 * c * c / (std::numbers::pi * std::pow(one_minus_c2, 1.5)) * rdfs_arctan(c) -
                    8.0 * c / (std::numbers::pi * one_minus_c2);
  const double e = rdfs_expectation(c);
  return t1 + 1.0 - e * e;
}

inline double dsq_variance(double alpha) {
  const double one_minus = 1.0 - alpha;
  return dsq_beta(alpha) * (3.0 - one_minus * one_minus) / (6.0 * one_minus) - 1.0;
}

}  // namespace detail

inline double expectation_closed(const SurrogateSpec& spec) {
  detail::require_closed_form(spec);
  switch (spec.kind()) {
    case SurrogateKind::ste:
    case SurrogateKind::dsq:
      return 1.0;
    case SurrogateKind::rdfs:
      return detail::rdfs_expectation(amplitude_to_c(spec.as_rdfs().amplitude));
  }
  throw DomainError("unknown surrogate kind");
}

inline Variance variance_closed(const SurrogateSpec& spec) {
  detail::require_closed_form(spec);
  switch (spec.kind()) {
    case SurrogateKind::ste:
      return Variance::finite(0.0);
    case SurrogateKind::dsq:
      return Variance::finite(detail::dsq_variance(spec.as_dsq().alpha));
    case SurrogateKind::rdfs:
      return Variance::finite(detail::rdfs_variance(amplitude_to_c(spec.as_rdfs().amplitude)));
  }
  throw DomainError("unknown surrogate kind");
}

/// Limits as the surrogate sharpens: alpha -> 0+ (DSQ), A -> 1/(sqrt2 pi)- (RDFS).
inline double expectation_limit(SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::dsq: return 1.0;
    case SurrogateKind::rdfs: return 4.0 / std::numbers::pi - 1.0;
    case SurrogateKind::ste: break;
  }
  throw DomainError("expectation_limit is defined for dsq and rdfs only");
}

inline Variance variance_limit(SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::dsq: return Variance::infinite();
    case SurrogateKind::rdfs:
      return Variance::finite(16.0 / (3.0 * std::numbers::pi) - 16.0 / (std::numbers::pi * std::numbers::pi));
    case SurrogateKind::ste: break;
  }
  throw DomainError("variance_limit is defined for dsq and rdfs only");
}

// ---------------------------------------------------------------------------
// Integral identities used by the closed forms.

enum class IntegralKind { cosine_linear, cosine_quadratic, sech4 };

/// (i)   int_{-pi/2}^{pi/2} dx / (1 + c cos x)    = 4/sqrt(1-c^2) arctan(sqrt((1-c)/(1+c)))
/// (ii)  int_{-pi/2}^{pi/2} dx / (1 + c cos x)^2  = 4/(1-c^2)^(3/2) arctan(...) - 2c/(1-c^2)
/// (iii) int_{-c}^{c} sech^4 x dx                 = 2 (tanh c - tanh^3 c / 3)
inline double reference_integral(IntegralKind kind, double c) {
  switch (kind) {
    case IntegralKind::cosine_linear: {
      if (!(c * c < 1.0)) throw DomainError("cosine integrals need c^2 < 1");
      return 4.0 / std::sqrt((1.0 - c) * (1.0 + c)) * detail::rdfs_arctan(c);
    }
    case IntegralKind::cosine_quadratic: {
      if (!(c * c < 1.0)) throw DomainError("cosine integrals need c^2 < 1");
      const double one_minus_c2 = (1.0 - c) * (1.0 + c);
      return 4.0 / std::pow(one_minus_c2, 1.5) * detail::rdfs_arctan(c) - 2.0 * c / one_minus_c2;
    }
    case IntegralKind::sech4: {
      if (!(c > 0.0)) throw DomainError("sech^4 integral needs c > 0");
      const double th = std::tanh(c);
      return 2.0 * (th - th * th * th / 3.0);
    }
  }
  throw DomainError("unknown integral kind");
}

// ---------------------------------------------------------------------------
// Monte Carlo

struct StatsReport {
  SurrogateSpec spec = SurrogateSpec::ste();
  double l = 0.0;
  double u = 0.0;
  int bits = 0;
  /// Empty when no closed form exists (RDFS with order >= 1).
  std::optional<double> expectation_closed;
  std::optional<Variance> variance_closed;
  double expectation_mc = 0.0;
  double variance_mc = 0.0;
  std::uint64_t mc_samples = 0;
  double mc_stderr_mean = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr std::uint64_t kMonteCarloShardSize = std::uint64_t{1} << 16;
inline constexpr std::uint64_t kMonteCarloMinSamples = 1000;

namespace detail {

struct Moments {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) {
    ++count;
    const double d = x - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (x - mean);
  }

  /// Chan et al. pairwise merge.
  void merge(const Moments& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double n = static_cast<double>(count + o.count);
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.count) / n;
    m2 += o.m2 + d * d * static_cast<double>(count) * static_cast<double>(o.count) / n;
    count += o.count;
  }
};

/// Surrogate gradient at xi for a clip range tiled into 2^bits - 1 intervals.
/// RDFS uses the normalized periodic form g(xi/Delta, round(xi/Delta)).
struct MonteCarloIntegrand {
  SurrogateSpec spec;
  DsqLayout layout;

  double operator()(double xi) const {
    switch (spec.kind()) {
      case SurrogateKind::ste:
        return 1.0;
      case SurrogateKind::dsq:
        return g_dsq(xi, spec.as_dsq().alpha, layout);
      case SurrogateKind::rdfs: {
        const Rdfs& r = spec.as_rdfs();
        const double v = xi / layout.delta();
        return rdfs_on_grid(v, round_with(v, Rounding::half_to_even), amplitude_to_c(r.amplitude), r.order);
      }
    }
    return 0.0;
  }
};

}  // namespace detail

/// Sample mean/variance of the surrogate gradient under U(l, u), side by side with the closed forms.
///
/// Sampling is split into shards of kMonteCarloShardSize draws; shard i uses the stream
/// derive_seed(seed, i) and shards are merged in index order, so the result is identical
/// for any worker count. workers = 0 picks std::thread::hardware_concurrency().
inline StatsReport monte_carlo_stats(const SurrogateSpec& spec, double l, double u, std::uint64_t n,
                                     std::uint64_t seed, int bits = 3, unsigned workers = 0) {
  if (!(l < u) || !std::isfinite(l) || !std::isfinite(u)) throw DomainError("monte_carlo_stats: need finite l < u");
  if (n < kMonteCarloMinSamples) throw DomainError("monte_carlo_stats: need at least 1000 samples");

  const detail::MonteCarloIntegrand integrand{spec, DsqLayout::make(l, u, bits)};
  const std::uint64_t shards = (n + kMonteCarloShardSize - 1) / kMonteCarloShardSize;
  std::vector<detail::Moments> partial(shards);

  auto run_shard = [&](std::uint64_t s) {
    const std::uint64_t begin = s * kMonteCarloShardSize;
    const std::uint64_t count = std::min(kMonteCarloShardSize, n - begin);
    Rng rng(derive_seed(seed, s));
    detail::Moments m;
    for (std::uint64_t i = 0; i < count; ++i) {
      double xi = rng.uniform(l, u);
      if (xi >= u) xi = l;  // keep [l, u) half-open under rounding
      m.push(integrand(xi));
    }
    partial[s] = m;
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, shards));
  if (workers <= 1) {
    for (std::uint64_t s = 0; s < shards; ++s) run_shard(s);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::uint64_t s = w; s < shards; s += workers) run_shard(s);
      });
    }
  }

  detail::Moments total;
  for (const auto& m : partial) total.merge(m);

  StatsReport report;
  report.spec = spec;
  report.l = l;
  report.u = u;
  report.bits = bits;
  report.mc_samples = total.count;
  report.seed = seed;
  report.expectation_mc = total.mean;
  report.variance_mc = total.count > 1 ? total.m2 / static_cast<double>(total.count - 1) : 0.0;
  report.mc_stderr_mean = std::sqrt(report.variance_mc / static_cast<double>(total.count));
  try {
    report.expectation_closed = expectation_closed(spec);
    report.variance_closed = variance_closed(spec);
  } catch (const UnsupportedSpecError&) {
    // MC-only report.
  }
  return report;
}

inline std::string Variance::to_string() const {
  if (infinite_) return "inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value_);
  return buf;
}

}  // namespace qatlab
