#pragma once

// Backward-pass multipliers for the rounding operator.
//
//   STE:  g = 1
//   RDFS: g = (1 - S) / (1 + S),  S = A*sqrt(2)*pi * sum_{m=0..M} (-1)^m/(2m+1) cos((2m+1)*pi*(x + x_q))
//   DSQ:  g = beta / (2(1 - alpha)) * sech^2(beta/Delta * (x - m_i)),  beta = ln((2 - alpha)/alpha)
//
// RDFS inputs x and x_q live on the scale-normalized axis (x/s and round(x/s)).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <variant>

#include "qatlab/error.hpp"
#include "qatlab/quantizer.hpp"
#include "qatlab/tensor.hpp"

namespace qatlab {

/// Upper end of the well-conditioned amplitude range, 1/(sqrt(2)*pi).
inline constexpr double kWellConditionedAmplitude = 1.0 / (std::numbers::sqrt2 * std::numbers::pi);
/// Amplitude of the exact triangle-wave Fourier series, 2*sqrt(2)/pi^2.
inline constexpr double kVanillaAmplitude = 2.0 * std::numbers::sqrt2 / (std::numbers::pi * std::numbers::pi);
inline constexpr double kDefaultAmplitude = 0.21;
inline constexpr double kSingularTolerance = 1e-12;

/// c = sqrt(2)*pi*A.
inline constexpr double amplitude_to_c(double amplitude) {
  return std::numbers::sqrt2 * std::numbers::pi * amplitude;
}

struct Ste {
  bool operator==(const Ste&) const = default;
};

struct Rdfs {
  double amplitude = kDefaultAmplitude;
  int order = 0;
  /// Permits A in [1/(sqrt2 pi), 2 sqrt2/pi^2] for the amplitude ablation.
  bool ill_conditioned = false;
  bool operator==(const Rdfs&) const = default;
};

struct Dsq {
  double alpha = 0.2;
  bool operator==(const Dsq&) const = default;
};

enum class SurrogateKind { ste, rdfs, dsq };

inline std::string to_string(SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::ste: return "ste";
    case SurrogateKind::rdfs: return "rdfs";
    case SurrogateKind::dsq: return "dsq";
  }
  return "unknown";
}

/// Immutable, validated choice of backward rule.
class SurrogateSpec {
 public:
  using Variant = std::variant<Ste, Rdfs, Dsq>;

  static SurrogateSpec ste() { return SurrogateSpec(Ste{}); }

  static SurrogateSpec rdfs(double amplitude = kDefaultAmplitude, int order = 0) {
    if (!(amplitude >= 0.0) || !(amplitude < kWellConditionedAmplitude)) {
      throw DomainError("RDFS amplitude must lie in [0, 1/(sqrt(2)*pi)), got " + std::to_string(amplitude) +
                        "; use rdfs_ablation for the ill-conditioned regime");
    }
    if (order < 0) throw DomainError("RDFS order must be >= 0");
    return SurrogateSpec(Rdfs{amplitude, order, false});
  }

  /// Amplitudes up to the vanilla Fourier amplitude, flagged as ill-conditioned.
  static SurrogateSpec rdfs_ablation(double amplitude, int order = 0) {
    if (!(amplitude >= 0.0) || !(amplitude <= kVanillaAmplitude)) {
      throw DomainError("RDFS ablation amplitude must lie in [0, 2*sqrt(2)/pi^2], got " +
                        std::to_string(amplitude));
    }
    if (order < 0) throw DomainError("RDFS order must be >= 0");
    return SurrogateSpec(Rdfs{amplitude, order, true});
  }

  static SurrogateSpec dsq(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("DSQ alpha must lie in (0, 1), got " + std::to_string(alpha));
    return SurrogateSpec(Dsq{alpha});
  }

  SurrogateKind kind() const { return static_cast<SurrogateKind>(value_.index()); }
  const Variant& variant() const { return value_; }

  const Rdfs& as_rdfs() const { return std::get<Rdfs>(value_); }
  const Dsq& as_dsq() const { return std::get<Dsq>(value_); }

  /// Short label, e.g. "ste", "rdfs(A=0.21,M=0)", "dsq(alpha=0.5)".
  std::string label() const {
    char buf[96];
    switch (kind()) {
      case SurrogateKind::ste:
        return "ste";
      case SurrogateKind::rdfs:
        std::snprintf(buf, sizeof buf, "rdfs(A=%.6g,M=%d)", as_rdfs().amplitude, as_rdfs().order);
        return buf;
      case SurrogateKind::dsq:
        std::snprintf(buf, sizeof buf, "dsq(alpha=%.6g)", as_dsq().alpha);
        return buf;
    }
    return "unknown";
  }

  bool operator==(const SurrogateSpec&) const = default;

 private:
  explicit SurrogateSpec(Variant v) : value_(v) {}
  Variant value_;
};

// ---------------------------------------------------------------------------
// STE

inline constexpr double g_ste(double /*x*/) noexcept { return 1.0; }

// ---------------------------------------------------------------------------
// RDFS

namespace detail {

/// sum_{m=0..M} (-1)^m/(2m+1) cos((2m+1) * phase)
inline double rdfs_cosine_sum(double phase, int order) {
  if (order == 0) return std::cos(phase);
  double sum = 0.0;
  for (int m = 0; m <= order; ++m) {
    const double k = 2.0 * m + 1.0;
    const double term = std::cos(k * phase) / k;
    sum += (m % 2 == 0) ? term : -term;
  }
  return sum;
}

inline double rdfs_ratio(double s) {
  const double den = 1.0 + s;
  if (std::abs(den) < kSingularTolerance) throw SingularError("RDFS denominator 1 + S vanished");
  return (1.0 - s) / den;
}

}  // namespace detail

inline double g_rdfs(double x, double x_q, double amplitude, int order) {
  if (!(amplitude >= 0.0)) throw DomainError("RDFS amplitude must be >= 0");
  if (order < 0) throw DomainError("RDFS order must be >= 0");
  const double s = amplitude_to_c(amplitude) * detail::rdfs_cosine_sum(std::numbers::pi * (x + x_q), order);
  return detail::rdfs_ratio(s);
}

inline double g_rdfs_first_order(double x, double x_q, double amplitude) {
  if (!(amplitude >= 0.0)) throw DomainError("RDFS amplitude must be >= 0");
  const double s = amplitude_to_c(amplitude) * std::cos(std::numbers::pi * (x + x_q));
  return detail::rdfs_ratio(s);
}

// ---------------------------------------------------------------------------
// DSQ

/// Clip range [l, u] split into 2^b - 1 equal intervals P_i = [l + i*Delta, l + (i+1)*Delta).
struct DsqLayout {
  double l = -1.0;
  double u = 1.0;
  int bits = 3;

  static DsqLayout make(double l, double u, int bits) {
    if (!(l < u) || !std::isfinite(l) || !std::isfinite(u)) throw DomainError("DSQ layout needs finite l < u");
    if (bits < 1 || bits > 16) throw DomainError("DSQ layout bits must be in [1, 16]");
    return DsqLayout{l, u, bits};
  }

  std::int64_t interval_count() const { return (std::int64_t{1} << bits) - 1; }
  double delta() const { return (u - l) / static_cast<double>(interval_count()); }
  double edge(std::int64_t i) const { return l + static_cast<double>(i) * delta(); }
  double midpoint(std::int64_t i) const { return l + (static_cast<double>(i) + 0.5) * delta(); }

  /// Index of the interval containing x, clamped to the valid range.
  std::int64_t interval_of(double x) const {
    const auto i = static_cast<std::int64_t>(std::floor((x - l) / delta()));
    return std::clamp<std::int64_t>(i, 0, interval_count() - 1);
  }
};

/// beta = ln((2 - alpha)/alpha); k = beta/Delta and s_dsq = 1/(1 - alpha).
inline double dsq_beta(double alpha) { return std::log((2.0 - alpha) / alpha); }

inline double dsq_forward(double x, double alpha, const DsqLayout& layout) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("DSQ alpha must lie in (0, 1)");
  if (x < layout.l) return layout.l;
  if (x >= layout.u) return layout.u;
  const std::int64_t i = layout.interval_of(x);
  const double delta = layout.delta();
  const double k = dsq_beta(alpha) / delta;
  const double phi = std::tanh(k * (x - layout.midpoint(i))) / (1.0 - alpha);
  return layout.l + delta * (static_cast<double>(i) + 0.5 * (phi + 1.0));
}

/// Zero outside [l, u).
inline double g_dsq(double x, double alpha, const DsqLayout& layout) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("DSQ alpha must lie in (0, 1)");
  if (!(x >= layout.l && x < layout.u)) return 0.0;
  const std::int64_t i = layout.interval_of(x);
  const double beta = dsq_beta(alpha);
  const double ch = std::cosh(beta / layout.delta() * (x - layout.midpoint(i)));
  return beta / (2.0 * (1.0 - alpha)) / (ch * ch);
}

// ---------------------------------------------------------------------------
// Tensor-level backward

/// DSQ clip range tied to the quantizer: [-s*L, s*L] with L = max(|q_min|, q_max),
/// which equals [-max_abs, max_abs] under the max-abs scale policy.
inline DsqLayout dsq_layout_for(const QuantConfig& cfg) {
  const double half = cfg.scale * static_cast<double>(cfg.max_abs_level());
  return DsqLayout::make(-half, half, cfg.bits);
}

namespace detail {

/// RDFS multiplier for an on-grid level q: cos((2m+1)pi(v+q)) == cos((2m+1)pi(v-q)) for integer q,
/// so the phase is reduced to [-pi/2, pi/2] before the cosine.
inline double rdfs_on_grid(double v, double q, double c, int order) {
  const double s = c * rdfs_cosine_sum(std::numbers::pi * (v - q), order);
  return rdfs_ratio(s);
}

}  // namespace detail

/// Writes upstream[i] * g_i into out, with g_i = 0 for clipped elements.
inline void surrogate_backward_into(std::span<const double> upstream, std::span<const double> x,
                                    const QuantConfig& cfg, const SurrogateSpec& spec, std::span<double> out) {
  if (upstream.size() != x.size() || out.size() != x.size()) {
    throw ShapeError("surrogate_backward: upstream, input and output sizes differ");
  }
  const std::size_t n = x.size();
  const double inv_scale = 1.0 / cfg.scale;
  const double lo = static_cast<double>(cfg.q_min - cfg.zero_point);
  const double hi = static_cast<double>(cfg.q_max - cfg.zero_point);

  switch (spec.kind()) {
    case SurrogateKind::ste:
      for (std::size_t i = 0; i < n; ++i) {
        const double v = x[i] * inv_scale;
        out[i] = (v >= lo && v <= hi) ? upstream[i] : 0.0;
      }
      return;
    case SurrogateKind::rdfs: {
      const Rdfs& r = spec.as_rdfs();
      const double c = amplitude_to_c(r.amplitude);
      for (std::size_t i = 0; i < n; ++i) {
        const double v = x[i] * inv_scale;
        if (!(v >= lo && v <= hi)) {
          out[i] = 0.0;
          continue;
        }
        out[i] = upstream[i] * detail::rdfs_on_grid(v, round_with(v, cfg.rounding), c, r.order);
      }
      return;
    }
    case SurrogateKind::dsq: {
      const double alpha = spec.as_dsq().alpha;
      const DsqLayout layout = dsq_layout_for(cfg);
      const double delta = layout.delta();
      const double beta = dsq_beta(alpha);
      const double k = beta / delta;
      const double peak = beta / (2.0 * (1.0 - alpha));
      const std::int64_t last = layout.interval_count() - 1;
      for (std::size_t i = 0; i < n; ++i) {
        const double xi = x[i];
        const double v = xi * inv_scale;
        if (!(v >= lo && v <= hi) || !(xi >= layout.l && xi < layout.u)) {
          out[i] = 0.0;
          continue;
        }
        auto idx = static_cast<std::int64_t>(std::floor((xi - layout.l) / delta));
        idx = idx < 0 ? 0 : (idx > last ? last : idx);
        const double ch = std::cosh(k * (xi - layout.midpoint(idx)));
        out[i] = upstream[i] * peak / (ch * ch);
      }
      return;
    }
  }
}

inline Tensor surrogate_backward(const Tensor& upstream, const Tensor& x, const QuantConfig& cfg,
                                 const SurrogateSpec& spec) {
  if (upstream.shape() != x.shape()) {
    throw ShapeError("surrogate_backward shape mismatch: " + shape_to_string(upstream.shape()) + " vs " +
                     shape_to_string(x.shape()));
  }
  Tensor out(x.shape());
  surrogate_backward_into(upstream.values(), x.values(), cfg, spec, out.values());
  return out;
}

/// The elementwise multipliers g_i themselves (upstream = 1).
inline Tensor surrogate_multipliers(const Tensor& x, const QuantConfig& cfg, const SurrogateSpec& spec) {
  return surrogate_backward(Tensor::ones(x.shape()), x, cfg, spec);
}

}  // namespace qatlab
