#pragma once

/**
 * Uniform affine fake quantization.
 *
 *   x_q = clip(round(x / s) + z, q_min, q_max)
 *   x^  = s * (x_q - z)
 *
 * signed b-bit:   q in [-2^(b-1), 2^(b-1) - 1]
 * unsigned b-bit: q in [0, 2^b - 1]
 *
 * Scale policy is per-tensor max-abs; the scale is never learned.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "qatlab/error.hpp"
#include "qatlab/tensor.hpp"

namespace qatlab {

enum class Rounding { half_to_even, half_away_from_zero };

struct QuantConfig {
  int bits = 8;
  bool is_signed = true;
  double scale = 1.0;
  std::int64_t zero_point = 0;
  std::int64_t q_min = -128;
  std::int64_t q_max = 127;
  Rounding rounding = Rounding::half_to_even;

  /// Validated construction; q_min/q_max follow from (bits, is_signed).
  static QuantConfig make(int bits, bool is_signed = true, double scale = 1.0, std::int64_t zero_point = 0,
                          Rounding rounding = Rounding::half_to_even) {
    if (bits < 2 || bits > 8) throw DomainError("bits must be in [2, 8], got " + std::to_string(bits));
    if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("scale must be positive and finite");
    QuantConfig cfg;
    cfg.bits = bits;
    cfg.is_signed = is_signed;
    cfg.scale = scale;
    cfg.zero_point = zero_point;
    cfg.rounding = rounding;
    if (is_signed) {
      cfg.q_min = -(std::int64_t{1} << (bits - 1));
      cfg.q_max = (std::int64_t{1} << (bits - 1)) - 1;
    } else {
      cfg.q_min = 0;
      cfg.q_max = (std::int64_t{1} << bits) - 1;
    }
    if (zero_point < cfg.q_min || zero_point > cfg.q_max) {
      throw DomainError("zero point " + std::to_string(zero_point) + " outside [q_min, q_max]");
    }
    return cfg;
  }

  QuantConfig with_scale(double s) const {
    return make(bits, is_signed, s, zero_point, rounding);
  }

  /// max(|q_min|, q_max): the level count the max-abs scale maps onto.
  std::int64_t max_abs_level() const { return std::max(-q_min, q_max); }

  bool operator==(const QuantConfig&) const = default;
};

/// half_to_even uses nearbyint under the default round-to-nearest floating-point environment.
inline double round_with(double v, Rounding mode) {
  if (mode == Rounding::half_away_from_zero) return std::round(v);
  return std::nearbyint(v);
}

/// Per-tensor max-abs scale; 1 for an all-zero tensor.
inline double compute_scale(const Tensor& t, const QuantConfig& tmpl) {
  if (t.empty()) throw DomainError("compute_scale: empty tensor");
  const double m = reduce(t, Reduction::max_abs);
  if (m == 0.0) return 1.0;
  return m / static_cast<double>(tmpl.max_abs_level());
}

/// True when x/s lies in [q_min - z, q_max - z], i.e. x is not clipped.
inline bool in_clip_range(double x, const QuantConfig& cfg) {
  const double v = x / cfg.scale;
  return v >= static_cast<double>(cfg.q_min - cfg.zero_point) &&
         v <= static_cast<double>(cfg.q_max - cfg.zero_point);
}

inline std::int64_t quantize(double x, const QuantConfig& cfg) {
  const double v = round_with(x / cfg.scale, cfg.rounding) + static_cast<double>(cfg.zero_point);
  // NaN has no meaningful level; it maps to the zero point.
  if (std::isnan(v)) return cfg.zero_point;
  const double clipped = std::clamp(v, static_cast<double>(cfg.q_min), static_cast<double>(cfg.q_max));
  return static_cast<std::int64_t>(clipped);
}

inline double dequantize(std::int64_t level, const QuantConfig& cfg) {
  if (level < cfg.q_min || level > cfg.q_max) {
    throw DomainError("level " + std::to_string(level) + " outside [" + std::to_string(cfg.q_min) + ", " +
                      std::to_string(cfg.q_max) + "]");
  }
  return cfg.scale * static_cast<double>(level - cfg.zero_point);
}

inline double fake_quant(double x, const QuantConfig& cfg) { return dequantize(quantize(x, cfg), cfg); }

inline Tensor fake_quant(const Tensor& t, const QuantConfig& cfg) {
  return map(t, [&cfg](double x) { return fake_quant(x, cfg); });
}

}  // namespace qatlab
