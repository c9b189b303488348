#pragma once

// Latency of one full-tensor surrogate backward pass, STE vs RDFS vs DSQ.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#if defined(__linux__)
#include <sched.h>
#include <sys/utsname.h>
#endif

#include "qatlab/error.hpp"
#include "qatlab/quantizer.hpp"
#include "qatlab/rng.hpp"
#include "qatlab/surrogates.hpp"

namespace qatlab {

inline constexpr std::size_t kBenchMinElems = 10'000;
inline constexpr std::size_t kBenchMinRepeats = 5;
inline constexpr std::size_t kBenchWarmups = 3;
inline constexpr int kBenchBits = 4;

struct BenchResult {
  std::string label;
  std::size_t n_elems = 0;
  std::size_t repeats = 0;
  double median_ns = 0.0;
  double p10_ns = 0.0;
  double p90_ns = 0.0;
  std::size_t workspace_bytes = 0;
  std::vector<double> samples_ns;
  bool pinned = false;
  std::string host;
};

/// Temporary bytes of the fused kernel: the output buffer only, for every rule.
/// None of the kernels materializes per-element intermediates.
inline std::size_t workspace_bytes(const SurrogateSpec& /*spec*/, std::size_t n_elems) {
  return sizeof(double) * n_elems;
}

/// Linear interpolation between closest ranks; `sorted` must be ascending and nonempty.
inline double percentile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw DomainError("percentile of an empty sample");
  const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// Pins the calling thread to its current CPU. Returns false where unsupported.
inline bool pin_to_single_core() {
#if defined(__linux__)
  const int cpu = sched_getcpu();
  if (cpu < 0) return false;
  cpu_set_t set;
  CPU_ZERO(&set);
  CPU_SET(cpu, &set);
  return sched_setaffinity(0, sizeof(set), &set) == 0;
#else
  return false;
#endif
}

/// e.g. "Linux-x86_64-4cpu"; contains no commas.
inline std::string host_descriptor() {
  std::string host;
#if defined(__linux__)
  utsname u{};
  if (uname(&u) == 0) host = std::string(u.sysname) + "-" + u.machine;
#endif
  if (host.empty()) host = "unknown";
  host += "-" + std::to_string(std::max(1u, std::thread::hardware_concurrency())) + "cpu";
  std::replace(host.begin(), host.end(), ',', ';');
  return host;
}

inline BenchResult bench_surrogate(const SurrogateSpec& spec, std::size_t n_elems, std::size_t repeats,
                                   std::uint64_t seed) {
  if (n_elems < kBenchMinElems) throw DomainError("bench_surrogate: n_elems must be >= 10^4");
  if (repeats < kBenchMinRepeats) throw DomainError("bench_surrogate: repeats must be >= 5");

  Rng rng(seed);
  std::vector<double> x(n_elems), upstream(n_elems), out(n_elems);
  for (auto& v : x) v = rng.normal();
  for (auto& v : upstream) v = rng.normal();
  double max_abs = 0.0;
  for (double v : x) max_abs = std::max(max_abs, std::abs(v));
  const QuantConfig tmpl = QuantConfig::make(kBenchBits, true);
  const QuantConfig cfg = tmpl.with_scale(max_abs / static_cast<double>(tmpl.max_abs_level()));

  BenchResult r;
  r.label = to_string(spec.kind());
  r.n_elems = n_elems;
  r.repeats = repeats;
  r.workspace_bytes = workspace_bytes(spec, n_elems);
  r.pinned = pin_to_single_core();
  r.host = host_descriptor();

  volatile double sink = 0.0;
  for (std::size_t w = 0; w < kBenchWarmups; ++w) {
    surrogate_backward_into(upstream, x, cfg, spec, out);
    sink = sink + out[w % n_elems];
  }
  r.samples_ns.reserve(repeats);
  for (std::size_t i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    surrogate_backward_into(upstream, x, cfg, spec, out);
    const auto t1 = std::chrono::steady_clock::now();
    sink = sink + out[i % n_elems];
    r.samples_ns.push_back(static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
  }

  std::vector<double> sorted = r.samples_ns;
  std::sort(sorted.begin(), sorted.end());
  r.median_ns = percentile(sorted, 50.0);
  r.p10_ns = percentile(sorted, 10.0);
  r.p90_ns = percentile(sorted, 90.0);
  return r;
}

}  // namespace qatlab
