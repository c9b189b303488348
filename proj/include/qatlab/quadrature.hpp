#pragma once

#include <cstddef>
#include <string>

#include "qatlab/error.hpp"

namespace qatlab {

inline constexpr std::size_t kDefaultSimpsonPanels = std::size_t{1} << 14;

/// Composite Simpson rule on [a, b] with an even number of panels.
/// Nodes are visited in a fixed order so the result does not depend on how a caller partitions work.
template <typename F>
double simpson(F&& f, double a, double b, std::size_t panels = kDefaultSimpsonPanels) {
  if (panels < 2 || panels % 2 != 0) throw DomainError("simpson: panel count must be even and >= 2");
  const double h = (b - a) / static_cast<double>(panels);
  double odd = 0.0;
  double even = 0.0;
  for (std::size_t i = 1; i < panels; ++i) {
    const double v = f(a + static_cast<double>(i) * h);
    if (i % 2) {
      odd += v;
    } else {
      even += v;
    }
  }
  return h / 3.0 * (f(a) + 4.0 * odd + 2.0 * even + f(b));
}

}  // namespace qatlab
