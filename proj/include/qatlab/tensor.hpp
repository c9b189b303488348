#pragma once

// Dense row-major float64 tensors. No broadcasting, no views: every op returns
// a fresh value and never mutates its inputs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qatlab/error.hpp"

namespace qatlab {

using Shape = std::vector<std::size_t>;

inline std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

class Tensor {
 public:
  /// The empty tensor: rank 0, no elements. Only reductions reject it.
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
    data_.assign(checked_numel(shape_), fill);
  }

  Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != checked_numel(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_to_string(shape_));
    }
  }

  /// 1-D tensor from a list of values.
  static Tensor vector(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
    return Tensor({rows, cols}, std::move(values));
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), 1.0); }

  static Tensor identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t numel() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t rows() const { return dim(0); }
  std::size_t cols() const { return dim(1); }

  std::size_t dim(std::size_t axis) const {
    if (axis >= shape_.size()) throw ShapeError("axis out of range for shape " + shape_to_string(shape_));
    return shape_[axis];
  }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }

  bool operator==(const Tensor&) const = default;

 private:
  static std::size_t checked_numel(const Shape& shape) {
    if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
    std::size_t n = 1;
    for (std::size_t d : shape) {
      if (d == 0) throw ShapeError("tensor shape entries must be >= 1, got " + shape_to_string(shape));
      n *= d;
    }
    return n;
  }

  Shape shape_;
  std::vector<double> data_;
};

template <typename F>
Tensor map(const Tensor& t, F&& f) {
  Tensor out = t;
  for (double& v : out.values()) v = f(v);
  return out;
}

/// Elementwise binary op over two tensors of identical shape.
template <typename F>
Tensor zip_map(const Tensor& a, const Tensor& b, F&& f) {
  if (a.shape() != b.shape()) {
    throw ShapeError("elementwise shape mismatch: " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
  Tensor out = a;
  auto rhs = b.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = f(dst[i], rhs[i]);
  return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) { return zip_map(a, b, std::plus<>{}); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return zip_map(a, b, std::minus<>{}); }
inline Tensor hadamard(const Tensor& a, const Tensor& b) { return zip_map(a, b, std::multiplies<>{}); }
inline Tensor scale(const Tensor& t, double k) {
  return map(t, [k](double v) { return k * v; });
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw ShapeError("matmul needs 2-D operands, got " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw ShapeError("matmul inner dimensions differ: " + shape_to_string(a.shape()) + " x " +
                     shape_to_string(b.shape()));
  }
  Tensor out({m, n});
  // i-p-j loop order keeps the inner loop contiguous in both b and out.
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a.at(i, p);
      for (std::size_t j = 0; j < n; ++j) out.at(i, j) += aip * b.at(p, j);
    }
  }
  return out;
}

inline Tensor transpose(const Tensor& t) {
  if (t.rank() != 2) throw ShapeError("transpose needs a 2-D tensor, got " + shape_to_string(t.shape()));
  Tensor out({t.cols(), t.rows()});
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) out.at(j, i) = t.at(i, j);
  return out;
}

enum class Reduction { sum, mean, l2norm, max_abs };

inline double reduce(const Tensor& t, Reduction kind) {
  if (t.empty()) throw DomainError("cannot reduce an empty tensor");
  auto v = t.values();
  switch (kind) {
    case Reduction::sum:
      return std::accumulate(v.begin(), v.end(), 0.0);
    case Reduction::mean:
      return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    case Reduction::l2norm: {
      double ss = 0.0;
      for (double x : v) ss += x * x;
      return std::sqrt(ss);
    }
    case Reduction::max_abs: {
      double m = 0.0;
      for (double x : v) m = std::max(m, std::abs(x));
      return m;
    }
  }
  throw DomainError("unknown reduction kind");
}

}  // namespace qatlab
