#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ivz/core/error.hpp"

namespace ivz {

#ifdef IVZ_USE_DOUBLE
using real = double;
#else
using real = float;
#endif

using Shape = std::vector<std::size_t>;

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

/// Dense row-major tensor. Most of the model works on rank-2 [rows, cols] views.
template <class S>
class Tensor {
 public:
  using value_type = S;

  Tensor() = default;
  explicit Tensor(Shape shape, S fill = S(0)) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}
  Tensor(Shape shape, std::vector<S> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size())
      fail(ErrorCode::Dimension, "shape " + shape_string(shape_) + " does not match " + std::to_string(data_.size()) + " values");
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<S> values) {
    return Tensor({rows, cols}, std::vector<S>(values));
  }
  static Tensor vector(std::initializer_list<S> values) {
    return Tensor({values.size()}, std::vector<S>(values));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  /// Rows of the rank-2 view: product of all leading dimensions.
  std::size_t rows() const noexcept {
    if (shape_.empty()) return 1;
    std::size_t r = 1;
    for (std::size_t i = 0; i + 1 < shape_.size(); ++i) r *= shape_[i];
    return r;
  }
  std::size_t cols() const noexcept { return shape_.empty() ? 1 : shape_.back(); }

  S* data() noexcept { return data_.data(); }
  const S* data() const noexcept { return data_.data(); }
  std::span<S> values() noexcept { return data_; }
  std::span<const S> values() const noexcept { return data_; }
  std::vector<S>& storage() noexcept { return data_; }
  const std::vector<S>& storage() const noexcept { return data_; }

  S& operator[](std::size_t i) noexcept { return data_[i]; }
  const S& operator[](std::size_t i) const noexcept { return data_[i]; }
  S& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
  const S& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }

  std::span<S> row(std::size_t r) noexcept { return {data_.data() + r * cols(), cols()}; }
  std::span<const S> row(std::size_t r) const noexcept { return {data_.data() + r * cols(), cols()}; }

  void fill(S v) { std::fill(data_.begin(), data_.end(), v); }
  void zero() { fill(S(0)); }

  Tensor reshaped(Shape shape) const {
    if (shape_size(shape) != data_.size())
      fail(ErrorCode::Dimension, "cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    return Tensor(std::move(shape), data_);
  }

  template <class U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](S v) { return std::isfinite(v); });
  }

  Tensor& operator+=(const Tensor& other) {
    check_same_shape(*this, other, "add");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }
  Tensor& operator-=(const Tensor& other) {
    check_same_shape(*this, other, "subtract");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
  }
  Tensor& operator*=(S s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend bool operator==(const Tensor& a, const Tensor& b) { return a.shape_ == b.shape_ && a.data_ == b.data_; }

  static void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape_ != b.shape_)
      fail(ErrorCode::Dimension, std::string(op) + ": shape " + shape_string(a.shape_) + " vs " + shape_string(b.shape_));
  }

 private:
  Shape shape_;
  std::vector<S> data_;
};

template <class S>
Tensor<S> operator+(Tensor<S> a, const Tensor<S>& b) {
  a += b;
  return a;
}
template <class S>
Tensor<S> operator-(Tensor<S> a, const Tensor<S>& b) {
  a -= b;
  return a;
}

// ---------------------------------------------------------------------------
// Dense kernels on rank-2 views.

/// C = A * B, A [m,k], B [k,n].
template <class S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) fail(ErrorCode::Dimension, "matmul " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  Tensor<S> c({m, n});
  const S* pa = a.data();
  const S* pb = b.data();
  S* pc = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    S* crow = pc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const S av = pa[i * k + p];
      if (av == S(0)) continue;
      const S* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

/// C += A^T * B, A [m,k], B [m,n], C [k,n].
template <class S>
void matmul_at_b_acc(const Tensor<S>& a, const Tensor<S>& b, Tensor<S>& c) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != m || c.rows() != k || c.cols() != n)
    fail(ErrorCode::Dimension, "matmul_at_b " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  const S* pa = a.data();
  const S* pb = b.data();
  S* pc = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    const S* brow = pb + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const S av = pa[i * k + p];
      if (av == S(0)) continue;
      S* crow = pc + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

/// C = A * B^T, A [m,k], B [n,k].
template <class S>
Tensor<S> matmul_a_bt(const Tensor<S>& a, const Tensor<S>& b) {
  if (b.cols() != a.cols())
    fail(ErrorCode::Dimension, "matmul_a_bt " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
  // Transposing B first keeps the inner loop a contiguous axpy, which vectorizes.
  return matmul(a, transpose(b));
}

template <class S>
Tensor<S> transpose(const Tensor<S>& a) {
  Tensor<S> t({a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

/// Horizontal concatenation of rank-2 tensors with equal row counts.
template <class S>
Tensor<S> concat_cols(std::span<const Tensor<S>* const> parts) {
  if (parts.empty()) fail(ErrorCode::Dimension, "concat_cols of nothing");
  const std::size_t rows = parts[0]->rows();
  std::size_t cols = 0;
  for (const auto* p : parts) {
    if (p->rows() != rows) fail(ErrorCode::Dimension, "concat_cols row mismatch");
    cols += p->cols();
  }
  Tensor<S> out({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t off = 0;
    for (const auto* p : parts) {
      std::copy_n(p->data() + r * p->cols(), p->cols(), out.data() + r * cols + off);
      off += p->cols();
    }
  }
  return out;
}

template <class S>
Tensor<S> concat_cols(const Tensor<S>& a, const Tensor<S>& b) {
  const Tensor<S>* parts[] = {&a, &b};
  return concat_cols<S>(std::span<const Tensor<S>* const>(parts));
}

/// Column slice [begin, begin+width) of a rank-2 tensor.
template <class S>
Tensor<S> slice_cols(const Tensor<S>& a, std::size_t begin, std::size_t width) {
  if (begin + width > a.cols()) fail(ErrorCode::Dimension, "slice_cols out of range");
  Tensor<S> out({a.rows(), width});
  for (std::size_t r = 0; r < a.rows(); ++r) std::copy_n(a.data() + r * a.cols() + begin, width, out.data() + r * width);
  return out;
}

/// Rows [begin, begin+count) of a rank-2 tensor.
template <class S>
Tensor<S> slice_rows(const Tensor<S>& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.rows()) fail(ErrorCode::Dimension, "slice_rows out of range");
  Tensor<S> out({count, a.cols()});
  std::copy_n(a.data() + begin * a.cols(), count * a.cols(), out.data());
  return out;
}

template <class S>
Tensor<S> concat_rows(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.cols() != b.cols()) fail(ErrorCode::Dimension, "concat_rows column mismatch");
  Tensor<S> out({a.rows() + b.rows(), a.cols()});
  std::copy_n(a.data(), a.size(), out.data());
  std::copy_n(b.data(), b.size(), out.data() + a.size());
  return out;
}

template <class S>
Tensor<S> gather_rows(const Tensor<S>& a, std::span<const std::size_t> idx) {
  Tensor<S> out({idx.size(), a.cols()});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= a.rows()) fail(ErrorCode::Input, "row index " + std::to_string(idx[i]) + " out of range");
    std::copy_n(a.data() + idx[i] * a.cols(), a.cols(), out.data() + i * a.cols());
  }
  return out;
}

template <class S>
S max_abs_diff(const Tensor<S>& a, const Tensor<S>& b) {
  Tensor<S>::check_same_shape(a, b, "max_abs_diff");
  S m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace ivz
