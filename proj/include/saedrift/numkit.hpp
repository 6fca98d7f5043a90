// Copyright 2026 The saedrift Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "saedrift/error.hpp"

namespace saedrift {

/// Reductions always accumulate in this type regardless of storage precision.
using accum_t = double;

/// Dense row-major matrix. Storage precision is the template parameter; the
/// library stores activations and weights as `float`.
template <typename T>
class BasicMatrix {
 public:
  using value_type = T;

  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T{0}) {}
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      fail(ErrorKind::shape, "matrix data length " + std::to_string(data_.size()) + " != " +
                                 std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }

  static BasicMatrix identity(std::size_t n) {
    BasicMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  static BasicMatrix from_rows(const std::vector<std::vector<T>>& rows) {
    const std::size_t c = rows.empty() ? 0 : rows.front().size();
    BasicMatrix m(rows.size(), c);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != c) fail(ErrorKind::shape, "ragged row list");
      for (std::size_t j = 0; j < c; ++j) m(r, j) = rows[r][j];
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  /// Rows [first, first + count) as a new matrix.
  BasicMatrix slice_rows(std::size_t first, std::size_t count) const {
    if (first + count > rows_) fail(ErrorKind::index, "row slice out of range");
    BasicMatrix out(count, cols_);
    std::copy(data_.begin() + static_cast<std::ptrdiff_t>(first * cols_),
              data_.begin() + static_cast<std::ptrdiff_t>((first + count) * cols_), out.data_.begin());
    return out;
  }

  template <typename U>
  BasicMatrix<U> cast() const {
    BasicMatrix<U> out(rows_, cols_);
    for (std::size_t i = 0; i < data_.size(); ++i) out.values()[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool all_finite() const noexcept {
    for (const T& v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const BasicMatrix& a, const BasicMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<float>;

namespace detail {

template <typename T>
void require_finite(const BasicMatrix<T>& m, const char* op) {
  if (!m.all_finite()) fail(ErrorKind::divergence, std::string(op) + " produced a non-finite value");
}

inline std::string dims(std::size_t r, std::size_t c) { return std::to_string(r) + "x" + std::to_string(c); }

}  // namespace detail

/// a[r x k] * b[k x c]. Each output element sums over k sequentially.
template <typename T>
BasicMatrix<T> matmul(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.rows()) {
    fail(ErrorKind::shape, "matmul " + detail::dims(a.rows(), a.cols()) + " * " + detail::dims(b.rows(), b.cols()));
  }
  BasicMatrix<T> out(a.rows(), b.cols());
  std::vector<accum_t> acc(b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const accum_t aik = a(i, k);
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) acc[j] += aik * static_cast<accum_t>(brow[j]);
    }
    for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) = static_cast<T>(acc[j]);
  }
  detail::require_finite(out, "matmul");
  return out;
}

/// a[r x k] * b[c x k]^T without materialising the transpose.
template <typename T>
BasicMatrix<T> matmul_transposed(const BasicMatrix<T>& a, const BasicMatrix<T>& b) {
  if (a.cols() != b.cols()) {
    fail(ErrorKind::shape,
         "matmul_transposed " + detail::dims(a.rows(), a.cols()) + " * (" + detail::dims(b.rows(), b.cols()) + ")^T");
  }
  BasicMatrix<T> out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto brow = b.row(j);
      accum_t acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += static_cast<accum_t>(arow[k]) * static_cast<accum_t>(brow[k]);
      out(i, j) = static_cast<T>(acc);
    }
  }
  detail::require_finite(out, "matmul_transposed");
  return out;
}

template <typename T>
BasicMatrix<T> transposed(const BasicMatrix<T>& m) {
  BasicMatrix<T> out(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = m(r, c);
  return out;
}

/// Column means, accumulated sequentially over rows in 64-bit.
template <typename T>
std::vector<accum_t> column_means(const BasicMatrix<T>& m) {
  if (m.rows() == 0) fail(ErrorKind::empty_input, "mean of a matrix with no rows");
  std::vector<accum_t> acc(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) acc[c] += static_cast<accum_t>(row[c]);
  }
  const auto n = static_cast<accum_t>(m.rows());
  for (auto& v : acc) v /= n;
  return acc;
}

template <typename T>
BasicMatrix<T> rowwise_mean(const BasicMatrix<T>& m) {
  const auto means = column_means(m);
  BasicMatrix<T> out(1, m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) out(0, c) = static_cast<T>(means[c]);
  detail::require_finite(out, "rowwise_mean");
  return out;
}

/// Seeded SplitMix64 stream (Steele, Lea & Flood 2014). The generator and the
/// conversions below are part of the file-format contract: any
/// implementation reproducing them reproduces every synthetic set and every
/// initialisation bit for bit.
///
///   next_u64:   state += 0x9E3779B97F4A7C15; z = state;
///               z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
///               z = (z ^ (z >> 27)) * 0x94D049BB133111EB;
///               return z ^ (z >> 31)
///   uniform01:  (next_u64 >> 11) * 2^-53            in [0, 1)
///   next_below: rejection of draws >= 2^64 - (2^64 mod n), then draw mod n
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0) noexcept : seed_(seed), state_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t state() const noexcept { return state_; }

  std::uint64_t next_u64() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) fail(ErrorKind::range, "next_below(0)");
    // 2^64 mod n computed without overflow as (-n) mod n.
    const std::uint64_t reject_from = std::numeric_limits<std::uint64_t>::max() - ((0 - n) % n);
    std::uint64_t x = next_u64();
    while (x > reject_from) x = next_u64();
    return x % n;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

/// n floats in [lo, hi). Values that round up to hi in float are stepped down
/// one ulp so the half-open contract holds in storage precision.
inline Matrix uniform_sample(RngStream& rng, double lo, double hi, std::size_t n) {
  if (!(lo < hi)) fail(ErrorKind::range, "uniform_sample requires lo < hi");
  Matrix out(1, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto v = static_cast<float>(rng.uniform(lo, hi));
    while (static_cast<double>(v) >= hi) v = std::nextafter(v, -std::numeric_limits<float>::infinity());
    out(0, i) = v;
  }
  return out;
}

}  // namespace saedrift
