// Copyright 2026 The alti-plus Authors
// Licensed under the Apache License, Version 2.0

#ifndef ALTI_TENSOR_HPP
#define ALTI_TENSOR_HPP

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace alti {

/// Dense row-major matrix. Small and value-semantic; the engine works at
/// sentence scale so no BLAS is involved.
template <class Real>
class Matrix {
 public:
  using value_type = Real;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, Real fill = Real{0})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = Real{1};
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  const Real& operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  std::span<Real> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const Real> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::span<Real> flat() { return data_; }
  std::span<const Real> flat() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Real> data_;
};

// Reductions accumulate in double whatever the storage type.

template <class A, class B>
double dot(const A& a, const B& b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += static_cast<double>(a[k]) * static_cast<double>(b[k]);
  return acc;
}

template <class Range>
double l1_norm(const Range& a) {
  double acc = 0.0;
  for (auto v : a) acc += std::abs(static_cast<double>(v));
  return acc;
}

/// Manhattan distance. For b == 0 this performs the same operations in the
/// same order as l1_norm(a), so the two agree bit-for-bit.
template <class A, class B>
double l1_distance(const A& a, const B& b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    acc += std::abs(static_cast<double>(a[k]) - static_cast<double>(b[k]));
  return acc;
}

template <class Range>
double l2_norm(const Range& a) {
  return std::sqrt(dot(a, a));
}

/// out = W x + b, W stored out×in.
template <class Real>
void affine(const Matrix<Real>& w, std::span<const Real> b, std::span<const Real> x, std::span<Real> out) {
  assert(w.cols() == x.size() && w.rows() == out.size() && b.size() == out.size());
  for (std::size_t r = 0; r < w.rows(); ++r)
    out[r] = static_cast<Real>(dot(w.row(r), x) + static_cast<double>(b[r]));
}

/// Applies affine() to every row of xs.
template <class Real>
Matrix<Real> affine_rows(const Matrix<Real>& w, std::span<const Real> b, const Matrix<Real>& xs) {
  Matrix<Real> out(xs.rows(), w.rows());
  for (std::size_t i = 0; i < xs.rows(); ++i) affine(w, b, xs.row(i), out.row(i));
  return out;
}

/// Plain product a·b in double.
inline Matrix<double> matmul(const Matrix<double>& a, const Matrix<double>& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: shape mismatch " + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " * " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
  Matrix<double> out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

inline Matrix<double> add(const Matrix<double>& a, const Matrix<double>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("add: shape mismatch");
  Matrix<double> out = a;
  for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] += b.data()[k];
  return out;
}

template <class A, class B>
double max_abs_diff(const A& a, const B& b) {
  assert(a.size() == b.size());
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    m = std::max(m, std::abs(static_cast<double>(a[k]) - static_cast<double>(b[k])));
  return m;
}

/// Index of the largest element; ties go to the lowest index.
template <class Range>
std::size_t argmax(const Range& v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] > v[best]) best = k;
  return best;
}

}  // namespace alti

#endif  // ALTI_TENSOR_HPP
