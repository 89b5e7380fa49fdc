#pragma once

#include <Eigen/Core>

#include "lfdeblur/tensor.hpp"

namespace lfdeblur {

// Thin row-major Eigen views over raw buffers; all heavy matrix products in
// the project route through these.
template <class T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <class T>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <class T>
MatMap<T> as_matrix(T* p, int64_t rows, int64_t cols) {
  return MatMap<T>(p, rows, cols);
}

template <class T>
ConstMatMap<T> as_matrix(const T* p, int64_t rows, int64_t cols) {
  return ConstMatMap<T>(p, rows, cols);
}

// C = A * B, with optional accumulate.
template <class T>
void matmul(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n, bool accumulate = false) {
  auto A = as_matrix(a, m, k);
  auto B = as_matrix(b, k, n);
  auto C = as_matrix(c, m, n);
  if (accumulate)
    C.noalias() += A * B;
  else
    C.noalias() = A * B;
}

// C = A^T * B.
template <class T>
void matmul_tn(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n,
               bool accumulate = false) {
  auto A = as_matrix(a, k, m);
  auto B = as_matrix(b, k, n);
  auto C = as_matrix(c, m, n);
  if (accumulate)
    C.noalias() += A.transpose() * B;
  else
    C.noalias() = A.transpose() * B;
}

// C = A * B^T.
template <class T>
void matmul_nt(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n,
               bool accumulate = false) {
  auto A = as_matrix(a, m, k);
  auto B = as_matrix(b, n, k);
  auto C = as_matrix(c, m, n);
  if (accumulate)
    C.noalias() += A * B.transpose();
  else
    C.noalias() = A * B.transpose();
}

}  // namespace lfdeblur
