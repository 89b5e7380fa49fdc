#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "lfdeblur/error.hpp"

namespace lfdeblur {

// Dense row-major tensor. Value semantics; last index varies fastest.
template <class T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
    int64_t n = 1;
    for (int64_t d : shape_) {
      if (d <= 0) throw ShapeError("Tensor: dimensions must be positive, got " + shape_str(shape_));
      n *= d;
    }
    data_.assign(size_t(n), T(0));
  }

  Tensor(std::initializer_list<int64_t> shape) : Tensor(std::vector<int64_t>(shape)) {}

  const std::vector<int64_t>& shape() const { return shape_; }
  int rank() const { return int(shape_.size()); }
  int64_t dim(int i) const { return shape_.at(size_t(i)); }
  int64_t size() const { return int64_t(data_.size()); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](int64_t i) { return data_[size_t(i)]; }
  const T& operator[](int64_t i) const { return data_[size_t(i)]; }

  template <class... Ix>
  T& operator()(Ix... ix) {
    return data_[size_t(offset(ix...))];
  }

  template <class... Ix>
  const T& operator()(Ix... ix) const {
    return data_[size_t(offset(ix...))];
  }

  template <class... Ix>
  T& at(Ix... ix) {
    return data_[size_t(offset_checked(ix...))];
  }

  template <class... Ix>
  const T& at(Ix... ix) const {
    return data_[size_t(offset_checked(ix...))];
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  void set_zero() { fill(T(0)); }

  // In-place reshape; element count must match.
  void reshape(std::vector<int64_t> shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    if (n != size())
      throw ShapeError("Tensor::reshape: " + shape_str(shape_) + " -> " + shape_str(shape) +
                       " changes element count");
    shape_ = std::move(shape);
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  static std::string shape_str(const std::vector<int64_t>& s) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ")";
    return os.str();
  }

  std::string shape_str() const { return shape_str(shape_); }

 private:
  template <class... Ix>
  int64_t offset(Ix... ix) const {
    const int64_t idx[] = {int64_t(ix)...};
    constexpr int n = sizeof...(Ix);
    int64_t off = 0;
    for (int i = 0; i < n; ++i) off = off * shape_[size_t(i)] + idx[i];
    return off;
  }

  template <class... Ix>
  int64_t offset_checked(Ix... ix) const {
    const int64_t idx[] = {int64_t(ix)...};
    constexpr int n = sizeof...(Ix);
    if (n != rank())
      throw IndexError("Tensor: " + std::to_string(n) + " indices for rank " +
                       std::to_string(rank()) + " tensor " + shape_str());
    int64_t off = 0;
    for (int i = 0; i < n; ++i) {
      if (idx[i] < 0 || idx[i] >= shape_[size_t(i)])
        throw IndexError("Tensor: index " + std::to_string(idx[i]) + " out of range for dim " +
                         std::to_string(i) + " of " + shape_str());
      off = off * shape_[size_t(i)] + idx[i];
    }
    return off;
  }

  std::vector<int64_t> shape_;
  std::vector<T> data_;
};

template <class T>
bool all_finite(const Tensor<T>& t) {
  const T* p = t.data();
  for (int64_t i = 0; i < t.size(); ++i)
    if (!std::isfinite(double(p[i]))) return false;
  return true;
}

template <class Dst, class Src>
Tensor<Dst> cast_tensor(const Tensor<Src>& src) {
  Tensor<Dst> out(src.shape());
  const Src* s = src.data();
  Dst* d = out.data();
  for (int64_t i = 0; i < src.size(); ++i) d[i] = Dst(s[i]);
  return out;
}

}  // namespace lfdeblur
