#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gerseg/common.hpp"

namespace gerseg {

// Dense row-major tensor. Value semantics throughout: ops return fresh
// tensors, nothing aliases. Rank is small (<= 5 in practice) and dimensions
// fit comfortably in int; flat sizes use int64.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(count(shape_)), T(0));
  }

  Tensor(std::vector<int> shape, std::vector<T> values)
      : shape_(std::move(shape)), data_(std::move(values)) {
    GERSEG_CHECK_SHAPE(static_cast<int64_t>(data_.size()) == count(shape_),
                       "tensor value count does not match shape");
  }

  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<int> shape, T v) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = v;
    return t;
  }

  int ndim() const { return static_cast<int>(shape_.size()); }

  // dim(-1) is the last dimension, like negative indexing elsewhere.
  int dim(int i) const {
    const int n = ndim();
    if (i < 0) i += n;
    GERSEG_CHECK_SHAPE(i >= 0 && i < n, "tensor dimension index out of range");
    return shape_[static_cast<size_t>(i)];
  }

  const std::vector<int>& shape() const { return shape_; }

  int64_t numel() const { return static_cast<int64_t>(data_.size()); }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  template <typename... Ix>
  T& at(Ix... ix) {
    return data_[static_cast<size_t>(offset(ix...))];
  }

  template <typename... Ix>
  const T& at(Ix... ix) const {
    return data_[static_cast<size_t>(offset(ix...))];
  }

  // Same data, new shape. Copies from an lvalue, steals from an rvalue.
  Tensor reshaped(std::vector<int> s) const& {
    GERSEG_CHECK_SHAPE(count(s) == numel(), "reshape changes element count");
    return Tensor(std::move(s), data_);
  }

  Tensor reshaped(std::vector<int> s) && {
    GERSEG_CHECK_SHAPE(count(s) == numel(), "reshape changes element count");
    return Tensor(std::move(s), std::move(data_));
  }

  static int64_t count(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
      GERSEG_CHECK_SHAPE(d > 0, "tensor dimensions must be positive");
      n *= d;
    }
    return n;
  }

 private:
  template <typename... Ix>
  int64_t offset(Ix... ix) const {
    assert(sizeof...(Ix) == shape_.size());
    const int idx[] = {static_cast<int>(ix)...};
    int64_t off = 0;
    for (size_t i = 0; i < sizeof...(Ix); ++i) {
      assert(idx[i] >= 0 && idx[i] < shape_[i]);
      off = off * shape_[i] + idx[i];
    }
    return off;
  }

  std::vector<int> shape_;
  std::vector<T> data_;
};

template <typename T>
std::string shape_string(const Tensor<T>& t) {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < t.ndim(); ++i) os << (i ? "," : "") << t.shape()[static_cast<size_t>(i)];
  os << "]";
  return os.str();
}

template <typename T>
Tensor<T> random_uniform(std::vector<int> shape, std::mt19937& rng, T lo = T(-1), T hi = T(1)) {
  Tensor<T> t(std::move(shape));
  std::uniform_real_distribution<double> dist(static_cast<double>(lo), static_cast<double>(hi));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(dist(rng));
  return t;
}

template <typename T>
T max_abs(const Tensor<T>& t) {
  T m = T(0);
  for (int64_t i = 0; i < t.numel(); ++i) m = std::max(m, std::abs(t[i]));
  return m;
}

// Largest entrywise deviation divided by the largest magnitude present in
// either tensor. This is the error measure used by the equivariance and
// oracle checks; it is well conditioned even when individual entries vanish.
template <typename T>
double max_rel_err(const Tensor<T>& a, const Tensor<T>& b) {
  GERSEG_CHECK_SHAPE(a.same_shape(b), "max_rel_err: shape mismatch " + shape_string(a) + " vs " + shape_string(b));
  double num = 0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    num = std::max(num, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  }
  double den = std::max(static_cast<double>(max_abs(a)), static_cast<double>(max_abs(b)));
  den = std::max(den, 1e-30);
  return num / den;
}

}  // namespace gerseg
