#pragma once

#include <cassert>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace ytlc {

/// Dense row-major n-dimensional array. Float for all production paths;
/// the double instantiation exists for gradient checking.
template <typename T>
struct Tensor {
  std::vector<long> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<long> s) : shape(std::move(s)) {
    data.assign(static_cast<std::size_t>(numel_of(shape)), T(0));
  }
  Tensor(std::vector<long> s, std::vector<T> d)
      : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<long>(data.size()) != numel_of(shape))
      throw std::invalid_argument("tensor data length does not match shape");
  }

  static long numel_of(const std::vector<long>& s) {
    long n = 1;
    for (long e : s) {
      if (e < 0) throw std::invalid_argument("negative tensor extent");
      n *= e;
    }
    return n;
  }

  long numel() const { return static_cast<long>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  long dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  T& operator()(long i) { return data[static_cast<std::size_t>(i)]; }
  T operator()(long i) const { return data[static_cast<std::size_t>(i)]; }
  T& operator()(long i, long j) {
    return data[static_cast<std::size_t>(i * shape[1] + j)];
  }
  T operator()(long i, long j) const {
    return data[static_cast<std::size_t>(i * shape[1] + j)];
  }
  T& operator()(long i, long j, long k) {
    return data[static_cast<std::size_t>((i * shape[1] + j) * shape[2] + k)];
  }
  T operator()(long i, long j, long k) const {
    return data[static_cast<std::size_t>((i * shape[1] + j) * shape[2] + k)];
  }

  // Pointer to row j of a 2-d tensor, or row (i,j) of a 3-d tensor.
  T* row(long i) { return data.data() + i * shape[rank() - 1]; }
  const T* row(long i) const { return data.data() + i * shape[rank() - 1]; }
  T* row(long i, long j) {
    return data.data() + (i * shape[1] + j) * shape[2];
  }
  const T* row(long i, long j) const {
    return data.data() + (i * shape[1] + j) * shape[2];
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
  void zero() { fill(T(0)); }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
      out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

inline std::string shape_str(const std::vector<long>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace ytlc
