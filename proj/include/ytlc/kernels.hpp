#pragma once

#include <cstddef>

// Inner-loop arithmetic kernels. Float entry points dispatch at load time to
// the best ISA variant available (AVX2+FMA on x86-64, NEON on aarch64,
// scalar otherwise); the environment variable YTLC_ISA=scalar forces the
// reference path. Double entry points are always scalar; they exist for the
// gradient-checking mode only.
//
// Kernel selection is fixed for the lifetime of the process, so repeated
// runs on one machine are bitwise reproducible.

namespace ytlc::kern {

// Name of the ISA variant currently bound ("scalar", "avx2", "neon").
const char* active_isa();

float dot(const float* a, const float* b, std::size_t n);
// y += alpha * x
void axpy(float alpha, const float* x, float* y, std::size_t n);
void scale(float alpha, float* x, std::size_t n);
void vadd(const float* a, const float* b, float* out, std::size_t n);
void vmul(const float* a, const float* b, float* out, std::size_t n);
float reduce_max(const float* x, std::size_t n);
void relu(const float* x, float* y, std::size_t n);

namespace ref {

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void scale(T alpha, T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

template <typename T>
void vadd(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T>
void vmul(const T* a, const T* b, T* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename T>
T reduce_max(const T* x, std::size_t n) {
  T m = x[0];
  for (std::size_t i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

template <typename T>
void relu(const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

}  // namespace ref

inline double dot(const double* a, const double* b, std::size_t n) {
  return ref::dot(a, b, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  ref::axpy(alpha, x, y, n);
}
inline void scale(double alpha, double* x, std::size_t n) {
  ref::scale(alpha, x, n);
}
inline void vadd(const double* a, const double* b, double* out, std::size_t n) {
  ref::vadd(a, b, out, n);
}
inline void vmul(const double* a, const double* b, double* out, std::size_t n) {
  ref::vmul(a, b, out, n);
}
inline double reduce_max(const double* x, std::size_t n) {
  return ref::reduce_max(x, n);
}
inline void relu(const double* x, double* y, std::size_t n) {
  ref::relu(x, y, n);
}

}  // namespace ytlc::kern
