#include "ytlc/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace ytlc::kern {

namespace {

float dot_scalar(const float* a, const float* b, std::size_t n) {
  return ref::dot(a, b, n);
}
void axpy_scalar(float alpha, const float* x, float* y, std::size_t n) {
  ref::axpy(alpha, x, y, n);
}
void scale_scalar(float alpha, float* x, std::size_t n) {
  ref::scale(alpha, x, n);
}
void vadd_scalar(const float* a, const float* b, float* out, std::size_t n) {
  ref::vadd(a, b, out, n);
}
void vmul_scalar(const float* a, const float* b, float* out, std::size_t n) {
  ref::vmul(a, b, out, n);
}
float reduce_max_scalar(const float* x, std::size_t n) {
  return ref::reduce_max(x, n);
}
void relu_scalar(const float* x, float* y, std::size_t n) {
  ref::relu(x, y, n);
}

struct KernelTable {
  const char* isa;
  float (*dot)(const float*, const float*, std::size_t);
  void (*axpy)(float, const float*, float*, std::size_t);
  void (*scale)(float, float*, std::size_t);
  void (*vadd)(const float*, const float*, float*, std::size_t);
  void (*vmul)(const float*, const float*, float*, std::size_t);
  float (*reduce_max)(const float*, std::size_t);
  void (*relu)(const float*, float*, std::size_t);
};

constexpr KernelTable kScalarTable = {
    "scalar",    dot_scalar,        axpy_scalar, scale_scalar,
    vadd_scalar, vmul_scalar,       reduce_max_scalar, relu_scalar};

}  // namespace

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
float dot(const float*, const float*, std::size_t);
void axpy(float, const float*, float*, std::size_t);
void scale(float, float*, std::size_t);
void vadd(const float*, const float*, float*, std::size_t);
void vmul(const float*, const float*, float*, std::size_t);
float reduce_max(const float*, std::size_t);
void relu(const float*, float*, std::size_t);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
float dot(const float*, const float*, std::size_t);
void axpy(float, const float*, float*, std::size_t);
void scale(float, float*, std::size_t);
void vadd(const float*, const float*, float*, std::size_t);
void vmul(const float*, const float*, float*, std::size_t);
float reduce_max(const float*, std::size_t);
void relu(const float*, float*, std::size_t);
}  // namespace neon
#endif

namespace {

KernelTable select_table() {
  const char* force = std::getenv("YTLC_ISA");
  if (force && std::strcmp(force, "scalar") == 0) return kScalarTable;
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return {"avx2",     avx2::dot,        avx2::axpy, avx2::scale,
            avx2::vadd, avx2::vmul,       avx2::reduce_max, avx2::relu};
  }
#endif
#if defined(__aarch64__)
  return {"neon",     neon::dot,        neon::axpy, neon::scale,
          neon::vadd, neon::vmul,       neon::reduce_max, neon::relu};
#endif
  return kScalarTable;
}

const KernelTable& table() {
  static const KernelTable t = select_table();
  return t;
}

}  // namespace

const char* active_isa() { return table().isa; }

float dot(const float* a, const float* b, std::size_t n) {
  return table().dot(a, b, n);
}
void axpy(float alpha, const float* x, float* y, std::size_t n) {
  table().axpy(alpha, x, y, n);
}
void scale(float alpha, float* x, std::size_t n) { table().scale(alpha, x, n); }
void vadd(const float* a, const float* b, float* out, std::size_t n) {
  table().vadd(a, b, out, n);
}
void vmul(const float* a, const float* b, float* out, std::size_t n) {
  table().vmul(a, b, out, n);
}
float reduce_max(const float* x, std::size_t n) {
  return table().reduce_max(x, n);
}
void relu(const float* x, float* y, std::size_t n) { table().relu(x, y, n); }

}  // namespace ytlc::kern
