#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ytlc/kernels.hpp"
#include "ytlc/rng.hpp"

using namespace ytlc;

namespace {

std::vector<float> random_vec(std::size_t n, Rng& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-2.0, 2.0));
  return v;
}

// SIMD accumulation order differs from scalar, so equivalence is relative.
void check_close(double a, double b, double tol = 1e-5) {
  double denom = std::max({1.0, std::abs(a), std::abs(b)});
  CHECK(std::abs(a - b) / denom < tol);
}

}  // namespace

TEST_CASE("active ISA is reported") {
  const char* isa = kern::active_isa();
  CHECK((std::string(isa) == "scalar" || std::string(isa) == "avx2" ||
         std::string(isa) == "neon"));
}

TEST_CASE("dot matches scalar reference across sizes") {
  Rng rng(11);
  for (std::size_t n : {0u, 1u, 3u, 7u, 8u, 15u, 64u, 301u}) {
    auto a = random_vec(n, rng);
    auto b = random_vec(n, rng);
    float fast = kern::dot(a.data(), b.data(), n);
    float ref = kern::ref::dot(a.data(), b.data(), n);
    check_close(fast, ref);
  }
}

TEST_CASE("axpy matches scalar reference") {
  Rng rng(12);
  for (std::size_t n : {1u, 5u, 16u, 33u, 200u}) {
    auto x = random_vec(n, rng);
    auto y0 = random_vec(n, rng);
    auto y_fast = y0, y_ref = y0;
    kern::axpy(1.5f, x.data(), y_fast.data(), n);
    kern::ref::axpy(1.5f, x.data(), y_ref.data(), n);
    for (std::size_t i = 0; i < n; ++i) check_close(y_fast[i], y_ref[i]);
  }
}

TEST_CASE("scale, vadd, vmul, relu match reference") {
  Rng rng(13);
  for (std::size_t n : {1u, 9u, 32u, 127u}) {
    auto a = random_vec(n, rng);
    auto b = random_vec(n, rng);

    auto s_fast = a, s_ref = a;
    kern::scale(0.25f, s_fast.data(), n);
    kern::ref::scale(0.25f, s_ref.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(s_fast[i] == s_ref[i]);

    std::vector<float> add_fast(n), add_ref(n), mul_fast(n), mul_ref(n),
        relu_fast(n), relu_ref(n);
    kern::vadd(a.data(), b.data(), add_fast.data(), n);
    kern::ref::vadd(a.data(), b.data(), add_ref.data(), n);
    kern::vmul(a.data(), b.data(), mul_fast.data(), n);
    kern::ref::vmul(a.data(), b.data(), mul_ref.data(), n);
    kern::relu(a.data(), relu_fast.data(), n);
    kern::ref::relu(a.data(), relu_ref.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(add_fast[i] == add_ref[i]);
      CHECK(mul_fast[i] == mul_ref[i]);
      CHECK(relu_fast[i] == relu_ref[i]);
    }
  }
}

TEST_CASE("reduce_max matches reference exactly") {
  Rng rng(14);
  for (std::size_t n : {1u, 2u, 8u, 9u, 100u}) {
    auto a = random_vec(n, rng);
    CHECK(kern::reduce_max(a.data(), n) == kern::ref::reduce_max(a.data(), n));
  }
}

TEST_CASE("relu clamps negatives to zero") {
  float x[4] = {-1.0f, 0.0f, 2.5f, -0.001f};
  float y[4];
  kern::relu(x, y, 4);
  CHECK(y[0] == 0.0f);
  CHECK(y[1] == 0.0f);
  CHECK(y[2] == 2.5f);
  CHECK(y[3] == 0.0f);
}

TEST_CASE("repeated dispatch is stable within a process") {
  std::string first = kern::active_isa();
  for (int i = 0; i < 5; ++i) CHECK(std::string(kern::active_isa()) == first);
}
