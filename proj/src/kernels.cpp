#include "dqm/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace dqm::kernels {

#ifndef DQM_HAVE_AVX2_TU
// Non-x86 builds: the AVX2 entry points exist but are never selected.
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n) { return scalar::dot(a, b, n); }
double weighted_dot(const double* a, const double* w, const double* b, std::size_t n) {
  return scalar::weighted_dot(a, w, b, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) { scalar::axpy(alpha, x, y, n); }
void subtract(const double* x, const double* y, double* out, std::size_t n) {
  scalar::subtract(x, y, out, n);
}
}  // namespace avx2
#endif

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  double (*weighted_dot)(const double*, const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*subtract)(const double*, const double*, double*, std::size_t);
};

constexpr Table kScalar{scalar::dot, scalar::weighted_dot, scalar::axpy, scalar::subtract};
constexpr Table kAvx2{avx2::dot, avx2::weighted_dot, avx2::axpy, avx2::subtract};

bool detect_avx2() {
#if defined(DQM_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  const char* env = std::getenv("DQM_KERNELS");
  if (env) {
    const std::string v(env);
    if (v == "scalar") return Backend::Scalar;
    if (v == "avx2" && detect_avx2()) return Backend::Avx2;
  }
  return detect_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& backend_slot() {
  static std::atomic<Backend> slot{initial_backend()};
  return slot;
}

const Table& table() {
  return backend_slot().load(std::memory_order_relaxed) == Backend::Avx2 ? kAvx2 : kScalar;
}

void check_same(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("kernels: length mismatch");
}

}  // namespace

std::string_view name(Backend backend) {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

bool avx2_available() {
  static const bool ok = detect_avx2();
  return ok;
}

Backend active_backend() { return backend_slot().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  if (backend == Backend::Avx2 && !avx2_available())
    throw std::invalid_argument("kernels: AVX2 backend requested but not supported on this CPU");
  backend_slot().store(backend, std::memory_order_relaxed);
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_same(a.size(), b.size());
  return table().dot(a.data(), b.data(), a.size());
}

double weighted_dot(std::span<const double> a, std::span<const double> w,
                    std::span<const double> b) {
  check_same(a.size(), w.size());
  check_same(a.size(), b.size());
  return table().weighted_dot(a.data(), w.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_same(x.size(), y.size());
  table().axpy(alpha, x.data(), y.data(), x.size());
}

void subtract(std::span<const double> x, std::span<const double> y, std::span<double> out) {
  check_same(x.size(), y.size());
  check_same(x.size(), out.size());
  table().subtract(x.data(), y.data(), out.data(), x.size());
}

}  // namespace dqm::kernels
