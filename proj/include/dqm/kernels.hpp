#pragma once

// Data-parallel inner loops shared by the objectives and the per-node solver
// updates. Each kernel has a scalar reference implementation and, on x86-64,
// an AVX2 variant. The variant is chosen once at startup from CPUID and can be
// pinned with DQM_KERNELS=scalar|avx2 or set_backend().

#include <cstddef>
#include <span>
#include <string_view>

namespace dqm::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view name(Backend backend);

/// True when the AVX2 translation unit was compiled in and the CPU reports
/// AVX2 and FMA.
bool avx2_available();

Backend active_backend();

/// Pins the backend for the whole process. Throws std::invalid_argument when
/// asked for AVX2 on a machine without it.
void set_backend(Backend backend);

/// sum_i a[i] * b[i]
double dot(std::span<const double> a, std::span<const double> b);

/// sum_i a[i] * w[i] * b[i]
double weighted_dot(std::span<const double> a, std::span<const double> w,
                    std::span<const double> b);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// out = x - y
void subtract(std::span<const double> x, std::span<const double> y, std::span<double> out);

// Direct entry points, used by the equivalence tests.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double weighted_dot(const double* a, const double* w, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void subtract(const double* x, const double* y, double* out, std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double weighted_dot(const double* a, const double* w, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void subtract(const double* x, const double* y, double* out, std::size_t n);
}  // namespace avx2

}  // namespace dqm::kernels
