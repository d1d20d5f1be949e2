#pragma once

// Dense vector kernels used by the iterative solvers and aggregation code.
//
// Every kernel has a scalar reference implementation and an AVX2/FMA
// implementation. The active variant is picked once at startup from CPUID and
// can be overridden (tests force each variant to check they agree).

#include <cstdint>
#include <span>
#include <string_view>

namespace matchprod::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

// Best variant supported by the running CPU.
Isa detected_isa();
// Variant currently used by the dispatching entry points below.
Isa active_isa();
// Select a variant. Requesting Avx2 on a CPU without it falls back to Scalar;
// the return value is what actually got selected.
Isa set_active_isa(Isa isa);

double dot(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> a);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
// y = x + beta * y
void xpby(std::span<const double> x, double beta, std::span<double> y);
// out = a * b (elementwise)
void mul(std::span<const double> a, std::span<const double> b, std::span<double> out);
// out[i] = a[ia[i]] + b[ib[i]]
void gather_add(std::span<const double> a, std::span<const std::int32_t> ia,
                std::span<const double> b, std::span<const std::int32_t> ib,
                std::span<double> out);
// out[i] += a[ia[i]]
void gather_accumulate(std::span<const double> a, std::span<const std::int32_t> ia,
                       std::span<double> out);

// Variant-specific entry points; identical contracts to the dispatchers.
namespace scalar {
double dot(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void xpby(std::span<const double> x, double beta, std::span<double> y);
void mul(std::span<const double> a, std::span<const double> b, std::span<double> out);
void gather_add(std::span<const double> a, std::span<const std::int32_t> ia,
                std::span<const double> b, std::span<const std::int32_t> ib,
                std::span<double> out);
void gather_accumulate(std::span<const double> a, std::span<const std::int32_t> ia,
                       std::span<double> out);
}  // namespace scalar

namespace avx2 {
bool compiled();
double dot(std::span<const double> a, std::span<const double> b);
double sum(std::span<const double> a);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void xpby(std::span<const double> x, double beta, std::span<double> y);
void mul(std::span<const double> a, std::span<const double> b, std::span<double> out);
void gather_add(std::span<const double> a, std::span<const std::int32_t> ia,
                std::span<const double> b, std::span<const std::int32_t> ib,
                std::span<double> out);
void gather_accumulate(std::span<const double> a, std::span<const std::int32_t> ia,
                       std::span<double> out);
}  // namespace avx2

}  // namespace matchprod::kernels
