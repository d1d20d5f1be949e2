// Compiled with -mavx2 -mfma; only reached through the dispatcher after a
// CPUID check.
#include <cstddef>

#include "matchprod/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace matchprod::kernels::avx2 {

bool compiled() { return true; }

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i]), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[i + 4]), _mm256_loadu_pd(&b[i + 4]), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i]), acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum(std::span<const double> a) {
  const std::size_t n = a.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(_mm256_loadu_pd(&a[i]), acc0);
    acc1 = _mm256_add_pd(_mm256_loadu_pd(&a[i + 4]), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(_mm256_loadu_pd(&a[i]), acc0);
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i];
  return acc;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(&y[i], _mm256_fmadd_pd(va, _mm256_loadu_pd(&x[i]), _mm256_loadu_pd(&y[i])));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
  const std::size_t n = x.size();
  const __m256d vb = _mm256_set1_pd(beta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(&y[i], _mm256_fmadd_pd(vb, _mm256_loadu_pd(&y[i]), _mm256_loadu_pd(&x[i])));
  }
  for (; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void mul(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(&out[i], _mm256_mul_pd(_mm256_loadu_pd(&a[i]), _mm256_loadu_pd(&b[i])));
  }
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void gather_add(std::span<const double> a, std::span<const std::int32_t> ia,
                std::span<const double> b, std::span<const std::int32_t> ib,
                std::span<double> out) {
  const std::size_t n = out.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m128i ja = _mm_loadu_si128(reinterpret_cast<const __m128i*>(&ia[i]));
    const __m128i jb = _mm_loadu_si128(reinterpret_cast<const __m128i*>(&ib[i]));
    const __m256d va = _mm256_i32gather_pd(a.data(), ja, 8);
    const __m256d vb = _mm256_i32gather_pd(b.data(), jb, 8);
    _mm256_storeu_pd(&out[i], _mm256_add_pd(va, vb));
  }
  for (; i < n; ++i) out[i] = a[ia[i]] + b[ib[i]];
}

void gather_accumulate(std::span<const double> a, std::span<const std::int32_t> ia,
                       std::span<double> out) {
  const std::size_t n = out.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m128i ja = _mm_loadu_si128(reinterpret_cast<const __m128i*>(&ia[i]));
    const __m256d va = _mm256_i32gather_pd(a.data(), ja, 8);
    _mm256_storeu_pd(&out[i], _mm256_add_pd(_mm256_loadu_pd(&out[i]), va));
  }
  for (; i < n; ++i) out[i] += a[ia[i]];
}

}  // namespace matchprod::kernels::avx2

#else

// Non-x86 builds: the AVX2 entry points forward to the scalar reference so
// the dispatcher never has to special-case the platform.
namespace matchprod::kernels::avx2 {

bool compiled() { return false; }
double dot(std::span<const double> a, std::span<const double> b) { return scalar::dot(a, b); }
double sum(std::span<const double> a) { return scalar::sum(a); }
void axpy(double alpha, std::span<const double> x, std::span<double> y) { scalar::axpy(alpha, x, y); }
void xpby(std::span<const double> x, double beta, std::span<double> y) { scalar::xpby(x, beta, y); }
void mul(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  scalar::mul(a, b, out);
}
void gather_add(std::span<const double> a, std::span<const std::int32_t> ia,
                std::span<const double> b, std::span<const std::int32_t> ib,
                std::span<double> out) {
  scalar::gather_add(a, ia, b, ib, out);
}
void gather_accumulate(std::span<const double> a, std::span<const std::int32_t> ia,
                       std::span<double> out) {
  scalar::gather_accumulate(a, ia, out);
}

}  // namespace matchprod::kernels::avx2

#endif
