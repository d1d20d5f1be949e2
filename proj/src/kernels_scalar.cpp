#include <cstddef>

#include "matchprod/kernels.hpp"

namespace matchprod::kernels::scalar {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double sum(std::span<const double> a) {
  double acc = 0.0;
  for (double v : a) acc += v;
  return acc;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + beta * y[i];
}

void mul(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
}

void gather_add(std::span<const double> a, std::span<const std::int32_t> ia,
                std::span<const double> b, std::span<const std::int32_t> ib,
                std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[ia[i]] + b[ib[i]];
}

void gather_accumulate(std::span<const double> a, std::span<const std::int32_t> ia,
                       std::span<double> out) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += a[ia[i]];
}

}  // namespace matchprod::kernels::scalar
