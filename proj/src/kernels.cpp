#include <atomic>

#include "matchprod/kernels.hpp"

namespace matchprod::kernels {

namespace {

Isa probe() {
#if defined(__x86_64__) || defined(__i386__)
  if (avx2::compiled() && __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return Isa::Avx2;
  }
#endif
  return Isa::Scalar;
}

std::atomic<Isa>& active() {
  static std::atomic<Isa> isa{probe()};
  return isa;
}

bool use_avx2() { return active().load(std::memory_order_relaxed) == Isa::Avx2; }

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

Isa detected_isa() {
  static const Isa isa = probe();
  return isa;
}

Isa active_isa() { return active().load(); }

Isa set_active_isa(Isa isa) {
  if (isa == Isa::Avx2 && detected_isa() != Isa::Avx2) isa = Isa::Scalar;
  active().store(isa);
  return isa;
}

double dot(std::span<const double> a, std::span<const double> b) {
  return use_avx2() ? avx2::dot(a, b) : scalar::dot(a, b);
}

double sum(std::span<const double> a) { return use_avx2() ? avx2::sum(a) : scalar::sum(a); }

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  use_avx2() ? avx2::axpy(alpha, x, y) : scalar::axpy(alpha, x, y);
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
  use_avx2() ? avx2::xpby(x, beta, y) : scalar::xpby(x, beta, y);
}

void mul(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  use_avx2() ? avx2::mul(a, b, out) : scalar::mul(a, b, out);
}

void gather_add(std::span<const double> a, std::span<const std::int32_t> ia,
                std::span<const double> b, std::span<const std::int32_t> ib,
                std::span<double> out) {
  use_avx2() ? avx2::gather_add(a, ia, b, ib, out) : scalar::gather_add(a, ia, b, ib, out);
}

void gather_accumulate(std::span<const double> a, std::span<const std::int32_t> ia,
                       std::span<double> out) {
  use_avx2() ? avx2::gather_accumulate(a, ia, out) : scalar::gather_accumulate(a, ia, out);
}

}  // namespace matchprod::kernels
