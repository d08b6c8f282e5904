#include <atomic>
#include <cstdlib>
#include <cstring>

#include "wkam/kernels.hpp"

namespace wkam::kernels {

namespace {

Isa detect() {
  if (const char* env = std::getenv("WKAM_SIMD")) {
    if (std::strcmp(env, "scalar") == 0) return Isa::Scalar;
    if (std::strcmp(env, "avx2") == 0 && avx2_available()) return Isa::Avx2;
  }
  return avx2_available() ? Isa::Avx2 : Isa::Scalar;
}

std::atomic<int>& forced() {
  static std::atomic<int> value{-1};
  return value;
}

Isa current() {
  static const Isa detected = detect();
  const int f = forced().load(std::memory_order_relaxed);
  return f < 0 ? detected : static_cast<Isa>(f);
}

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
  static const bool has = __builtin_cpu_supports("avx2");
  return has;
#else
  return false;
#endif
}

Isa active_isa() { return current(); }

void force_isa(Isa isa) {
  if (isa == Isa::Avx2 && !avx2_available()) isa = Isa::Scalar;
  forced().store(static_cast<int>(isa), std::memory_order_relaxed);
}

void reset_isa() { forced().store(-1, std::memory_order_relaxed); }

MinArg min_plus(std::span<const double> a, std::span<const double> b) {
  return current() == Isa::Avx2 ? avx2::min_plus(a, b) : scalar::min_plus(a, b);
}

MinArg affine_min(std::span<const double> cost0, std::span<const double> tau, double level) {
  return current() == Isa::Avx2 ? avx2::affine_min(cost0, tau, level)
                                : scalar::affine_min(cost0, tau, level);
}

MinArg transition_min(const TransitionView& t, const double* values) {
  return current() == Isa::Avx2 ? avx2::transition_min(t, values)
                                : scalar::transition_min(t, values);
}

double max_excess(std::span<const double> a, std::span<const double> b, double c) {
  return current() == Isa::Avx2 ? avx2::max_excess(a, b, c) : scalar::max_excess(a, b, c);
}

}  // namespace wkam::kernels
