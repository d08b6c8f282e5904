#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference version and an
// AVX2 version; `dispatch` picks one at runtime. The AVX2 variants evaluate the
// same arithmetic expressions in the same order (no fused multiply-add), so both
// paths return bit-identical results, including the argmin on ties (lowest index).

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace wkam::kernels {

struct MinArg {
  double value;
  std::int32_t index;  // -1 when the input is empty
};

// Structure-of-arrays view of the candidate moves of one node in the
// semi-Lagrangian step. Candidate k evaluates
//   (u[i0] + (w1 (u[i1]-u[i0]) + w2 (u[i2]-u[i0]) + w3 (u[i3]-u[i0]))) + cost
// where the three-term sum is accumulated left to right.
struct TransitionView {
  const double* cost = nullptr;
  const std::int32_t* i0 = nullptr;
  const std::int32_t* i1 = nullptr;
  const std::int32_t* i2 = nullptr;
  const std::int32_t* i3 = nullptr;
  const double* w1 = nullptr;
  const double* w2 = nullptr;
  const double* w3 = nullptr;
  std::size_t count = 0;
};

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

bool avx2_available();
Isa active_isa();
// Overrides the automatic choice (tests use this to compare paths). Requesting
// Avx2 on a machine without it falls back to Scalar.
void force_isa(Isa isa);
// Restores the automatic choice (the WKAM_SIMD environment variable, when set
// to "scalar" or "avx2", still wins).
void reset_isa();

// min_i a[i] + b[i]
MinArg min_plus(std::span<const double> a, std::span<const double> b);
// min_k cost0[k] + level * tau[k]
MinArg affine_min(std::span<const double> cost0, std::span<const double> tau, double level);
// min over the candidate moves of one node
MinArg transition_min(const TransitionView& t, const double* values);
// max_j a[j] − (c + b[j]); −infinity when empty
double max_excess(std::span<const double> a, std::span<const double> b, double c);

namespace scalar {
MinArg min_plus(std::span<const double> a, std::span<const double> b);
MinArg affine_min(std::span<const double> cost0, std::span<const double> tau, double level);
MinArg transition_min(const TransitionView& t, const double* values);
double max_excess(std::span<const double> a, std::span<const double> b, double c);
}  // namespace scalar

namespace avx2 {
MinArg min_plus(std::span<const double> a, std::span<const double> b);
MinArg affine_min(std::span<const double> cost0, std::span<const double> tau, double level);
MinArg transition_min(const TransitionView& t, const double* values);
double max_excess(std::span<const double> a, std::span<const double> b, double c);
}  // namespace avx2

}  // namespace wkam::kernels
