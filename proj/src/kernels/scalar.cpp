#include "wkam/kernels.hpp"

#include <limits>

namespace wkam::kernels::scalar {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

MinArg min_plus(std::span<const double> a, std::span<const double> b) {
  MinArg best{kInf, -1};
  const std::size_t n = a.size() < b.size() ? a.size() : b.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = a[i] + b[i];
    if (v < best.value || best.index < 0) {
      best = {v, static_cast<std::int32_t>(i)};
    }
  }
  return best;
}

MinArg affine_min(std::span<const double> cost0, std::span<const double> tau, double level) {
  MinArg best{kInf, -1};
  const std::size_t n = cost0.size() < tau.size() ? cost0.size() : tau.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double v = cost0[k] + level * tau[k];
    if (v < best.value || best.index < 0) {
      best = {v, static_cast<std::int32_t>(k)};
    }
  }
  return best;
}

MinArg transition_min(const TransitionView& t, const double* u) {
  MinArg best{kInf, -1};
  for (std::size_t k = 0; k < t.count; ++k) {
    const double u0 = u[t.i0[k]];
    double s = t.w1[k] * (u[t.i1[k]] - u0);
    s = s + t.w2[k] * (u[t.i2[k]] - u0);
    s = s + t.w3[k] * (u[t.i3[k]] - u0);
    const double v = (u0 + s) + t.cost[k];
    if (v < best.value || best.index < 0) {
      best = {v, static_cast<std::int32_t>(k)};
    }
  }
  return best;
}

double max_excess(std::span<const double> a, std::span<const double> b, double c) {
  double best = -kInf;
  const std::size_t n = a.size() < b.size() ? a.size() : b.size();
  for (std::size_t j = 0; j < n; ++j) {
    const double v = a[j] - (c + b[j]);
    best = v > best ? v : best;
  }
  return best;
}

}  // namespace wkam::kernels::scalar
