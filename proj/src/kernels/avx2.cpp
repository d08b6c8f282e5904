// Compiled with -mavx2 only (no -mfma) so products and sums round exactly as in
// the scalar reference.

#include "wkam/kernels.hpp"

#include <limits>

#if defined(__AVX2__)
#include <immintrin.h>
#endif

namespace wkam::kernels::avx2 {

#if defined(__AVX2__)

namespace {

// Lane-wise running minimum. Lane j sees indices j, j+4, j+8, ... in increasing
// order and keeps the first strict minimum, so the cross-lane reduction only has
// to break value ties toward the lower index.
struct LaneMin {
  __m256d value;
  __m256d index;

  void init(__m256d v, std::size_t base) {
    value = v;
    index = _mm256_set_pd(double(base + 3), double(base + 2), double(base + 1), double(base));
  }

  void update(__m256d v, std::size_t base) {
    const __m256d idx =
        _mm256_set_pd(double(base + 3), double(base + 2), double(base + 1), double(base));
    const __m256d lt = _mm256_cmp_pd(v, value, _CMP_LT_OQ);
    value = _mm256_blendv_pd(value, v, lt);
    index = _mm256_blendv_pd(index, idx, lt);
  }

  MinArg reduce() const {
    alignas(32) double vals[4];
    alignas(32) double idxs[4];
    _mm256_store_pd(vals, value);
    _mm256_store_pd(idxs, index);
    MinArg best{vals[0], static_cast<std::int32_t>(idxs[0])};
    for (int j = 1; j < 4; ++j) {
      const auto ij = static_cast<std::int32_t>(idxs[j]);
      if (vals[j] < best.value || (vals[j] == best.value && ij < best.index)) {
        best = {vals[j], ij};
      }
    }
    return best;
  }
};

inline void tail_update(MinArg& best, double v, std::size_t k) {
  if (v < best.value || best.index < 0) best = {v, static_cast<std::int32_t>(k)};
}

}  // namespace

MinArg min_plus(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size() < b.size() ? a.size() : b.size();
  if (n < 4) return scalar::min_plus(a.first(n), b.first(n));
  LaneMin lanes;
  lanes.init(_mm256_add_pd(_mm256_loadu_pd(a.data()), _mm256_loadu_pd(b.data())), 0);
  std::size_t i = 4;
  for (; i + 4 <= n; i += 4) {
    lanes.update(_mm256_add_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i)), i);
  }
  MinArg best = lanes.reduce();
  for (; i < n; ++i) tail_update(best, a[i] + b[i], i);
  return best;
}

MinArg affine_min(std::span<const double> cost0, std::span<const double> tau, double level) {
  const std::size_t n = cost0.size() < tau.size() ? cost0.size() : tau.size();
  if (n < 4) return scalar::affine_min(cost0.first(n), tau.first(n), level);
  const __m256d lv = _mm256_set1_pd(level);
  auto eval = [&](std::size_t k) {
    return _mm256_add_pd(_mm256_loadu_pd(cost0.data() + k),
                         _mm256_mul_pd(lv, _mm256_loadu_pd(tau.data() + k)));
  };
  LaneMin lanes;
  lanes.init(eval(0), 0);
  std::size_t k = 4;
  for (; k + 4 <= n; k += 4) lanes.update(eval(k), k);
  MinArg best = lanes.reduce();
  for (; k < n; ++k) tail_update(best, cost0[k] + level * tau[k], k);
  return best;
}

MinArg transition_min(const TransitionView& t, const double* u) {
  const std::size_t n = t.count;
  if (n < 4) return scalar::transition_min(t, u);
  auto eval = [&](std::size_t k) {
    const __m128i j0 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(t.i0 + k));
    const __m128i j1 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(t.i1 + k));
    const __m128i j2 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(t.i2 + k));
    const __m128i j3 = _mm_loadu_si128(reinterpret_cast<const __m128i*>(t.i3 + k));
    const __m256d u0 = _mm256_i32gather_pd(u, j0, 8);
    const __m256d u1 = _mm256_i32gather_pd(u, j1, 8);
    const __m256d u2 = _mm256_i32gather_pd(u, j2, 8);
    const __m256d u3 = _mm256_i32gather_pd(u, j3, 8);
    __m256d s = _mm256_mul_pd(_mm256_loadu_pd(t.w1 + k), _mm256_sub_pd(u1, u0));
    s = _mm256_add_pd(s, _mm256_mul_pd(_mm256_loadu_pd(t.w2 + k), _mm256_sub_pd(u2, u0)));
    s = _mm256_add_pd(s, _mm256_mul_pd(_mm256_loadu_pd(t.w3 + k), _mm256_sub_pd(u3, u0)));
    return _mm256_add_pd(_mm256_add_pd(u0, s), _mm256_loadu_pd(t.cost + k));
  };
  LaneMin lanes;
  lanes.init(eval(0), 0);
  std::size_t k = 4;
  for (; k + 4 <= n; k += 4) lanes.update(eval(k), k);
  MinArg best = lanes.reduce();
  for (; k < n; ++k) {
    const double u0 = u[t.i0[k]];
    double s = t.w1[k] * (u[t.i1[k]] - u0);
    s = s + t.w2[k] * (u[t.i2[k]] - u0);
    s = s + t.w3[k] * (u[t.i3[k]] - u0);
    tail_update(best, (u0 + s) + t.cost[k], k);
  }
  return best;
}

double max_excess(std::span<const double> a, std::span<const double> b, double c) {
  const std::size_t n = a.size() < b.size() ? a.size() : b.size();
  if (n < 8) return scalar::max_excess(a.first(n), b.first(n), c);
  const __m256d cv = _mm256_set1_pd(c);
  auto eval = [&](std::size_t j) {
    return _mm256_sub_pd(_mm256_loadu_pd(a.data() + j), _mm256_add_pd(cv, _mm256_loadu_pd(b.data() + j)));
  };
  // Two accumulators hide the latency of max; max is exact, so the order does not matter.
  __m256d m0 = eval(0), m1 = eval(4);
  std::size_t j = 8;
  for (; j + 8 <= n; j += 8) {
    m0 = _mm256_max_pd(m0, eval(j));
    m1 = _mm256_max_pd(m1, eval(j + 4));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, _mm256_max_pd(m0, m1));
  double best = lanes[0];
  for (int k = 1; k < 4; ++k) best = lanes[k] > best ? lanes[k] : best;
  for (; j < n; ++j) {
    const double v = a[j] - (c + b[j]);
    best = v > best ? v : best;
  }
  return best;
}

#else  // no AVX2 at compile time: forward to the reference kernels

MinArg min_plus(std::span<const double> a, std::span<const double> b) {
  return scalar::min_plus(a, b);
}
MinArg affine_min(std::span<const double> cost0, std::span<const double> tau, double level) {
  return scalar::affine_min(cost0, tau, level);
}
MinArg transition_min(const TransitionView& t, const double* u) {
  return scalar::transition_min(t, u);
}
double max_excess(std::span<const double> a, std::span<const double> b, double c) {
  return scalar::max_excess(a, b, c);
}

#endif

}  // namespace wkam::kernels::avx2
