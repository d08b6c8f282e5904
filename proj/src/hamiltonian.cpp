#include "wkam/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "wkam/errors.hpp"

namespace wkam {

double ExtReal::value() const {
  if (infinite_) fail(ErrorCode::InvalidArgument, "value() of an infinite ExtReal");
  return value_;
}

HamiltonianModel::HamiltonianModel(HFunc H, std::optional<LFunc> analytic_L, double p_radius_hint,
                                   int dim, std::string description)
    : H_(std::move(H)),
      analytic_L_(std::move(analytic_L)),
      p_radius_hint_(p_radius_hint),
      dim_(dim),
      description_(std::move(description)) {
  require(dim_ == 1 || dim_ == 2, "Hamiltonian dimension must be 1 or 2");
  require(p_radius_hint_ > 0.0, "p_radius_hint must be positive");
}

ExtReal HamiltonianModel::analytic_L(const Vec2& x, const Vec2& xi) const {
  require(analytic_L_.has_value(), "model has no analytic Lagrangian");
  return (*analytic_L_)(x, xi) + shift_a_;
}

HamiltonianModel HamiltonianModel::shifted(double a) const {
  HamiltonianModel m = *this;
  m.shift_a_ = a;
  return m;
}

HamiltonianModel make_kinetic(int dim) {
  auto H = [](const Vec2&, const Vec2& p) { return 0.5 * dot(p, p); };
  HamiltonianModel::LFunc L = [](const Vec2&, const Vec2& xi) { return ExtReal(0.5 * dot(xi, xi)); };
  return HamiltonianModel(H, L, 1.0, dim, "kinetic");
}

HamiltonianModel make_mechanical(const Expr& V, int dim) {
  auto H = [V](const Vec2& x, const Vec2& p) { return 0.5 * dot(p, p) - V(x); };
  HamiltonianModel::LFunc L = [V](const Vec2& x, const Vec2& xi) {
    return ExtReal(0.5 * dot(xi, xi) + V(x));
  };
  return HamiltonianModel(H, L, 1.0, dim, "mechanical V=" + V.source());
}

HamiltonianModel make_eikonal(const Expr& f, int dim) {
  auto H = [f](const Vec2& x, const Vec2& p) { return norm(p) - f(x); };
  HamiltonianModel::LFunc L = [f](const Vec2& x, const Vec2& xi) {
    // sup_p ξ·p − |p| is 0 on the closed unit ball and +∞ outside.
    if (norm(xi) > 1.0 + 1e-12) return ExtReal::infinite();
    return ExtReal(f(x));
  };
  return HamiltonianModel(H, L, 1.0, dim, "eikonal f=" + f.source());
}

HamiltonianModel make_anisotropic(const Expr& m11, const Expr& m12, const Expr& m22,
                                  const Expr& V, int dim) {
  auto H = [=](const Vec2& x, const Vec2& p) {
    const double a = m11(x), b = dim == 2 ? m12(x) : 0.0, c = dim == 2 ? m22(x) : 0.0;
    return 0.5 * (a * p.x * p.x + 2.0 * b * p.x * p.y + c * p.y * p.y) - V(x);
  };
  HamiltonianModel::LFunc L = [=](const Vec2& x, const Vec2& xi) {
    const double a = m11(x);
    if (dim == 1) {
      if (!(a > 0.0)) fail(ErrorCode::SpecError, "anisotropic M is not positive definite");
      return ExtReal(0.5 * xi.x * xi.x / a + V(x));
    }
    const double b = m12(x), c = m22(x);
    const double det = a * c - b * b;
    if (!(a > 0.0) || !(det > 0.0)) {
      fail(ErrorCode::SpecError, "anisotropic M is not positive definite");
    }
    // ½⟨M⁻¹ξ, ξ⟩ + V.
    const double q = (c * xi.x * xi.x - 2.0 * b * xi.x * xi.y + a * xi.y * xi.y) / det;
    return ExtReal(0.5 * q + V(x));
  };
  return HamiltonianModel(H, L, 1.0, dim,
                          "anisotropic M=[" + m11.source() + ", " + m12.source() + "; " +
                              m12.source() + ", " + m22.source() + "] V=" + V.source());
}

HamiltonianModel make_numeric(HamiltonianModel::HFunc H, int dim, double p_radius_hint,
                              std::string description) {
  return HamiltonianModel(std::move(H), std::nullopt, p_radius_hint, dim, std::move(description));
}

namespace {

constexpr int kAngles = 64;
constexpr int kRadii = 64;
constexpr int kAscentSteps = 20;

Vec2 clamp_to_ball(Vec2 p, double m) {
  const double n = norm(p);
  return n > m ? p * (m / n) : p;
}

}  // namespace

double legendre_truncated(const HamiltonianModel& model, const Vec2& x, const Vec2& xi, double m) {
  require(m > 0.0, "legendre_truncated needs m > 0");
  auto objective = [&](const Vec2& p) { return dot(xi, p) - model.H(x, p); };

  Vec2 best{0.0, 0.0};
  double best_val = objective(best);
  const int n_angles = model.dim() == 2 ? kAngles : 2;
  for (int a = 0; a < n_angles; ++a) {
    const double th = 2.0 * std::numbers::pi * a / n_angles;
    const Vec2 e = model.dim() == 2 ? Vec2{std::cos(th), std::sin(th)} : Vec2{a == 0 ? 1.0 : -1.0, 0.0};
    for (int k = 1; k <= kRadii; ++k) {
      const Vec2 p = e * (m * k / kRadii);
      const double v = objective(p);
      if (v > best_val) {
        best_val = v;
        best = p;
      }
    }
  }

  // The objective is concave in p, so local moves from the best sample suffice.
  const Vec2 dirs2[] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  const int n_dirs = model.dim() == 2 ? 4 : 1;
  double step = m / kRadii;
  for (int it = 0; it < kAscentSteps; ++it) {
    bool moved = false;
    for (int d = 0; d < n_dirs; ++d) {
      for (double s : {1.0, -1.0}) {
        const Vec2 cand = clamp_to_ball(best + unit(dirs2[d]) * (s * step), m);
        const double v = objective(cand);
        if (v > best_val) {
          best_val = v;
          best = cand;
          moved = true;
        }
      }
    }
    if (!moved) step *= 0.5;
  }
  return best_val;
}

ExtReal lagrangian_numeric(const HamiltonianModel& model, const Vec2& x, const Vec2& xi,
                           LagrangianOptions options) {
  require(options.tol > 0.0, "lagrangian tolerance must be positive");
  double m = model.p_radius_hint();
  double prev = legendre_truncated(model, x, xi, m);
  for (int k = 0; k < options.max_doublings; ++k) {
    m *= 2.0;
    const double cur = legendre_truncated(model, x, xi, m);
    if (std::abs(cur - prev) < options.tol) return ExtReal(cur);
    prev = cur;
  }
  return ExtReal::infinite();
}

ExtReal lagrangian(const HamiltonianModel& model, const Vec2& x, const Vec2& xi,
                   LagrangianOptions options) {
  if (model.has_analytic_L()) return model.analytic_L(x, xi);
  return lagrangian_numeric(model, x, xi, options);
}

namespace {

// Polar samples of the closed ball B(0, r): the origin, 16 radii × 32 angles
// in 2-D, 32 points per side in 1-D.
template <class F>
void for_each_ball_sample(int dim, double r, F&& f) {
  f(Vec2{0.0, 0.0});
  if (dim == 1) {
    for (int k = 1; k <= 32; ++k) {
      f(Vec2{r * k / 32, 0.0});
      f(Vec2{-r * k / 32, 0.0});
    }
    return;
  }
  for (int a = 0; a < 32; ++a) {
    const double th = 2.0 * std::numbers::pi * a / 32;
    for (int k = 1; k <= 16; ++k) f(Vec2{std::cos(th), std::sin(th)} * (r * k / 16));
  }
}

}  // namespace

double control_bound(const HamiltonianModel& model, std::span<const Vec2> xs, double R) {
  require(R > 0.0, "control_bound needs R > 0");
  require(!xs.empty(), "control_bound needs sample points");
  double c1 = 0.0;
  for (const Vec2& x : xs) {
    for_each_ball_sample(model.dim(), 2.0 * R,
                         [&](const Vec2& p) { c1 = std::max(c1, std::abs(model.H(x, p))); });
  }
  return (2.0 * c1 + 1.0) / R;
}

double lagrangian_lower_envelope(const HamiltonianModel& model, std::span<const Vec2> xs,
                                 double A) {
  require(A > 0.0, "lagrangian_lower_envelope needs A > 0");
  require(!xs.empty(), "lagrangian_lower_envelope needs sample points");
  double c = -std::numeric_limits<double>::infinity();
  for (const Vec2& x : xs) {
    for_each_ball_sample(model.dim(), A, [&](const Vec2& p) { c = std::max(c, model.H(x, p)); });
  }
  return c;
}

ModelCheck check_model(const HamiltonianModel& model, std::span<const Vec2> xs) {
  require(!xs.empty(), "check_model needs sample points");
  ModelCheck out;
  const double r = model.p_radius_hint();
  std::vector<Vec2> ps;
  for_each_ball_sample(model.dim(), 2.0 * r, [&](const Vec2& p) { ps.push_back(p); });
  // A thinned subset keeps the triple count manageable.
  std::vector<Vec2> sub;
  for (std::size_t i = 0; i < ps.size(); i += 7) sub.push_back(ps[i]);
  const std::size_t stride = std::max<std::size_t>(1, xs.size() / 32);
  for (std::size_t i = 0; i < xs.size(); i += stride) {
    const Vec2& x = xs[i];
    for (const Vec2& p : sub) {
      for (const Vec2& q : sub) {
        const double mid = model.H(x, (p + q) * 0.5);
        const double avg = 0.5 * (model.H(x, p) + model.H(x, q));
        out.convexity_defect = std::max(out.convexity_defect, mid - avg);
      }
    }
  }

  const int n_dirs = model.dim() == 2 ? 8 : 2;
  double prev = 0.0, first = 0.0;
  double R = r;
  for (int k = 0; k <= 4; ++k, R *= 2.0) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < xs.size(); i += stride) {
      for (int d = 0; d < n_dirs; ++d) {
        const double th = 2.0 * std::numbers::pi * d / n_dirs;
        const Vec2 e = model.dim() == 2 ? Vec2{std::cos(th), std::sin(th)} : Vec2{d == 0 ? 1.0 : -1.0, 0.0};
        lo = std::min(lo, model.H(xs[i], e * R));
      }
    }
    if (k == 0) first = lo;
    else if (!(lo > prev)) out.coercive = false;
    prev = lo;
  }
  out.coercivity_growth = prev - first;
  return out;
}

}  // namespace wkam
