#include "wkam/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "wkam/errors.hpp"

namespace wkam {

namespace {

Box padded(Box b, double pad, int dim) {
  b.lo.x -= pad;
  b.hi.x += pad;
  if (dim == 2) {
    b.lo.y -= pad;
    b.hi.y += pad;
  }
  return b;
}

std::string point_str(const Vec2& p) {
  std::ostringstream os;
  os << "(" << p.x << ", " << p.y << ")";
  return os.str();
}

// Lattice sample points of the box: n per axis in 2-D, n on the x axis in 1-D.
template <class F>
void for_each_sample(const Box& box, int dim, int n, F&& f) {
  const int ny = dim == 2 ? n : 1;
  for (int j = 0; j < ny; ++j) {
    const double y = dim == 2 ? box.lo.y + (box.hi.y - box.lo.y) * j / (n - 1) : 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = box.lo.x + (box.hi.x - box.lo.x) * i / (n - 1);
      f(Vec2{x, y});
    }
  }
}

double bisect_crossing(const ImplicitDomain& d, Vec2 a, Vec2 b, Vec2* out) {
  double fa = d.psi(a);
  for (int it = 0; it < 60; ++it) {
    const Vec2 m = (a + b) * 0.5;
    const double fm = d.psi(m);
    if ((fm <= 0.0) == (fa <= 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  *out = (a + b) * 0.5;
  return d.psi(*out);
}

}  // namespace

ImplicitDomain::ImplicitDomain(ScalarField psi, VectorField grad_psi, int dim, Box box,
                               double diameter, std::string description, Options options)
    : psi_(std::move(psi)),
      grad_psi_(std::move(grad_psi)),
      dim_(dim),
      box_(box),
      diameter_(diameter),
      description_(std::move(description)) {
  if (dim_ != 1 && dim_ != 2) fail(ErrorCode::InvalidDomain, "dimension must be 1 or 2");
  if (!(diameter_ > 0.0)) fail(ErrorCode::InvalidDomain, "diameter must be positive");
  boundary_tol_ = options.boundary_tol_rel * diameter_;
  band_ = options.band_rel * diameter_;

  bool any_inside = false;
  double min_grad = std::numeric_limits<double>::infinity();
  for_each_sample(box_, dim_, options.rho_samples, [&](const Vec2& p) {
    const double v = psi_(p);
    if (v < 0.0) any_inside = true;
    if (std::abs(v) <= band_) min_grad = std::min(min_grad, norm(grad_psi_(p)));
  });
  if (!any_inside) fail(ErrorCode::InvalidDomain, description_ + ": no sampled point has psi < 0");

  // The box outline must lie outside Ω̄.
  const int n = options.rho_samples;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / (n - 1);
    std::vector<Vec2> rim;
    if (dim_ == 2) {
      rim = {{box_.lo.x + t * (box_.hi.x - box_.lo.x), box_.lo.y},
             {box_.lo.x + t * (box_.hi.x - box_.lo.x), box_.hi.y},
             {box_.lo.x, box_.lo.y + t * (box_.hi.y - box_.lo.y)},
             {box_.hi.x, box_.lo.y + t * (box_.hi.y - box_.lo.y)}};
    } else {
      rim = {box_.lo, box_.hi};
    }
    for (const Vec2& p : rim) {
      if (!(psi_(p) > 0.0)) {
        fail(ErrorCode::InvalidDomain,
             description_ + ": bounding box point " + point_str(p) + " is not exterior");
      }
    }
  }
  if (!(min_grad > 0.0) || !std::isfinite(min_grad)) {
    fail(ErrorCode::InvalidDomain, description_ + ": degenerate gradient near the boundary");
  }
  // A margin below the sampled minimum absorbs points between samples.
  rho0_ = 0.9 * min_grad;
}

ImplicitDomain make_disk(Vec2 center, double radius) {
  require(radius > 0.0, "disk radius must be positive");
  const double r2 = radius * radius;
  auto psi = [=](const Vec2& p) { return dot(p - center, p - center) / r2 - 1.0; };
  auto grad = [=](const Vec2& p) { return (p - center) * (2.0 / r2); };
  Box box{{center.x - radius, center.y - radius}, {center.x + radius, center.y + radius}};
  std::ostringstream os;
  os << "disk center=" << point_str(center) << " radius=" << radius;
  return ImplicitDomain(psi, grad, 2, padded(box, 0.15 * 2 * radius, 2), 2 * radius, os.str());
}

ImplicitDomain make_ellipse(Vec2 center, double semi_x, double semi_y) {
  require(semi_x > 0.0 && semi_y > 0.0, "ellipse semi-axes must be positive");
  const double ax2 = semi_x * semi_x, ay2 = semi_y * semi_y;
  auto psi = [=](const Vec2& p) {
    const Vec2 d = p - center;
    return d.x * d.x / ax2 + d.y * d.y / ay2 - 1.0;
  };
  auto grad = [=](const Vec2& p) {
    const Vec2 d = p - center;
    return Vec2{2.0 * d.x / ax2, 2.0 * d.y / ay2};
  };
  Box box{{center.x - semi_x, center.y - semi_y}, {center.x + semi_x, center.y + semi_y}};
  const double diam = 2 * std::max(semi_x, semi_y);
  std::ostringstream os;
  os << "ellipse center=" << point_str(center) << " semi=(" << semi_x << ", " << semi_y << ")";
  return ImplicitDomain(psi, grad, 2, padded(box, 0.15 * diam, 2), diam, os.str());
}

ImplicitDomain make_smoothed_rectangle(Vec2 center, double half_x, double half_y,
                                       double exponent) {
  require(half_x > 0.0 && half_y > 0.0, "rectangle half-widths must be positive");
  require(exponent >= 2.0, "superellipse exponent must be >= 2");
  const double p = exponent;
  auto psi = [=](const Vec2& q) {
    const double X = std::abs((q.x - center.x) / half_x), Y = std::abs((q.y - center.y) / half_y);
    return std::pow(std::pow(X, p) + std::pow(Y, p), 1.0 / p) - 1.0;
  };
  auto grad = [=](const Vec2& q) {
    const double X = (q.x - center.x) / half_x, Y = (q.y - center.y) / half_y;
    const double s = std::pow(std::abs(X), p) + std::pow(std::abs(Y), p);
    if (s == 0.0) return Vec2{};
    const double f = std::pow(s, 1.0 / p - 1.0);
    return Vec2{f * std::copysign(std::pow(std::abs(X), p - 1), X) / half_x,
                f * std::copysign(std::pow(std::abs(Y), p - 1), Y) / half_y};
  };
  Box box{{center.x - half_x, center.y - half_y}, {center.x + half_x, center.y + half_y}};
  const double diam = 2 * std::hypot(half_x, half_y);
  std::ostringstream os;
  os << "smoothed rectangle center=" << point_str(center) << " half=(" << half_x << ", "
     << half_y << ") p=" << p;
  return ImplicitDomain(psi, grad, 2, padded(box, 0.15 * diam, 2), diam, os.str());
}

ImplicitDomain make_interval(double lo, double hi) {
  require(hi > lo, "interval requires lo < hi");
  const double half = 0.5 * (hi - lo);
  auto psi = [=](const Vec2& p) { return (p.x - lo) * (p.x - hi) / half; };
  auto grad = [=](const Vec2& p) { return Vec2{(2.0 * p.x - lo - hi) / half, 0.0}; };
  Box box{{lo, 0.0}, {hi, 0.0}};
  std::ostringstream os;
  os << "interval [" << lo << ", " << hi << "]";
  return ImplicitDomain(psi, grad, 1, padded(box, 0.15 * (hi - lo), 1), hi - lo, os.str());
}

ImplicitDomain make_expression_domain(const Expr& psi_expr, Box omega_box, int dim) {
  const double diam = dim == 2 ? dist(omega_box.lo, omega_box.hi) : omega_box.hi.x - omega_box.lo.x;
  require(diam > 0.0, "expression domain needs a nonempty box");
  const double step = 1e-6 * diam;
  auto psi = [psi_expr](const Vec2& p) { return psi_expr(p); };
  auto grad = [psi_expr, step, dim](const Vec2& p) {
    const double gx = (psi_expr(p.x + step, p.y) - psi_expr(p.x - step, p.y)) / (2 * step);
    const double gy =
        dim == 2 ? (psi_expr(p.x, p.y + step) - psi_expr(p.x, p.y - step)) / (2 * step) : 0.0;
    return Vec2{gx, gy};
  };
  return ImplicitDomain(psi, grad, dim, padded(omega_box, 0.15 * diam, dim), diam,
                        "expression psi=" + psi_expr.source());
}

Vec2 outward_normal(const ImplicitDomain& domain, const Vec2& x) {
  const double v = domain.psi(x);
  if (std::abs(v) > domain.boundary_tol()) {
    fail(ErrorCode::NotOnBoundary, point_str(x) + " has |psi| = " + std::to_string(std::abs(v)));
  }
  const Vec2 g = domain.grad_psi(x);
  const double n = norm(g);
  if (n < domain.rho0()) {
    fail(ErrorCode::DegenerateGradient, point_str(x) + " has |grad psi| = " + std::to_string(n));
  }
  return g / n;
}

double penalty_q(const ImplicitDomain& domain, double cap, const Vec2& x) {
  return std::min(std::max(domain.psi(x), 0.0), cap);
}

Vec2 project_to_closure(const ImplicitDomain& domain, const Vec2& x) {
  double v = domain.psi(x);
  if (v <= domain.boundary_tol()) return x;
  Vec2 y = x;
  for (int it = 0; it < 200; ++it) {
    if (std::abs(v) <= domain.boundary_tol()) return y;
    const Vec2 g = domain.grad_psi(y);
    const double gg = dot(g, g);
    if (!(gg > 0.0)) break;
    const Vec2 step = g * (v / gg);
    double damping = 1.0;
    bool improved = false;
    for (int k = 0; k < 40; ++k) {
      const Vec2 cand = y - step * damping;
      const double vc = domain.psi(cand);
      if (std::abs(vc) < std::abs(v)) {
        y = cand;
        v = vc;
        improved = true;
        break;
      }
      damping *= 0.5;
    }
    if (!improved) break;
  }
  if (std::abs(v) <= domain.boundary_tol()) return y;
  fail(ErrorCode::ProjectionDiverged, "Newton projection from " + point_str(x) + " stalled");
}

std::vector<Vec2> sample_boundary(const ImplicitDomain& domain, int count) {
  require(count >= 1, "need at least one boundary sample");
  const Box& box = domain.bounding_box();
  std::vector<Vec2> pts;
  if (domain.dim() == 1) {
    const int n = 4096;
    Vec2 prev = box.lo;
    for (int i = 1; i < n; ++i) {
      const Vec2 cur{box.lo.x + (box.hi.x - box.lo.x) * i / (n - 1), 0.0};
      if ((domain.psi(prev) <= 0.0) != (domain.psi(cur) <= 0.0)) {
        Vec2 p;
        bisect_crossing(domain, prev, cur, &p);
        pts.push_back(p);
      }
      prev = cur;
    }
    return pts;
  }
  const int m = std::max(64, count);
  const double hx = (box.hi.x - box.lo.x) / m, hy = (box.hi.y - box.lo.y) / m;
  auto at = [&](int i, int j) { return Vec2{box.lo.x + i * hx, box.lo.y + j * hy}; };
  std::vector<double> vals((m + 1) * (m + 1));
  for (int j = 0; j <= m; ++j)
    for (int i = 0; i <= m; ++i) vals[j * (m + 1) + i] = domain.psi(at(i, j));
  auto val = [&](int i, int j) { return vals[j * (m + 1) + i]; };
  for (int j = 0; j <= m; ++j) {
    for (int i = 0; i <= m; ++i) {
      if (i < m && (val(i, j) <= 0.0) != (val(i + 1, j) <= 0.0)) {
        Vec2 p;
        bisect_crossing(domain, at(i, j), at(i + 1, j), &p);
        pts.push_back(p);
      }
      if (j < m && (val(i, j) <= 0.0) != (val(i, j + 1) <= 0.0)) {
        Vec2 p;
        bisect_crossing(domain, at(i, j), at(i, j + 1), &p);
        pts.push_back(p);
      }
    }
  }
  if (static_cast<int>(pts.size()) <= count) return pts;
  std::vector<Vec2> thinned;
  thinned.reserve(count);
  for (int k = 0; k < count; ++k) {
    thinned.push_back(pts[static_cast<std::size_t>(k) * pts.size() / count]);
  }
  return thinned;
}

namespace {

ObliquenessReport measure_obliqueness(const ImplicitDomain& domain, const VectorField& gamma,
                                      int samples) {
  ObliquenessReport rep{std::numeric_limits<double>::infinity(), {}, 0};
  for (const Vec2& p : sample_boundary(domain, samples)) {
    const double m = dot(domain.normal_field(p), gamma(p));
    ++rep.samples;
    if (m < rep.margin) {
      rep.margin = m;
      rep.witness = p;
    }
  }
  return rep;
}

}  // namespace

ObliqueField::ObliqueField(VectorField gamma, ScalarField g, const ImplicitDomain& domain,
                           std::string description, int samples)
    : gamma_(std::move(gamma)), g_(std::move(g)), description_(std::move(description)) {
  delta0_ = measure_obliqueness(domain, gamma_, samples).margin;
  for (const Vec2& p : sample_boundary(domain, samples)) {
    gamma_sup_ = std::max(gamma_sup_, norm(gamma_(p)));
    g_sup_ = std::max(g_sup_, std::abs(g_(p)));
  }
}

ObliqueField rotated_normal_field(const ImplicitDomain& domain, double angle_deg, ScalarField g) {
  const double angle = angle_deg * std::numbers::pi / 180.0;
  // Copy the ψ gradient so the field does not outlive-reference the domain.
  const ImplicitDomain dom = domain;
  auto gamma = [dom, angle](const Vec2& p) { return rotate(dom.normal_field(p), angle); };
  std::ostringstream os;
  os << "normal rotated by " << angle_deg << " deg";
  return ObliqueField(gamma, std::move(g), domain, os.str());
}

ObliqueField make_rotated_normal(const ImplicitDomain& domain, double angle_deg, ScalarField g) {
  if (!(std::abs(angle_deg) < 90.0)) {
    fail(ErrorCode::ObliquenessViolated,
         "rotation angle " + std::to_string(angle_deg) + " deg is not oblique (need |angle| < 90)");
  }
  if (domain.dim() == 1 && angle_deg != 0.0) {
    fail(ErrorCode::InvalidArgument, "1-D domains only admit the normal direction (angle 0)");
  }
  return rotated_normal_field(domain, angle_deg, std::move(g));
}

ObliquenessReport validate_obliqueness(const ImplicitDomain& domain, const ObliqueField& field,
                                       int samples) {
  require(samples >= 1, "samples must be >= 1");
  auto gamma = [&field](const Vec2& p) { return field.gamma(p); };
  ObliquenessReport rep = measure_obliqueness(domain, gamma, samples);
  if (!(rep.margin > 0.0)) {
    fail(ErrorCode::ObliquenessViolated, "nu.gamma = " + std::to_string(rep.margin) + " at " +
                                             point_str(rep.witness));
  }
  return rep;
}

}  // namespace wkam
