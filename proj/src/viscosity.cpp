#include "wkam/viscosity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wkam/errors.hpp"

namespace wkam {

namespace {

struct Kept {
  std::vector<Vec2> above;  // touch u from above on the ring
  std::vector<Vec2> below;  // touch u from below on the ring
};

// Neighbours used for the difference quotients. Boundary nodes sit off the
// lattice at irregular spacing, so they look as far as the action graph edges
// do (2.3 h); interior nodes use their ring.
std::vector<int> neighbourhood(const Grid& grid, int node) {
  if (!grid.is_boundary(node) || grid.dim() == 1) return grid.ring(node);
  const Vec2 x = grid.node(node);
  std::vector<std::pair<double, int>> by_angle;
  for (int k : grid.nodes_within(x, 2.3 * grid.h())) {
    if (k == node) continue;
    const Vec2 d = grid.node(k) - x;
    by_angle.push_back({std::atan2(d.y, d.x), k});
  }
  std::sort(by_angle.begin(), by_angle.end());
  std::vector<int> out;
  for (const auto& [angle, k] : by_angle) out.push_back(k);
  return out;
}

Kept classify(const Grid& grid, std::span<const double> u, int node, double kappa) {
  Kept out;
  const Vec2 x = grid.node(node);
  const double slack0 = 1e-12 * (1.0 + std::abs(u[node]));
  for (const Vec2& p : gradient_candidates(grid, u, node)) {
    bool above = true, below = true;
    for (int k : neighbourhood(grid, node)) {
      const Vec2 d = grid.node(k) - x;
      const double r = u[k] - u[node] - dot(p, d);
      const double allow = kappa * dot(d, d) + slack0;
      if (r > allow) above = false;
      if (r < -allow) below = false;
    }
    if (above) out.above.push_back(p);
    if (below) out.below.push_back(p);
  }
  return out;
}

double kappa_for(const Grid& grid, std::span<const double> u, const ViscosityOptions& o) {
  return o.curvature >= 0.0 ? o.curvature : 2.0 * (1.0 + grid.lipschitz_ratio(u));
}

bool excluded(const ViscosityOptions& o, int node) {
  return std::find(o.exclude.begin(), o.exclude.end(), node) != o.exclude.end();
}

}  // namespace

std::vector<Vec2> gradient_candidates(const Grid& grid, std::span<const double> u, int node) {
  const Vec2 x = grid.node(node);
  const std::vector<int> ring = neighbourhood(grid, node);
  std::vector<Vec2> out;
  if (ring.empty()) return out;
  if (grid.dim() == 1) {
    double left = 0.0, right = 0.0;
    bool has_l = false, has_r = false;
    for (int k : ring) {
      const double dx = grid.node(k).x - x.x;
      if (std::abs(dx) < 1e-14) continue;
      const double q = (u[k] - u[node]) / dx;
      if (dx < 0 && (!has_l || dx > left)) {
        left = dx;
        has_l = true;
        out.push_back({q, 0.0});
      } else if (dx > 0 && (!has_r || dx < right)) {
        right = dx;
        has_r = true;
        out.push_back({q, 0.0});
      }
    }
    if (out.size() == 2) out.push_back((out[0] + out[1]) * 0.5);
    return out;
  }

  // Least squares: minimize Σ (Δu_k − p·d_k)².
  double sxx = 0, sxy = 0, syy = 0, bx = 0, by = 0;
  for (int k : ring) {
    const Vec2 d = grid.node(k) - x;
    const double du = u[k] - u[node];
    sxx += d.x * d.x;
    sxy += d.x * d.y;
    syy += d.y * d.y;
    bx += d.x * du;
    by += d.y * du;
  }
  const double det = sxx * syy - sxy * sxy;
  const double h2 = grid.h() * grid.h();
  if (std::abs(det) > 1e-6 * h2 * h2) out.push_back({(syy * bx - sxy * by) / det, (sxx * by - sxy * bx) / det});

  // Simplex gradients of consecutive ring pairs spanning a proper angle.
  const std::size_t n = ring.size();
  for (std::size_t a = 0; a < n; ++a) {
    const int j = ring[a], k = ring[(a + 1) % n];
    if (j == k) continue;
    const Vec2 dj = grid.node(j) - x, dk = grid.node(k) - x;
    const double c = cross(dj, dk);
    if (c <= 0.17 * norm(dj) * norm(dk)) continue;  // angle outside (10°, 170°)
    // Short edges (projected boundary nodes) amplify O(h) value errors.
    if (std::min(norm(dj), norm(dk)) < 0.5 * grid.h()) continue;
    const double uj = u[j] - u[node], uk = u[k] - u[node];
    // Solve p·dj = uj, p·dk = uk.
    out.push_back({(uj * dk.y - uk * dj.y) / c, (uk * dj.x - uj * dk.x) / c});
  }
  return out;
}

double viscosity_tolerance(const Grid& grid, std::span<const double> u, double scale) {
  const double lip = grid.lipschitz_ratio(u);
  return scale * grid.h() * (1.0 + lip) * (1.0 + lip);
}

ViscosityReport check_subsolution(const HamiltonianModel& model, const ObliqueField& field,
                                  const Grid& grid, std::span<const double> u, double a, double tol,
                                  const ViscosityOptions& options) {
  require(static_cast<int>(u.size()) == grid.size(), "field size does not match the grid");
  ViscosityReport rep;
  rep.tol = tol;
  rep.defect = -std::numeric_limits<double>::infinity();
  const double kappa = kappa_for(grid, u, options);
  for (int i = 0; i < grid.size(); ++i) {
    if (excluded(options, i)) continue;
    const Kept kept = classify(grid, u, i, kappa);
    if (kept.above.empty()) continue;
    ++rep.tested_nodes;
    const Vec2 x = grid.node(i);
    for (const Vec2& p : kept.above) {
      ++rep.candidates;
      double v = model.H(x, p) - a;
      if (grid.is_boundary(i)) v = std::min(v, dot(field.gamma(x), p) - field.g(x));
      if (v > rep.defect) {
        rep.defect = v;
        rep.witness = i;
      }
    }
  }
  if (rep.tested_nodes == 0) rep.defect = 0.0;
  rep.pass = rep.defect <= tol;
  return rep;
}

ViscosityReport check_supersolution(const HamiltonianModel& model, const ObliqueField& field,
                                    const Grid& grid, std::span<const double> u, double a,
                                    double tol, const ViscosityOptions& options) {
  require(static_cast<int>(u.size()) == grid.size(), "field size does not match the grid");
  ViscosityReport rep;
  rep.tol = tol;
  rep.defect = -std::numeric_limits<double>::infinity();
  const double kappa = kappa_for(grid, u, options);
  for (int i = 0; i < grid.size(); ++i) {
    if (excluded(options, i)) continue;
    const Kept kept = classify(grid, u, i, kappa);
    if (kept.below.empty()) continue;
    ++rep.tested_nodes;
    const Vec2 x = grid.node(i);
    for (const Vec2& p : kept.below) {
      ++rep.candidates;
      double v = a - model.H(x, p);
      if (grid.is_boundary(i)) v = std::min(v, field.g(x) - dot(field.gamma(x), p));
      if (v > rep.defect) {
        rep.defect = v;
        rep.witness = i;
      }
    }
  }
  if (rep.tested_nodes == 0) rep.defect = 0.0;
  rep.pass = rep.defect <= tol;
  return rep;
}

StabilityReport stability_suite(const HamiltonianModel& model, const ObliqueField& field,
                                const Grid& grid, std::span<const double> u1,
                                std::span<const double> u2, double a, double lambda, double tol,
                                double slack) {
  require(u1.size() == u2.size() && static_cast<int>(u1.size()) == grid.size(),
          "field sizes do not match the grid");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
  std::vector<double> mn(u1.size()), cc(u1.size());
  for (std::size_t i = 0; i < u1.size(); ++i) {
    mn[i] = std::min(u1[i], u2[i]);
    cc[i] = lambda * u1[i] + (1.0 - lambda) * u2[i];
  }
  StabilityReport rep;
  rep.minimum = check_subsolution(model, field, grid, mn, a, tol + slack);
  rep.combination = check_subsolution(model, field, grid, cc, a, tol + slack);
  return rep;
}

ComparisonReport comparison_suite(const HamiltonianModel& model, const ObliqueField& field,
                                  const Grid& grid, std::span<const double> u,
                                  std::span<const double> v, double a1, double a2, double tol) {
  require(u.size() == v.size() && static_cast<int>(u.size()) == grid.size(),
          "field sizes do not match the grid");
  ComparisonReport rep;
  if (!(a1 < a2)) {
    rep.refused = true;
    return rep;
  }
  rep.sub = check_subsolution(model, field, grid, u, a1, tol);
  rep.super = check_supersolution(model, field, grid, v, a2, tol);
  rep.max_diff = -std::numeric_limits<double>::infinity();
  rep.min_diff = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.size(); ++i) {
    const double d = u[i] - v[i];
    if (d > rep.max_diff) {
      rep.max_diff = d;
      rep.argmax = i;
    }
    rep.min_diff = std::min(rep.min_diff, d);
  }
  rep.oscillation = rep.max_diff - rep.min_diff;
  rep.constant_difference = rep.oscillation <= tol;
  rep.argmax_interior = !grid.is_boundary(rep.argmax);

  const int i = rep.argmax;
  const Vec2 x = grid.node(i);
  rep.pair_defect = -std::numeric_limits<double>::infinity();
  for (const Vec2& p : gradient_candidates(grid, u, i)) {
    const double H = model.H(x, p);
    double sub_v = H - a1, super_v = a2 - H;
    if (grid.is_boundary(i)) {
      const double bc = dot(field.gamma(x), p) - field.g(x);
      sub_v = std::min(sub_v, bc);
      super_v = std::min(super_v, -bc);
    }
    rep.pair_defect = std::max(rep.pair_defect, std::max(sub_v, super_v));
  }
  rep.expected_pair_defect = 0.5 * (a2 - a1) - tol;
  rep.consistent = !(rep.sub.pass && rep.super.pass) || rep.pair_defect >= rep.expected_pair_defect;
  return rep;
}

}  // namespace wkam
