#include "wkam/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "wkam/errors.hpp"
#include "wkam/parallel.hpp"

namespace wkam {

namespace {

constexpr double kBig = 1e300;

// min over s > 0 of (ρ / s) (L(m, −s e) + level), golden section in log s.
double move_cost(const HamiltonianModel& model, const Vec2& m, const Vec2& e, double rho,
                 double level, int iters) {
  auto f = [&](double ls) {
    const double s = std::exp(ls);
    const ExtReal L = lagrangian(model, m, e * (-s));
    return L.is_finite() ? rho / s * (L.value() + level) : kBig;
  };
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = std::log(1e-4), b = std::log(1e3);
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int k = 0; k < iters; ++k) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return std::min({fc, fd, f(a), f(b)});
}

}  // namespace

int OracleField::corner(int i, int j) const {
  const int ii = i - ilo_, jj = j - jlo_;
  if (ii < 0 || jj < 0 || ii >= nx_ || jj >= ny_) return -1;
  return substitute_[static_cast<std::size_t>(jj) * nx_ + ii];
}

double OracleField::value(const Vec2& x) const {
  const double fx = x.x / ho_, fy = dim_ == 1 ? 0.0 : x.y / ho_;
  const int i = static_cast<int>(std::floor(fx)), j = static_cast<int>(std::floor(fy));
  const double ax = fx - i, ay = fy - j;
  const int c00 = corner(i, j), c10 = corner(i + 1, j);
  if (dim_ == 1) {
    if (c00 < 0 || c10 < 0) return c00 >= 0 ? u_[c00] : (c10 >= 0 ? u_[c10] : kBig);
    return (1 - ax) * u_[c00] + ax * u_[c10];
  }
  const int c01 = corner(i, j + 1), c11 = corner(i + 1, j + 1);
  if (c00 < 0 || c10 < 0 || c01 < 0 || c11 < 0) return kBig;
  return (1 - ay) * ((1 - ax) * u_[c00] + ax * u_[c10]) + ay * ((1 - ax) * u_[c01] + ax * u_[c11]);
}

OracleField oracle_value_iteration(const HamiltonianModel& model, const ObliqueField& field,
                                   const ImplicitDomain& dom, double h, double level,
                                   std::span<const Vec2> anchors,
                                   std::span<const double> anchor_values, OracleOptions o) {
  require(o.refine >= 2, "oracle refinement must be at least 2");
  require(!anchors.empty() && anchors.size() == anchor_values.size(), "oracle needs anchors with values");
  OracleField F;
  F.dim_ = dom.dim();
  F.ho_ = h / o.refine;
  const double ho = F.ho_;
  const Box& box = dom.bounding_box();
  F.ilo_ = static_cast<int>(std::floor(box.lo.x / ho)) - 1;
  F.nx_ = static_cast<int>(std::ceil(box.hi.x / ho)) + 2 - F.ilo_;
  if (F.dim_ == 1) {
    F.jlo_ = 0;
    F.ny_ = 1;
  } else {
    F.jlo_ = static_cast<int>(std::floor(box.lo.y / ho)) - 1;
    F.ny_ = static_cast<int>(std::ceil(box.hi.y / ho)) + 2 - F.jlo_;
  }
  const int nx = F.nx_, ny = F.ny_;
  auto pos = [&](int ii, int jj) { return Vec2{(ii + F.ilo_) * ho, (jj + F.jlo_) * ho}; };

  // Inside points get compact indices; exterior points borrow the nearest one.
  std::vector<int> lattice_of;  // compact index -> lattice id
  F.substitute_.assign(static_cast<std::size_t>(nx) * ny, -1);
  for (int jj = 0; jj < ny; ++jj)
    for (int ii = 0; ii < nx; ++ii)
      if (dom.in_closure(pos(ii, jj))) {
        F.substitute_[static_cast<std::size_t>(jj) * nx + ii] = static_cast<int>(lattice_of.size());
        lattice_of.push_back(jj * nx + ii);
      }
  const int n = static_cast<int>(lattice_of.size());
  require(n > 0, "oracle lattice has no inside points");
  F.inside_count_ = n;
  std::vector<int> sub = F.substitute_;
  for (int jj = 0; jj < ny; ++jj)
    for (int ii = 0; ii < nx; ++ii) {
      const std::size_t id = static_cast<std::size_t>(jj) * nx + ii;
      if (F.substitute_[id] >= 0) continue;
      double best = std::numeric_limits<double>::infinity();
      for (int dj = -3; dj <= 3; ++dj)
        for (int di = -3; di <= 3; ++di) {
          const int a = ii + di, b = jj + dj;
          if (a < 0 || b < 0 || a >= nx || b >= ny) continue;
          const int k = F.substitute_[static_cast<std::size_t>(b) * nx + a];
          if (k < 0) continue;
          const double dd = di * di + dj * dj;
          if (dd < best) {
            best = dd;
            sub[id] = k;
          }
        }
    }
  F.substitute_ = std::move(sub);

  std::vector<Vec2> dirs;
  if (F.dim_ == 1) {
    dirs = {{1.0, 0.0}, {-1.0, 0.0}};
  } else {
    for (int k = 0; k < o.directions; ++k) {
      const double th = 2.0 * std::numbers::pi * k / o.directions;
      dirs.push_back({std::cos(th), std::sin(th)});
    }
  }
  const int nd = static_cast<int>(dirs.size());

  // Per (point, direction): cost and landing point.
  std::vector<double> cost(static_cast<std::size_t>(n) * nd);
  std::vector<Vec2> land(static_cast<std::size_t>(n) * nd);
  parallel_for(n, [&](int b, int e) {
    for (int p = b; p < e; ++p) {
      const Vec2 x = pos(lattice_of[p] % nx, lattice_of[p] / nx);
      for (int k = 0; k < nd; ++k) {
        Vec2 y = x + dirs[k] * ho;
        double extra = 0.0;
        if (!dom.in_closure(y)) {
          const Vec2 yp = project_to_closure(dom, y);
          extra = field.g(yp) * dist(y, yp);
          y = yp;
        }
        Vec2 mid = (x + x + dirs[k] * ho) * 0.5;
        if (!dom.in_closure(mid)) mid = project_to_closure(dom, mid);
        const std::size_t s = static_cast<std::size_t>(p) * nd + k;
        cost[s] = move_cost(model, mid, dirs[k], ho, level, o.speed_iterations) + extra;
        land[s] = y;
      }
    }
  });

  F.u_.assign(n, kBig);
  std::vector<char> pinned(n, 0);
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const Vec2 q = anchors[a];
    const int ii = static_cast<int>(std::lround(q.x / ho)) - F.ilo_;
    const int jj = F.dim_ == 1 ? 0 : static_cast<int>(std::lround(q.y / ho)) - F.jlo_;
    require(ii >= 0 && jj >= 0 && ii < nx && jj < ny, "anchor outside the oracle lattice");
    const int k = F.substitute_[static_cast<std::size_t>(jj) * nx + ii];
    require(k >= 0, "anchor has no inside lattice point nearby");
    if (!pinned[k] || anchor_values[a] < F.u_[k]) F.u_[k] = anchor_values[a];
    pinned[k] = 1;
  }

  auto relax = [&](int p) {
    if (pinned[p]) return 0.0;
    double best = F.u_[p];
    for (int k = 0; k < nd; ++k) {
      const std::size_t s = static_cast<std::size_t>(p) * nd + k;
      const Vec2 y = land[s];
      const double fx = y.x / ho, fy = F.dim_ == 1 ? 0.0 : y.y / ho;
      const int i = static_cast<int>(std::floor(fx)), j = static_cast<int>(std::floor(fy));
      const double ax = fx - i, ay = fy - j;
      int cs[4] = {F.corner(i, j), F.corner(i + 1, j), F.corner(i, j + 1), F.corner(i + 1, j + 1)};
      double ws[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
      const int nc = F.dim_ == 1 ? 2 : 4;
      if (F.dim_ == 1) {
        ws[0] = 1 - ax;
        ws[1] = ax;
      }
      double self = 0.0, rest = 0.0;
      bool ok = true;
      for (int q = 0; q < nc; ++q) {
        if (ws[q] == 0.0) continue;
        if (cs[q] < 0 || F.u_[cs[q]] >= kBig) {
          if (cs[q] != p) {
            ok = false;
            break;
          }
        }
        if (cs[q] == p) {
          self += ws[q];
        } else {
          rest += ws[q] * F.u_[cs[q]];
        }
      }
      if (!ok || self >= 1.0 - 1e-12) continue;
      const double cand = (cost[s] + rest) / (1.0 - self);
      best = std::min(best, cand);
    }
    const double change = F.u_[p] >= kBig ? (best < kBig ? kBig : 0.0) : F.u_[p] - best;
    F.u_[p] = best;
    return change;
  };

  // Four orderings: x and y ascending or descending.
  std::vector<int> orders[4];
  for (int kind = 0; kind < 4; ++kind) {
    std::vector<int>& order = orders[kind];
    order.resize(n);
    for (int p = 0; p < n; ++p) order[p] = p;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const int ia = lattice_of[a] % nx, ja = lattice_of[a] / nx;
      const int ib = lattice_of[b] % nx, jb = lattice_of[b] / nx;
      const int ka = (kind & 2 ? -ja : ja), kb = (kind & 2 ? -jb : jb);
      if (ka != kb) return ka < kb;
      return (kind & 1 ? -ia : ia) < (kind & 1 ? -ib : ib);
    });
  }
  for (int sweep = 0; sweep < o.max_sweeps; ++sweep) {
    double change = 0.0, umax = 0.0;
    const std::vector<int>& order = orders[sweep % 4];
    for (int p : order) change = std::max(change, relax(p));
    for (double v : F.u_) umax = std::max(umax, v < kBig ? std::abs(v) : 0.0);
    F.sweeps_ = sweep + 1;
    if (sweep >= 3 && change <= o.tol * (1.0 + umax)) {
      for (double v : F.u_)
        if (v >= kBig) fail(ErrorCode::NotConverged, "oracle lattice has unreached points");
      return F;
    }
  }
  std::ostringstream os;
  os << "oracle value iteration did not settle in " << o.max_sweeps << " sweeps";
  fail(ErrorCode::NotConverged, os.str());
}

}  // namespace wkam
