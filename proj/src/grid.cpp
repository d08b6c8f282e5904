#include "wkam/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "wkam/errors.hpp"

namespace wkam {

namespace {

Stencil single(int i) {
  Stencil s;
  s.idx = {i, i, i, i};
  s.w = {1.0, 0.0, 0.0, 0.0};
  return s;
}

// Orders the entries so the largest weight comes first; the first weight is
// implied by the others.
Stencil make_stencil(const int* idx, const double* w, int n) {
  int order[4] = {0, 1, 2, 3};
  std::sort(order, order + n, [&](int a, int b) { return w[a] > w[b] || (w[a] == w[b] && idx[a] < idx[b]); });
  Stencil s;
  const int first = idx[order[0]];
  s.idx = {first, first, first, first};
  s.w = {0.0, 0.0, 0.0, 0.0};
  double rest = 0.0;
  for (int k = 1; k < n; ++k) {
    s.idx[k] = idx[order[k]];
    s.w[k] = w[order[k]];
    rest += s.w[k];
  }
  s.w[0] = 1.0 - rest;
  return s;
}

double snap01(double f) {
  if (f < 1e-12) return 0.0;
  if (f > 1.0 - 1e-12) return 1.0;
  return f;
}

}  // namespace

Grid::Grid(const ImplicitDomain& domain, double h) : domain_(domain), h_(h) {
  require(h > 0.0, "grid spacing must be positive");
  const Box& b = domain_.bounding_box();
  ilo_ = static_cast<int>(std::floor(b.lo.x / h_));
  nx_ = static_cast<int>(std::ceil(b.hi.x / h_)) - ilo_ + 1;
  if (dim() == 2) {
    jlo_ = static_cast<int>(std::floor(b.lo.y / h_));
    ny_ = static_cast<int>(std::ceil(b.hi.y / h_)) - jlo_ + 1;
  } else {
    jlo_ = 0;
    ny_ = 1;
  }
  require(static_cast<double>(nx_) * ny_ <= 4e7, "grid spacing too fine for the bounding box");
  lattice_node_.assign(static_cast<std::size_t>(nx_) * ny_, -1);
  snapped_.assign(lattice_node_.size(), -1);
  buckets_.assign(lattice_node_.size(), {});

  std::vector<double> psi(lattice_node_.size());
  for (int j = jlo_; j < jlo_ + ny_; ++j)
    for (int i = ilo_; i < ilo_ + nx_; ++i) psi[lattice_id(i, j)] = domain_.psi(lattice_point(i, j));

  auto add_node = [&](const Vec2& p, bool on_boundary) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(p);
    boundary_.push_back(on_boundary ? 1 : 0);
    buckets_[bucket_of(p)].push_back(id);
    return id;
  };

  for (int j = jlo_; j < jlo_ + ny_; ++j) {
    for (int i = ilo_; i < ilo_ + nx_; ++i) {
      const double v = psi[lattice_id(i, j)];
      if (v <= 0.0) lattice_node_[lattice_id(i, j)] = add_node(lattice_point(i, j), -v <= domain_.boundary_tol());
    }
  }
  if (nodes_.empty()) fail(ErrorCode::InvalidDomain, "no lattice point inside the domain");

  const int dj = dim() == 2 ? 1 : 0;
  for (int j = jlo_; j < jlo_ + ny_; ++j) {
    for (int i = ilo_; i < ilo_ + nx_; ++i) {
      if (psi[lattice_id(i, j)] <= 0.0) continue;
      bool touches = false;
      for (int b2 = -dj; b2 <= dj && !touches; ++b2)
        for (int a2 = -1; a2 <= 1 && !touches; ++a2)
          if (lattice_valid(i + a2, j + b2) && psi[lattice_id(i + a2, j + b2)] <= 0.0) touches = true;
      if (!touches) continue;
      const Vec2 p = project_to_closure(domain_, lattice_point(i, j));
      int near = -1;
      for (int k : nodes_within(p, 0.25 * h_)) {
        if (near < 0 || dist(nodes_[k], p) < dist(nodes_[near], p)) near = k;
      }
      if (near >= 0 && !boundary_[near]) {
        // An interior lattice node within h/4 of Γ would hide that stretch of
        // the boundary; move it onto Γ and let its cells interpolate as cut cells.
        const Vec2 old = nodes_[near];
        auto& from = buckets_[bucket_of(old)];
        from.erase(std::find(from.begin(), from.end(), near));
        const int li = lattice_id(static_cast<int>(std::lround(old.x / h_)),
                                  dim() == 2 ? static_cast<int>(std::lround(old.y / h_)) : 0);
        lattice_node_[li] = -1;
        snapped_[li] = near;
        nodes_[near] = p;
        boundary_[near] = 1;
        buckets_[bucket_of(p)].push_back(near);
      }
      snapped_[lattice_id(i, j)] = near >= 0 ? near : add_node(p, true);
    }
  }

  rings_.resize(nodes_.size());
  for (int n = 0; n < size(); ++n) {
    std::vector<int> r;
    for (int k : nodes_within(nodes_[n], 1.5 * h_ + 1e-12))
      if (k != n) r.push_back(k);
    const Vec2 c = nodes_[n];
    std::sort(r.begin(), r.end(), [&](int a, int b) {
      const double ta = std::atan2(nodes_[a].y - c.y, nodes_[a].x - c.x);
      const double tb = std::atan2(nodes_[b].y - c.y, nodes_[b].x - c.x);
      return ta < tb || (ta == tb && a < b);
    });
    rings_[n] = std::move(r);
  }

  if (dim() == 2 && size() < 9) fail(ErrorCode::InvalidDomain, "grid has fewer than 9 nodes");
  if (dim() == 1 && size() < 3) fail(ErrorCode::InvalidDomain, "grid has fewer than 3 nodes");

  // Ω must be connected at grid resolution.
  std::vector<char> seen(nodes_.size(), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!q.empty()) {
    const int n = q.front();
    q.pop();
    for (int k : rings_[n]) {
      if (!seen[k]) {
        seen[k] = 1;
        ++reached;
        q.push(k);
      }
    }
  }
  if (reached != size()) fail(ErrorCode::InvalidDomain, "domain is disconnected at grid resolution");

  if (dim() == 1) {
    sorted_1d_.resize(nodes_.size());
    for (int n = 0; n < size(); ++n) sorted_1d_[n] = n;
    std::sort(sorted_1d_.begin(), sorted_1d_.end(),
              [&](int a, int b) { return nodes_[a].x < nodes_[b].x; });
  }
}

int Grid::boundary_count() const {
  return static_cast<int>(std::count(boundary_.begin(), boundary_.end(), 1));
}

int Grid::bucket_of(const Vec2& p) const {
  int i = static_cast<int>(std::floor(p.x / h_));
  int j = dim() == 2 ? static_cast<int>(std::floor(p.y / h_)) : 0;
  i = std::clamp(i, ilo_, ilo_ + nx_ - 1);
  j = std::clamp(j, jlo_, jlo_ + ny_ - 1);
  return lattice_id(i, j);
}

std::vector<int> Grid::nodes_within(const Vec2& p, double radius) const {
  std::vector<int> out;
  const int i0 = std::max(ilo_, static_cast<int>(std::floor((p.x - radius) / h_)) - 1);
  const int i1 = std::min(ilo_ + nx_ - 1, static_cast<int>(std::floor((p.x + radius) / h_)) + 1);
  int j0 = 0, j1 = 0;
  if (dim() == 2) {
    j0 = std::max(jlo_, static_cast<int>(std::floor((p.y - radius) / h_)) - 1);
    j1 = std::min(jlo_ + ny_ - 1, static_cast<int>(std::floor((p.y + radius) / h_)) + 1);
  }
  for (int j = j0; j <= j1; ++j)
    for (int i = i0; i <= i1; ++i)
      for (int k : buckets_[lattice_id(i, j)])
        if (dist(nodes_[k], p) <= radius) out.push_back(k);
  std::sort(out.begin(), out.end());
  return out;
}

int Grid::nearest(const Vec2& p) const {
  for (double r = 1.5 * h_; r < 64.0 * h_; r *= 2.0) {
    int best = -1;
    for (int k : nodes_within(p, r))
      if (best < 0 || dist(nodes_[k], p) < dist(nodes_[best], p)) best = k;
    if (best >= 0) return best;
  }
  int best = 0;
  for (int k = 1; k < size(); ++k)
    if (dist(nodes_[k], p) < dist(nodes_[best], p)) best = k;
  return best;
}

Stencil Grid::locate(const Vec2& p) const {
  if (dim() == 1) return locate_1d(p);
  const int ci = static_cast<int>(std::floor(p.x / h_));
  const int cj = static_cast<int>(std::floor(p.y / h_));
  if (lattice_valid(ci, cj) && lattice_valid(ci + 1, cj + 1)) {
    const int c00 = lattice_node_[lattice_id(ci, cj)];
    const int c10 = lattice_node_[lattice_id(ci + 1, cj)];
    const int c01 = lattice_node_[lattice_id(ci, cj + 1)];
    const int c11 = lattice_node_[lattice_id(ci + 1, cj + 1)];
    if (c00 >= 0 && c10 >= 0 && c01 >= 0 && c11 >= 0) {
      const double fx = snap01(p.x / h_ - ci), fy = snap01(p.y / h_ - cj);
      const int idx[4] = {c00, c10, c01, c11};
      const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
      return make_stencil(idx, w, 4);
    }
  }
  return locate_cut(p, ci, cj);
}

Stencil Grid::locate_cut(const Vec2& p, int ci, int cj) const {
  std::vector<int> cand;
  for (int j = cj - 1; j <= cj + 2; ++j) {
    for (int i = ci - 1; i <= ci + 2; ++i) {
      if (!lattice_valid(i, j)) continue;
      const int id = lattice_id(i, j);
      const int k = lattice_node_[id] >= 0 ? lattice_node_[id] : snapped_[id];
      if (k >= 0) cand.push_back(k);
    }
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  if (cand.empty()) return single(nearest(p));
  std::sort(cand.begin(), cand.end(), [&](int a, int b) {
    const double da = dist(nodes_[a], p), db = dist(nodes_[b], p);
    return da < db || (da == db && a < b);
  });
  if (cand.size() > 10) cand.resize(10);
  if (dist(nodes_[cand[0]], p) <= 1e-12 * h_) return single(cand[0]);
  if (cand.size() < 3) return single(cand[0]);

  const double min_area = 1e-8 * h_ * h_;
  double best_perim = std::numeric_limits<double>::infinity();
  double best_minw = -std::numeric_limits<double>::infinity();
  int bi[3] = {-1, -1, -1};
  double bw[3] = {0, 0, 0};
  bool contained = false;
  const int n = static_cast<int>(cand.size());
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int c = b + 1; c < n; ++c) {
        const Vec2 A = nodes_[cand[a]], B = nodes_[cand[b]], C = nodes_[cand[c]];
        const double det = cross(B - A, C - A);
        if (std::abs(det) < min_area) continue;
        const double lb = cross(p - A, C - A) / det;
        const double lc = cross(B - A, p - A) / det;
        const double la = 1.0 - lb - lc;
        const double minw = std::min({la, lb, lc});
        const double perim = dist(A, B) + dist(B, C) + dist(C, A);
        if (minw >= -1e-12) {
          if (!contained || perim < best_perim) {
            contained = true;
            best_perim = perim;
            bi[0] = cand[a], bi[1] = cand[b], bi[2] = cand[c];
            bw[0] = la, bw[1] = lb, bw[2] = lc;
          }
        } else if (!contained && minw > best_minw) {
          best_minw = minw;
          bi[0] = cand[a], bi[1] = cand[b], bi[2] = cand[c];
          bw[0] = la, bw[1] = lb, bw[2] = lc;
        }
      }
    }
  }
  if (bi[0] < 0) return single(cand[0]);
  double sum = 0.0;
  for (double& w : bw) {
    w = std::max(w, 0.0);
    sum += w;
  }
  for (double& w : bw) w /= sum;
  return make_stencil(bi, bw, 3);
}

Stencil Grid::locate_1d(const Vec2& p) const {
  const auto it = std::lower_bound(sorted_1d_.begin(), sorted_1d_.end(), p.x,
                                   [&](int k, double x) { return nodes_[k].x < x; });
  if (it == sorted_1d_.begin()) return single(sorted_1d_.front());
  if (it == sorted_1d_.end()) return single(sorted_1d_.back());
  const int right = *it, left = *(it - 1);
  if (nodes_[right].x == p.x) return single(right);
  const double f = (p.x - nodes_[left].x) / (nodes_[right].x - nodes_[left].x);
  const int idx[2] = {left, right};
  const double w[2] = {1.0 - f, f};
  return make_stencil(idx, w, 2);
}

double Grid::interpolate(std::span<const double> values, const Vec2& p) const {
  require(values.size() == nodes_.size(), "value array does not match the grid");
  return locate(p).apply(values);
}

double Grid::lipschitz_ratio(std::span<const double> u) const {
  require(u.size() == nodes_.size(), "value array does not match the grid");
  double r = 0.0;
  for (int n = 0; n < size(); ++n)
    for (int k : rings_[n]) r = std::max(r, std::abs(u[n] - u[k]) / dist(nodes_[n], nodes_[k]));
  return r;
}

}  // namespace wkam
