#include "wkam/weak_kam.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "wkam/errors.hpp"
#include "wkam/kernels.hpp"
#include "wkam/parallel.hpp"

namespace wkam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double finite_or_inf(const ExtReal& v) { return v.is_finite() ? v.value() : kInf; }

// Minimizes a convex function on [0, hi]; returns {value, argmin}. l = 0 is
// always a candidate so a flat or increasing function keeps the zero push.
std::pair<double, double> golden_min(const std::function<double(double)>& f, double hi, int iters) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = 0.0, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < iters; ++it) {
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
  std::pair<double, double> best{f(0.0), 0.0};
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  if (fm < best.first) best = {fm, m};
  return best;
}

bool segment_inside(const ImplicitDomain& dom, const Vec2& a, const Vec2& b) {
  for (double s : {0.25, 0.5, 0.75})
    if (!dom.in_closure(a + (b - a) * s)) return false;
  return true;
}

struct LocalEdge {
  int target;
  std::vector<double> tau, cost, push;
};

}  // namespace

ActionGraph ActionGraph::build(const HamiltonianModel& model, const ObliqueField& field,
                               std::shared_ptr<const Grid> grid, double level,
                               ActionGraphOptions options) {
  require(grid != nullptr, "action graph needs a grid");
  require(options.n_tau >= 1 && options.radius_factor > 1.0, "invalid action graph options");
  const Grid& g = *grid;
  const ImplicitDomain& dom = g.domain();
  const int n = g.size();
  ActionGraph G;
  G.grid_ = grid;
  if (options.speed > 0.0) {
    G.speed_ = options.speed;
  } else {
    std::vector<Vec2> xs;
    const int stride = std::max(1, n / 64);
    for (int i = 0; i < n; i += stride) xs.push_back(g.node(i));
    G.speed_ = control_bound(model, xs, 1.0);
  }
  const double speed = G.speed_;
  const double ref_h = options.reference_h > 0.0 ? options.reference_h : dom.diameter() / 40.0;
  const double reach = options.radius_factor * g.h() * std::max(1.0, std::sqrt(ref_h / g.h()));
  std::vector<double> speeds(options.n_tau);
  for (int k = 0; k < options.n_tau; ++k)
    speeds[k] = options.n_tau == 1
                    ? speed
                    : speed * std::pow(options.min_speed_ratio,
                                       static_cast<double>(options.n_tau - 1 - k) / (options.n_tau - 1));

  // Simpson action of the straight move a → b in time τ with push l along γ.
  auto move_cost = [&](const Vec2& a, const Vec2& b, double tau, double l) {
    const Vec2 v = (b - a) * (1.0 / tau);
    const Vec2 m = (a + b) * 0.5;
    double sum = 0.0;
    const Vec2 pts[3] = {a, m, b};
    const double wts[3] = {1.0, 4.0, 1.0};
    for (int q = 0; q < 3; ++q) {
      const Vec2 xi = l > 0.0 ? v + field.gamma(pts[q]) * l : v;
      const double L = finite_or_inf(lagrangian(model, pts[q], -xi));
      if (!std::isfinite(L)) return kInf;
      sum += wts[q] * (L + (l > 0.0 ? field.g(pts[q]) * l : 0.0));
    }
    return tau * sum / 6.0;
  };

  std::vector<std::vector<LocalEdge>> local(n);
  G.rest_rate_.assign(n, 0.0);
  G.rest_push_.assign(n, 0.0);
  parallel_for(n, [&](int b, int e) {
    for (int i = b; i < e; ++i) {
      const Vec2 x = g.node(i);
      if (g.is_boundary(i)) {
        auto f = [&](double l) {
          const double L = finite_or_inf(lagrangian(model, x, field.gamma(x) * (-l)));
          return L + field.g(x) * l;
        };
        const auto best = golden_min(f, speed, options.push_iterations);
        G.rest_rate_[i] = best.first;
        G.rest_push_[i] = best.second;
      } else {
        G.rest_rate_[i] = finite_or_inf(lagrangian(model, x, {}));
      }
      for (int j : g.nodes_within(x, reach)) {
        if (j == i) continue;
        const Vec2 y = g.node(j);
        if (!segment_inside(dom, x, y)) continue;
        const double len = dist(x, y);
        const bool pressed = g.is_boundary(i) && g.is_boundary(j);
        LocalEdge le;
        le.target = j;
        for (double s : speeds) {
          const double tau = len / s;
          double cost = move_cost(x, y, tau, 0.0), push = 0.0;
          if (pressed) {
            const auto best = golden_min([&](double l) { return move_cost(x, y, tau, l); }, speed,
                                         options.push_iterations);
            if (best.first < cost) {
              cost = best.first;
              push = best.second;
            }
          }
          if (!std::isfinite(cost)) continue;
          le.tau.push_back(tau);
          le.cost.push_back(cost);
          le.push.push_back(push);
        }
        if (!le.tau.empty()) local[i].push_back(std::move(le));
      }
    }
  });

  G.out_offset_.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) G.out_offset_[i + 1] = G.out_offset_[i] + static_cast<int>(local[i].size());
  const int m = G.out_offset_[n];
  G.source_.resize(m);
  G.target_.resize(m);
  G.menu_offset_.assign(m + 1, 0);
  for (int i = 0, e = 0; i < n; ++i) {
    for (LocalEdge& le : local[i]) {
      G.source_[e] = i;
      G.target_[e] = le.target;
      G.menu_offset_[e + 1] = G.menu_offset_[e] + le.tau.size();
      G.tau_menu_.insert(G.tau_menu_.end(), le.tau.begin(), le.tau.end());
      G.cost_menu_.insert(G.cost_menu_.end(), le.cost.begin(), le.cost.end());
      G.push_menu_.insert(G.push_menu_.end(), le.push.begin(), le.push.end());
      ++e;
    }
    local[i].clear();
    local[i].shrink_to_fit();
  }
  for (int i = 0; i < n; ++i)
    if (G.out_offset_[i + 1] == G.out_offset_[i])
      fail(ErrorCode::InvalidDomain, "grid node without a finite outgoing edge");

  G.in_offset_.assign(n + 1, 0);
  for (int e = 0; e < m; ++e) ++G.in_offset_[G.target_[e] + 1];
  for (int j = 0; j < n; ++j) G.in_offset_[j + 1] += G.in_offset_[j];
  G.in_edges_.resize(m);
  std::vector<int> fill(G.in_offset_.begin(), G.in_offset_.end() - 1);
  for (int e = 0; e < m; ++e) G.in_edges_[fill[G.target_[e]]++] = e;

  std::vector<double> taus = G.tau_menu_;
  std::nth_element(taus.begin(), taus.begin() + taus.size() / 2, taus.end());
  G.median_tau_ = taus[taus.size() / 2];

  G.weight_.resize(m);
  G.tau_.resize(m);
  G.choice_.resize(m);
  G.set_level(level);
  return G;
}

std::span<const double> ActionGraph::tau_menu(int e) const {
  return {tau_menu_.data() + menu_offset_[e], menu_offset_[e + 1] - menu_offset_[e]};
}

std::span<const double> ActionGraph::cost_menu(int e) const {
  return {cost_menu_.data() + menu_offset_[e], menu_offset_[e + 1] - menu_offset_[e]};
}

void ActionGraph::set_level(double a) {
  level_ = a;
  const int m = edge_count();
  parallel_for(m, [&](int b, int e) {
    for (int k = b; k < e; ++k) {
      const auto cost = cost_menu(k);
      const auto tau = tau_menu(k);
      const kernels::MinArg r = kernels::affine_min(cost, tau, a);
      double w = r.value, t = tau[r.index];
      const std::size_t j = static_cast<std::size_t>(r.index);
      if (j > 0 && j + 1 < tau.size()) {
        const double x0 = std::log(tau[j - 1]), x1 = std::log(tau[j]), x2 = std::log(tau[j + 1]);
        const double f0 = cost[j - 1] + a * tau[j - 1], f1 = w, f2 = cost[j + 1] + a * tau[j + 1];
        const double d01 = (f1 - f0) / (x1 - x0), d12 = (f2 - f1) / (x2 - x1);
        const double curv = (d12 - d01) / (x2 - x0);
        if (curv > 0.0) {
          const double xs = std::clamp(0.5 * (x0 + x1) - d01 / (2.0 * curv), x0, x2);
          const double fs = f0 + d01 * (xs - x0) + curv * (xs - x0) * (xs - x1);
          if (fs < w) {
            w = fs;
            t = std::exp(xs);
          }
        }
      }
      weight_[k] = w;
      tau_[k] = t;
      choice_[k] = r.index;
    }
  });
}

std::optional<std::vector<double>> bellman_ford_potential(const ActionGraph& G) {
  const int n = G.size();
  for (int i = 0; i < n; ++i)
    if (G.rest_rate(i) + G.level() < 0.0) return std::nullopt;
  std::vector<double> dist(n, 0.0);
  std::vector<int> parent(n, -1);  // edge id
  std::vector<char> active(n, 1), next(n, 0);
  std::vector<char> state(n);
  for (int pass = 0; pass <= n; ++pass) {
    bool changed = false;
    std::fill(next.begin(), next.end(), 0);
    for (int i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (int e = G.out_begin(i); e < G.out_begin(i + 1); ++e) {
        const int j = G.target(e);
        const double nd = dist[i] + G.weight(e);
        if (nd < dist[j] - 1e-14 * (1.0 + std::abs(dist[j]))) {
          dist[j] = nd;
          parent[j] = e;
          next[j] = 1;
          changed = true;
        }
      }
    }
    if (!changed) return dist;
    active.swap(next);
    // A cycle in the parent graph closes a strictly improving loop.
    std::fill(state.begin(), state.end(), 0);
    for (int s = 0; s < n; ++s) {
      if (state[s]) continue;
      int v = s;
      while (v >= 0 && state[v] == 0) {
        state[v] = 1;
        v = parent[v] >= 0 ? G.source(parent[v]) : -1;
      }
      if (v >= 0 && state[v] == 1) {
        double w = 0.0;
        int u = v;
        do {
          w += G.weight(parent[u]);
          u = G.source(parent[u]);
        } while (u != v);
        if (w < 0.0) return std::nullopt;
      }
      v = s;
      while (v >= 0 && state[v] == 1) {
        state[v] = 2;
        v = parent[v] >= 0 ? G.source(parent[v]) : -1;
      }
    }
  }
  return std::nullopt;
}

CriticalValue critical_value_cycle(ActionGraph& G, CycleOptions options) {
  const int n = G.size();
  double min_rest = kInf, max_abs = 0.0;
  for (int i = 0; i < n; ++i) {
    min_rest = std::min(min_rest, G.rest_rate(i));
    max_abs = std::max(max_abs, std::abs(G.rest_rate(i)));
  }
  CriticalValue cv;
  cv.scale = std::max(1.0, max_abs);
  const double scale = cv.scale;
  // Resting at the cheapest node is a negative loop below −min_rest.
  double lo = -min_rest - 1e-9 * scale;
  double hi = -min_rest;
  double step = 0.1 * scale;
  for (;;) {
    G.set_level(hi);
    if (bellman_ford_potential(G)) break;
    lo = hi;
    hi = -min_rest + step;
    if (step > 10.0 * scale) fail(ErrorCode::BracketFailure, "no level without negative cycles within 10 scale");
    step *= 2.0;
  }
  while (hi - lo > options.width * scale && cv.iterations < options.max_iterations) {
    const double mid = 0.5 * (lo + hi);
    G.set_level(mid);
    if (bellman_ford_potential(G)) {
      hi = mid;
    } else {
      lo = mid;
    }
    ++cv.iterations;
  }
  G.set_level(hi);
  auto p = bellman_ford_potential(G);
  if (!p) fail(ErrorCode::NegativeCycleAtC, "upper bracket lost its potential");
  cv.bracket_lo = lo;
  cv.bracket_hi = hi;
  cv.c_cycle = hi;
  cv.c = hi;
  cv.subsolution.resize(n);
  for (int i = 0; i < n; ++i) cv.subsolution[i] = -(*p)[i];
  return cv;
}

namespace {

double ls_slope(const std::vector<double>& t, const std::vector<double>& y, std::size_t b,
                std::size_t e) {
  const double cnt = static_cast<double>(e - b);
  double mt = 0.0, my = 0.0;
  for (std::size_t i = b; i < e; ++i) {
    mt += t[i];
    my += y[i];
  }
  mt /= cnt;
  my /= cnt;
  double num = 0.0, den = 0.0;
  for (std::size_t i = b; i < e; ++i) {
    num += (t[i] - mt) * (y[i] - my);
    den += (t[i] - mt) * (t[i] - mt);
  }
  return num / den;
}

}  // namespace

SlopeEstimate critical_value_slope(const HamiltonianModel& model, const ObliqueField& field,
                                   std::shared_ptr<const Grid> grid, double T, SlopeOptions options) {
  require(T > 0.0, "horizon must be positive");
  SolverOptions so = options.solver;
  so.dt = options.dt;
  if (so.dt <= 0.0 && so.courant <= 0.0) so.courant = 2.0;
  so.retain_policy = false;
  auto solver = CauchySolver::create(model.shifted(0.0), field, std::move(grid), so);
  const int steps = std::max(8, static_cast<int>(std::llround(T / solver->dt())));
  std::vector<double> ts, means;
  const std::vector<double> u0(solver->grid().size(), 0.0);
  solver->run(u0, steps, [&](int k, std::span<const double> w) {
    double s = 0.0;
    for (double v : w) s += v;
    ts.push_back(k * solver->dt());
    means.push_back(s / static_cast<double>(w.size()));
  });
  const std::size_t half = ts.size() / 2, three = (3 * ts.size()) / 4;
  SlopeEstimate est;
  est.dt = solver->dt();
  est.horizon = ts.back();
  est.slope_early = ls_slope(ts, means, half, three + 1);
  est.slope_late = ls_slope(ts, means, three, ts.size());
  est.c = -ls_slope(ts, means, half, ts.size());
  if (std::abs(est.slope_early - est.slope_late) > options.tol) {
    std::ostringstream os;
    os << "window slopes " << est.slope_early << " and " << est.slope_late << " differ by more than "
       << options.tol;
    fail(ErrorCode::SlopeNotConverged, os.str());
  }
  return est;
}

namespace {

using HeapItem = std::pair<double, int>;

PathTree dijkstra(const ActionGraph& G, std::span<const double> p, int root, bool forward) {
  const int n = G.size();
  require(static_cast<int>(p.size()) == n, "potential size does not match the graph");
  require(root >= 0 && root < n, "root node out of range");
  PathTree t;
  t.root = root;
  t.forward = forward;
  std::vector<double> dr(n, kInf);
  t.edge.assign(n, -1);
  std::vector<char> done(n, 0);
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;
  dr[root] = 0.0;
  heap.push({0.0, root});
  while (!heap.empty()) {
    const auto [du, u] = heap.top();
    heap.pop();
    if (done[u]) continue;
    done[u] = 1;
    if (forward) {
      for (int e = G.out_begin(u); e < G.out_begin(u + 1); ++e) {
        const int v = G.target(e);
        const double w = std::max(0.0, G.weight(e) + p[u] - p[v]);
        if (du + w < dr[v]) {
          dr[v] = du + w;
          t.edge[v] = e;
          heap.push({dr[v], v});
        }
      }
    } else {
      for (int k = G.in_begin(u); k < G.in_begin(u + 1); ++k) {
        const int e = G.in_edge(k);
        const int v = G.source(e);
        const double w = std::max(0.0, G.weight(e) + p[v] - p[u]);
        if (du + w < dr[v]) {
          dr[v] = du + w;
          t.edge[v] = e;
          heap.push({dr[v], v});
        }
      }
    }
  }
  t.dist.resize(n);
  for (int v = 0; v < n; ++v) {
    if (!std::isfinite(dr[v])) {
      t.dist[v] = kInf;
    } else if (forward) {
      t.dist[v] = dr[v] - p[root] + p[v];
    } else {
      t.dist[v] = dr[v] - p[v] + p[root];
    }
  }
  t.dist[root] = 0.0;
  return t;
}

}  // namespace

PathTree shortest_from(const ActionGraph& G, std::span<const double> p, int source) {
  return dijkstra(G, p, source, true);
}

PathTree shortest_to(const ActionGraph& G, std::span<const double> p, int target) {
  return dijkstra(G, p, target, false);
}

std::vector<int> tree_path(const ActionGraph& G, const PathTree& t, int node) {
  std::vector<int> path{node};
  int v = node;
  while (v != t.root) {
    const int e = t.edge[v];
    if (e < 0) return {};
    v = t.forward ? G.source(e) : G.target(e);
    path.push_back(v);
  }
  if (t.forward) std::reverse(path.begin(), path.end());
  return path;
}

std::vector<double> ManePotential::column(int j) const {
  std::vector<double> c(n_);
  for (int i = 0; i < n_; ++i) c[i] = (*this)(i, j);
  return c;
}

double ManePotential::triangle_defect() const {
  // max over i, k, j of d[i][j] − (d[i][k] + d[k][j]). Rows i are taken in
  // blocks so each row k is streamed once per block instead of once per i.
  constexpr int kBlock = 16;
  const int blocks = (n_ + kBlock - 1) / kBlock;
  std::vector<double> worst(blocks, 0.0);
  parallel_for(blocks, [&](int b, int e) {
    for (int blk = b; blk < e; ++blk) {
      const int i0 = blk * kBlock, i1 = std::min(n_, i0 + kBlock);
      double w = 0.0;
      for (int k = 0; k < n_; ++k) {
        const auto rk = row(k);
        for (int i = i0; i < i1; ++i) w = std::max(w, kernels::max_excess(row(i), rk, (*this)(i, k)));
      }
      worst[blk] = w;
    }
  });
  return *std::max_element(worst.begin(), worst.end());
}

ManePotential mane_potential(const ActionGraph& G, int max_nodes) {
  const int n = G.size();
  if (n > max_nodes) {
    std::ostringstream os;
    os << "full potential matrix needs " << n << " nodes, above the cap of " << max_nodes
       << "; use shortest_from / shortest_to";
    fail(ErrorCode::InvalidArgument, os.str());
  }
  auto p = bellman_ford_potential(G);
  if (!p) fail(ErrorCode::NegativeCycleAtC, "negative cycle at the requested level");
  std::vector<double> d(static_cast<std::size_t>(n) * n);
  parallel_for(n, [&](int b, int e) {
    for (int i = b; i < e; ++i) {
      const PathTree t = shortest_from(G, *p, i);
      std::copy(t.dist.begin(), t.dist.end(), d.begin() + static_cast<std::ptrdiff_t>(i) * n);
    }
  });
  return ManePotential(G.level(), n, std::move(d), std::move(*p));
}

double AubryResult::distance(const Grid& grid, const Vec2& x) const {
  double best = kInf;
  for (int y : nodes) best = std::min(best, dist(x, grid.node(y)));
  return best;
}

AubryResult aubry_detect(const ActionGraph& G, const ManePotential& d, const ObliqueField& field,
                         AubryOptions options) {
  const int n = G.size();
  require(d.size() == n, "potential matrix does not match the graph");
  AubryResult res;
  res.tau_min = options.tau_min > 0.0 ? options.tau_min : 4.0 * G.median_tau();
  const double h = G.grid().h();
  res.tol = options.tol > 0.0 ? options.tol : res.tau_min * h * h * (1.0 + field.g_sup()) / 2.0;
  res.residual.assign(n, kInf);
  res.partner.assign(n, -1);
  const double level = d.level();
  parallel_for(n, [&](int b, int e) {
    for (int y = b; y < e; ++y) {
      double best = (G.rest_rate(y) + level) * res.tau_min;
      int arg = y;
      const auto ry = d.row(y);
      for (int z = 0; z < n; ++z) {
        if (z == y) continue;
        const double loop = ry[z] + d(z, y);
        if (loop < best) {
          best = loop;
          arg = z;
        }
      }
      res.residual[y] = best;
      res.partner[y] = arg;
    }
  });
  res.member.assign(n, 0);
  int argmin = 0;
  for (int y = 0; y < n; ++y) {
    if (res.residual[y] < res.residual[argmin]) argmin = y;
    if (res.residual[y] <= res.tol) {
      res.member[y] = 1;
      res.nodes.push_back(y);
    }
  }
  res.min_residual = res.residual[argmin];
  if (res.nodes.empty()) {
    res.forced = true;
    res.member[argmin] = 1;
    res.nodes.push_back(argmin);
  }
  return res;
}

std::vector<double> restrict_to_aubry(std::span<const double> u, const AubryResult& aubry) {
  std::vector<double> out;
  out.reserve(aubry.nodes.size());
  for (int y : aubry.nodes) out.push_back(u[y]);
  return out;
}

std::vector<double> representation(std::span<const double> u_on_A, const AubryResult& aubry,
                                   const ManePotential& d, double tol) {
  const std::size_t m = aubry.nodes.size();
  require(u_on_A.size() == m, "trace size does not match the Aubry set");
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      const int y = aubry.nodes[a], z = aubry.nodes[b];
      const double excess = u_on_A[a] - u_on_A[b] - d(y, z);
      if (excess > tol) {
        std::ostringstream os;
        os << "trace violates u(y) - u(y') <= d(y, y') at nodes " << y << " and " << z << " by "
           << excess;
        fail(ErrorCode::IncompatibleTrace, os.str());
      }
    }
  }
  const int n = d.size();
  std::vector<double> u(n, kInf);
  parallel_for(n, [&](int b, int e) {
    for (int x = b; x < e; ++x) {
      const auto rx = d.row(x);
      double best = kInf;
      for (std::size_t a = 0; a < m; ++a) best = std::min(best, u_on_A[a] + rx[aubry.nodes[a]]);
      u[x] = best;
    }
  });
  return u;
}

std::vector<double> u_minus(const HamiltonianModel& model, const ObliqueField& field,
                            std::shared_ptr<const Grid> grid, std::span<const double> u0, double c,
                            double T, UMinusOptions options) {
  require(T > 0.0, "horizon must be positive");
  const double tol = options.tol > 0.0 ? options.tol : grid->h();
  SolverOptions so = options.solver;
  so.retain_policy = false;
  auto solver = CauchySolver::create(model.shifted(c), field, std::move(grid), so);
  const int steps = std::max(4, static_cast<int>(std::llround(T / solver->dt())));
  const int k_half = steps / 2, k_three = (3 * steps) / 4;
  const std::size_t n = u0.size();
  std::vector<double> early(n, kInf), full(n, kInf);
  solver->run(u0, steps, [&](int k, std::span<const double> w) {
    if (k < k_half) return;
    for (std::size_t i = 0; i < n; ++i) {
      full[i] = std::min(full[i], w[i]);
      if (k <= k_three) early[i] = std::min(early[i], w[i]);
    }
  });
  double moved = 0.0;
  int witness = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (early[i] - full[i] > moved) {
      moved = early[i] - full[i];
      witness = static_cast<int>(i);
    }
  }
  if (moved > tol) {
    std::ostringstream os;
    os << "running minimum still moves by " << moved << " over the last quarter at node " << witness;
    fail(ErrorCode::NotRelaxed, os.str());
  }
  return full;
}

}  // namespace wkam
