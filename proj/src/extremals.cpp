#include "wkam/extremals.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wkam/errors.hpp"

namespace wkam {

namespace {

struct Candidate {
  int control;
  int node;  // −1 for the rest control
};

void finish_triple(const ImplicitDomain& dom, SkorokhodTriple& tr) {
  const std::size_t n = tr.t.size();
  if (n == 0) return;
  tr.v.push_back(tr.v.empty() ? Vec2{} : tr.v.back());
  tr.l.push_back(tr.l.empty() ? 0.0 : tr.l.back());
  double vmax = 0.0, rate = 0.0;
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double dt = tr.t[j + 1] - tr.t[j];
    const Vec2 deta = (tr.eta[j + 1] - tr.eta[j]) * (1.0 / dt);
    tr.max_ode_residual = std::max(tr.max_ode_residual, norm(deta + tr.push[j] - tr.v[j]));
    vmax = std::max(vmax, norm(tr.v[j]));
    rate = std::max({rate, norm(deta), tr.l_interval[j]});
    if (tr.l_interval[j] > 0.0)
      tr.max_complementarity = std::max(tr.max_complementarity, tr.l_interval[j] * std::abs(dom.psi(tr.eta[j + 1])));
  }
  for (const Vec2& p : tr.eta) tr.max_constraint_violation = std::max(tr.max_constraint_violation, dom.psi(p));
  tr.bound_ratio = vmax > 0.0 ? rate / vmax : 0.0;
}

}  // namespace

TracedPath attained_minimizer(const TimeField& tf, const Vec2& x, double t) {
  if (!tf.has_policy()) fail(ErrorCode::MissingPolicy, "the time field was solved without retaining the policy");
  const CauchySolver& S = tf.solver();
  const Grid& grid = tf.grid();
  const double dt = tf.dt();
  const int k = static_cast<int>(std::llround(t / dt));
  require(k >= 1 && k <= tf.steps(), "tracing time must lie in (0, horizon]");
  require(grid.domain().in_closure(x), "tracing start must lie in the closed domain");

  TracedPath out;
  SkorokhodTriple& tr = out.triple;
  Vec2 y = x;
  tr.t.push_back(0.0);
  tr.eta.push_back(y);
  const auto& controls = S.controls().controls;
  for (int s = k; s >= 1; --s) {
    const Stencil st = grid.locate(y);
    std::vector<Candidate> cand{{0, -1}};
    for (int q = 0; q < 4; ++q) {
      const int node = st.idx[q];
      cand.push_back({S.node_control(node, tf.policy(s, node)), node});
    }
    const auto prev = tf.slice(s - 1);
    double best = std::numeric_limits<double>::infinity();
    Candidate chosen{-1, -1};
    Transition best_t{};
    for (const Candidate& c : cand) {
      const Transition m = S.transition_at(y, c.control);
      if (!std::isfinite(m.cost)) continue;
      const double val = m.cost + grid.interpolate(prev, m.foot);
      const double tie = 1e-12 * (1.0 + std::abs(best));
      bool take = chosen.control < 0 || val < best - tie;
      if (!take && std::abs(val - best) <= tie) {
        const double nc = norm(controls[c.control]), nb = norm(controls[chosen.control]);
        take = nc < nb || (nc == nb && c.node < chosen.node);
      }
      if (take) {
        best = std::min(best, val);
        chosen = c;
        best_t = m;
      }
    }
    if (chosen.control < 0) fail(ErrorCode::EmptyControlSet, "no finite move while tracing");
    const Vec2 v = controls[chosen.control];
    out.step_cost.push_back(best_t.cost);
    out.action += best_t.cost;
    tr.v.push_back(v);
    tr.l_interval.push_back(best_t.push / dt);
    tr.l.push_back(best_t.push / dt);
    // The realized push: free displacement minus the foot, per unit time.
    tr.push.push_back((y + v * dt - best_t.foot) * (1.0 / dt));
    y = best_t.foot;
    tr.t.push_back((k - s + 1) * dt);
    tr.eta.push_back(y);
  }
  finish_triple(grid.domain(), tr);
  out.payoff = grid.interpolate(tf.initial(), y);
  out.value = tf.value(x, k);
  out.defect = std::abs(out.action + out.payoff - out.value);
  out.bound = (grid.h() + dt) * k;
  return out;
}

double CalibratedCurve::max_abs_defect() const {
  double m = 0.0;
  for (double e : window_defect) m = std::max(m, std::abs(e));
  return m;
}

CalibratedCurve calibrated_extremal(const HamiltonianModel& model, const ObliqueField& field,
                                    std::shared_ptr<const Grid> grid, std::span<const double> phi,
                                    double c, const Vec2& x, double T, CalibrationOptions options) {
  require(T > 0.0, "horizon must be positive");
  require(static_cast<int>(phi.size()) == grid->size(), "phi does not match the grid");
  SolverOptions so = options.solver;
  so.retain_policy = true;
  auto solver = CauchySolver::create(model.shifted(c), field, grid, so);
  const double W = options.window > 0.0 ? options.window
                                        : grid->domain().diameter() / solver->controls().bound;
  const TimeField tf = solver->solve(phi, W);
  const double w = tf.horizon();

  CalibratedCurve cc;
  cc.window = w;
  cc.tol = options.tol > 0.0 ? options.tol : 5.0 * (grid->h() + tf.dt());
  cc.lipschitz_phi = grid->lipschitz_ratio(phi);
  std::vector<Vec2> xs;
  const int stride = std::max(1, grid->size() / 64);
  for (int i = 0; i < grid->size(); i += stride) xs.push_back(grid->node(i));
  cc.speed_bound = control_bound(solver->model(), xs, std::max(cc.lipschitz_phi, 1e-9));

  const int windows = std::max(1, static_cast<int>(std::ceil(T / w - 1e-9)));
  SkorokhodTriple& out = cc.triple;
  Vec2 y = x;
  const double phi0 = grid->interpolate(phi, x);
  double total_action = 0.0;
  for (int k = 0; k < windows; ++k) {
    const TracedPath p = attained_minimizer(tf, y, w);
    const double t0 = k * w;
    const SkorokhodTriple& q = p.triple;
    const std::size_t first = out.t.empty() ? 0 : 1;
    for (std::size_t j = first; j < q.t.size(); ++j) {
      out.t.push_back(t0 + q.t[j]);
      out.eta.push_back(q.eta[j]);
    }
    // Per-interval data; the sample-aligned v and l get their last entry below.
    for (std::size_t j = 0; j + 1 < q.t.size(); ++j) {
      out.v.push_back(q.v[j]);
      out.l.push_back(q.l[j]);
      out.l_interval.push_back(q.l_interval[j]);
      out.push.push_back(q.push[j]);
    }
    const Vec2 end = q.eta.back();
    const double e = grid->interpolate(phi, y) - grid->interpolate(phi, end) - p.action;
    cc.window_start.push_back(t0);
    cc.window_action.push_back(p.action);
    cc.window_defect.push_back(e);
    total_action += p.action;
    if (std::abs(e) > 10.0 * cc.tol) {
      std::ostringstream os;
      os << "window " << k << " calibration defect " << e << " exceeds 10 x " << cc.tol;
      fail(ErrorCode::CalibrationLost, os.str());
    }
    y = end;
  }
  finish_triple(grid->domain(), out);
  cc.total_defect = phi0 - grid->interpolate(phi, y) - total_action;
  for (std::size_t j = 0; j + 1 < out.v.size(); ++j) cc.max_speed = std::max(cc.max_speed, norm(out.v[j]));
  return cc;
}

AubryApproach aubry_convergence(const CalibratedCurve& curve, const AubryResult& aubry,
                                const Grid& grid) {
  AubryApproach r;
  const auto& tr = curve.triple;
  r.t = tr.t;
  for (const Vec2& p : tr.eta) r.distance.push_back(aubry.distance(grid, p));
  const double T = tr.t.back();
  for (std::size_t j = 0; j < r.t.size(); ++j) {
    if (r.t[j] >= 0.5 * T) r.tail_late = std::max(r.tail_late, r.distance[j]);
    if (r.t[j] >= 0.25 * T && r.t[j] < 0.5 * T) r.tail_mid = std::max(r.tail_mid, r.distance[j]);
  }
  r.pass = r.tail_late <= std::max(2.0 * grid.h(), r.tail_mid) + 1e-12;
  return r;
}

TwoSidedCurve two_sided_extremal(const ActionGraph& G, const ManePotential& d,
                                 const AubryResult& aubry, int y, double T) {
  require(T > 0.0, "half-width must be positive");
  require(y >= 0 && y < G.size(), "node out of range");
  if (aubry.residual[y] > aubry.tol) {
    std::ostringstream os;
    os << "cheapest loop through node " << y << " costs " << aubry.residual[y]
       << ", above the tolerance " << aubry.tol;
    fail(ErrorCode::NoCheapLoop, os.str());
  }
  std::vector<int> loop_nodes;  // closed: starts and ends at y
  std::vector<double> seg_tau, seg_cost;
  const int z = aubry.partner[y];
  if (z == y) {
    loop_nodes = {y, y};
    seg_tau = {aubry.tau_min};
    seg_cost = {(G.rest_rate(y) + d.level()) * aubry.tau_min};
  } else {
    const auto pot = d.bellman_ford_potential();
    const PathTree out = shortest_from(G, pot, y);
    const PathTree back = shortest_to(G, pot, y);
    std::vector<int> a = tree_path(G, out, z);
    const std::vector<int> b = tree_path(G, back, z);
    if (a.empty() || b.empty()) fail(ErrorCode::NoCheapLoop, "loop partner is unreachable");
    a.insert(a.end(), b.begin() + 1, b.end());
    loop_nodes = a;
    for (std::size_t k = 0; k + 1 < loop_nodes.size(); ++k) {
      const int u = loop_nodes[k], v = loop_nodes[k + 1];
      int edge = -1;
      for (int e = G.out_begin(u); e < G.out_begin(u + 1); ++e)
        if (G.target(e) == v && (edge < 0 || G.weight(e) < G.weight(edge))) edge = e;
      seg_tau.push_back(G.tau(edge));
      seg_cost.push_back(G.weight(edge));
    }
  }
  TwoSidedCurve c;
  for (double s : seg_tau) c.loop_duration += s;
  for (double s : seg_cost) c.loop_cost += s;
  double t = -T;
  c.t.push_back(t);
  c.nodes.push_back(y);
  int loop = 0;
  while (t < T - 1e-12) {
    for (std::size_t k = 0; k < seg_tau.size() && t < T - 1e-12; ++k) {
      t += seg_tau[k];
      c.t.push_back(t);
      c.nodes.push_back(loop_nodes[k + 1]);
      c.cost.push_back(seg_cost[k]);
      c.loop_of.push_back(loop);
    }
    ++loop;
  }
  c.loops = loop;
  return c;
}

double two_sided_consistency(const TwoSidedCurve& c, const ManePotential& d) {
  double worst = -std::numeric_limits<double>::infinity();
  const std::size_t n = c.nodes.size();
  for (std::size_t a = 0; a < n; ++a) {
    double action = 0.0;
    for (std::size_t b = a + 1; b < n; ++b) {
      action += c.cost[b - 1];
      const int loops = c.loop_of[b - 1] - c.loop_of[a < n - 1 ? a : a - 1] + 1;
      worst = std::max(worst, (action - d(c.nodes[a], c.nodes[b])) / loops);
    }
  }
  return n > 1 ? worst : 0.0;
}

}  // namespace wkam
