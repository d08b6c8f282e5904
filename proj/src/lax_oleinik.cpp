#include "wkam/lax_oleinik.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "wkam/errors.hpp"
#include "wkam/parallel.hpp"

namespace wkam {

ControlSet ControlSet::polar(int dim, double bound, int n_angle, int n_speed,
                             double min_speed_ratio) {
  require(bound > 0.0, "control bound must be positive");
  require(n_speed >= 1, "need at least one speed");
  require(min_speed_ratio > 0.0 && min_speed_ratio <= 1.0, "min_speed_ratio must be in (0, 1]");
  ControlSet cs;
  cs.bound = bound;
  cs.controls.push_back({0.0, 0.0});
  std::vector<Vec2> dirs;
  if (dim == 1) {
    dirs = {{1.0, 0.0}, {-1.0, 0.0}};
  } else {
    require(n_angle >= 2 && n_angle % 2 == 0, "n_angle must be even so the set is symmetric");
    for (int a = 0; a < n_angle; ++a) {
      const double th = 2.0 * std::numbers::pi * a / n_angle;
      dirs.push_back({std::cos(th), std::sin(th)});
    }
  }
  for (int k = 0; k < n_speed; ++k) {
    const double s = n_speed == 1
                         ? bound
                         : bound * std::pow(min_speed_ratio, static_cast<double>(n_speed - 1 - k) / (n_speed - 1));
    for (const Vec2& d : dirs) cs.controls.push_back(d * s);
  }
  return cs;
}

CauchySolver::CauchySolver(HamiltonianModel model, ObliqueField field, std::shared_ptr<const Grid> grid,
                           SolverOptions options)
    : model_(std::move(model)), field_(std::move(field)), grid_(std::move(grid)), options_(options) {
  require(grid_ != nullptr, "solver needs a grid");
  require(model_.dim() == grid_->dim(), "Hamiltonian and domain dimensions differ");
  R_ = options_.R > 0.0 ? options_.R : 1.0;
  const int n = grid_->size();
  const int stride = std::max(1, n / 64);
  for (int i = 0; i < n; i += stride) bound_samples_.push_back(grid_->node(i));
  const double C = control_bound(model_, bound_samples_, R_);
  controls_ = ControlSet::polar(grid_->dim(), C, options_.n_angle, options_.n_speed,
                                options_.min_speed_ratio);
  if (options_.dt > 0.0) {
    dt_ = options_.dt;
  } else if (options_.courant > 0.0) {
    dt_ = options_.courant * grid_->h() / C;
  } else {
    dt_ = grid_->h() / (2.0 * C + 1.0);
  }
  build_tables();
}

std::shared_ptr<const CauchySolver> CauchySolver::create(HamiltonianModel model, ObliqueField field,
                                                         std::shared_ptr<const Grid> grid,
                                                         SolverOptions options) {
  return std::shared_ptr<const CauchySolver>(
      new CauchySolver(std::move(model), std::move(field), std::move(grid), options));
}

std::shared_ptr<const CauchySolver> CauchySolver::with_dt(double dt) const {
  SolverOptions o = options_;
  o.dt = dt;
  return create(model_, field_, grid_, o);
}

std::shared_ptr<const CauchySolver> CauchySolver::with_policy(bool retain) const {
  SolverOptions o = options_;
  o.retain_policy = retain;
  o.dt = dt_;
  return create(model_, field_, grid_, o);
}

Transition CauchySolver::transition_at(const Vec2& x, int control) const {
  const Vec2 xi = controls_.controls[control];
  const ExtReal L = lagrangian(model_, x, -xi);
  Transition t{};
  t.control = control;
  if (L.is_infinite()) {
    t.cost = std::numeric_limits<double>::infinity();
    return t;
  }
  if (control == 0) {
    t.foot = x;
    t.push = 0.0;
  } else {
    const ReflectStep r = reflect_step(grid_->domain(), field_, x, xi * dt_);
    t.foot = r.foot;
    t.push = r.push;
  }
  t.stencil = grid_->locate(t.foot);
  t.cost = dt_ * L.value() + (t.push > 0.0 ? field_.g(t.foot) * t.push : 0.0);
  return t;
}

std::vector<Transition> CauchySolver::transitions_at(const Vec2& x) const {
  std::vector<Transition> out;
  for (int c = 0; c < static_cast<int>(controls_.controls.size()); ++c) {
    Transition t = transition_at(x, c);
    if (std::isfinite(t.cost)) out.push_back(t);
  }
  if (out.empty()) fail(ErrorCode::EmptyControlSet, "every control has infinite Lagrangian");
  return out;
}

std::vector<Transition> CauchySolver::transitions(int node) const {
  std::vector<Transition> out = transitions_at(grid_->node(node));
  for (Transition& t : out) {
    if (t.control == 0) {
      Stencil s;
      s.idx = {node, node, node, node};
      s.w = {1.0, 0.0, 0.0, 0.0};
      t.stencil = s;
    }
  }
  return out;
}

void CauchySolver::build_tables() {
  const int n = grid_->size();
  std::vector<std::vector<Transition>> per_node(n);
  parallel_for(n, [&](int b, int e) {
    for (int i = b; i < e; ++i) per_node[i] = transitions(i);
  });
  offset_.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) offset_[i + 1] = offset_[i] + per_node[i].size();
  const std::size_t total = offset_[n];
  cost_.resize(total);
  w1_.resize(total);
  w2_.resize(total);
  w3_.resize(total);
  i0_.resize(total);
  i1_.resize(total);
  i2_.resize(total);
  i3_.resize(total);
  control_of_.resize(total);
  for (int i = 0; i < n; ++i) {
    std::size_t k = offset_[i];
    for (const Transition& t : per_node[i]) {
      cost_[k] = t.cost;
      i0_[k] = t.stencil.idx[0];
      i1_[k] = t.stencil.idx[1];
      i2_[k] = t.stencil.idx[2];
      i3_[k] = t.stencil.idx[3];
      w1_[k] = t.stencil.w[1];
      w2_[k] = t.stencil.w[2];
      w3_[k] = t.stencil.w[3];
      control_of_[k] = t.control;
      ++k;
    }
    per_node[i].clear();
    per_node[i].shrink_to_fit();
  }
}

int CauchySolver::node_transition_count(int node) const {
  return static_cast<int>(offset_[node + 1] - offset_[node]);
}

Transition CauchySolver::node_transition(int node, int k) const {
  require(k >= 0 && k < node_transition_count(node), "transition index out of range");
  const std::size_t j = offset_[node] + k;
  Transition t = transition_at(grid_->node(node), control_of_[j]);
  t.cost = cost_[j];
  t.stencil.idx = {i0_[j], i1_[j], i2_[j], i3_[j]};
  t.stencil.w = {1.0 - w1_[j] - w2_[j] - w3_[j], w1_[j], w2_[j], w3_[j]};
  return t;
}

StepStats CauchySolver::step(std::span<const double> w_now, std::span<double> w_next,
                             std::span<std::int32_t> argmin) const {
  const int n = grid_->size();
  require(static_cast<int>(w_now.size()) == n && static_cast<int>(w_next.size()) == n,
          "step: field size does not match the grid");
  require(argmin.empty() || static_cast<int>(argmin.size()) == n, "step: argmin size mismatch");
  std::vector<double> best_norm(n, 0.0);
  parallel_for(n, [&](int b, int e) {
    for (int i = b; i < e; ++i) {
      const std::size_t o = offset_[i];
      kernels::TransitionView v;
      v.cost = cost_.data() + o;
      v.i0 = i0_.data() + o;
      v.i1 = i1_.data() + o;
      v.i2 = i2_.data() + o;
      v.i3 = i3_.data() + o;
      v.w1 = w1_.data() + o;
      v.w2 = w2_.data() + o;
      v.w3 = w3_.data() + o;
      v.count = offset_[i + 1] - o;
      const kernels::MinArg m = kernels::transition_min(v, w_now.data());
      w_next[i] = m.value;
      if (!argmin.empty()) argmin[i] = m.index;
      best_norm[i] = norm(controls_.controls[control_of_[o + m.index]]);
    }
  });
  StepStats st;
  st.max_control_norm = *std::max_element(best_norm.begin(), best_norm.end());
  if (options_.check_control_bound) {
    const double R = grid_->lipschitz_ratio(w_now);
    st.control_bound_now = R > 1e-12 ? control_bound(model_, bound_samples_, R)
                                     : std::numeric_limits<double>::infinity();
  }
  return st;
}

void CauchySolver::run(std::span<const double> u0, int steps,
                       const std::function<void(int, std::span<const double>)>& observer) const {
  require(static_cast<int>(u0.size()) == grid_->size(), "initial data does not match the grid");
  std::vector<double> a(u0.begin(), u0.end()), b(a.size());
  observer(0, a);
  for (int k = 1; k <= steps; ++k) {
    step(a, b);
    a.swap(b);
    observer(k, a);
  }
}

TimeField CauchySolver::solve(std::span<const double> u0, double T) const {
  require(T > 0.0, "horizon must be positive");
  require(static_cast<int>(u0.size()) == grid_->size(), "initial data does not match the grid");
  for (double v : u0) require(std::isfinite(v), "initial data must be finite");
  const int steps = std::max(1, static_cast<int>(std::llround(T / dt_)));
  std::vector<std::vector<double>> slices;
  std::vector<std::vector<std::int32_t>> policy;
  std::vector<StepStats> stats;
  slices.reserve(steps + 1);
  slices.emplace_back(u0.begin(), u0.end());
  for (int k = 1; k <= steps; ++k) {
    std::vector<double> next(u0.size());
    std::vector<std::int32_t> arg;
    if (options_.retain_policy) arg.resize(u0.size());
    stats.push_back(step(slices.back(), next, arg));
    slices.push_back(std::move(next));
    if (options_.retain_policy) policy.push_back(std::move(arg));
  }
  return TimeField(shared_from_this(), std::move(slices), std::move(policy), std::move(stats));
}

TimeField::TimeField(std::shared_ptr<const CauchySolver> solver,
                     std::vector<std::vector<double>> slices,
                     std::vector<std::vector<std::int32_t>> policy, std::vector<StepStats> stats)
    : solver_(std::move(solver)),
      slices_(std::move(slices)),
      policy_(std::move(policy)),
      stats_(std::move(stats)) {
  require(!slices_.empty(), "time field needs at least one slice");
}

bool TimeField::control_bound_respected() const {
  for (const StepStats& s : stats_)
    if (s.max_control_norm > s.control_bound_now * (1.0 + 1e-12)) return false;
  return true;
}

BarrierReport TimeField::barriers() const {
  const Grid& g = grid();
  const HamiltonianModel& m = solver_->model();
  BarrierReport r;
  r.upper_constant = -std::numeric_limits<double>::infinity();
  for (const Vec2& x : g.nodes()) r.upper_constant = std::max(r.upper_constant, lagrangian(m, x, {}).value_or(0.0));
  r.lipschitz_u0 = g.lipschitz_ratio(initial());
  std::vector<Vec2> xs;
  const int stride = std::max(1, g.size() / 256);
  for (int i = 0; i < g.size(); i += stride) xs.push_back(g.node(i));
  r.lower_constant = lagrangian_lower_envelope(m, xs, std::max(r.lipschitz_u0, 1e-9));
  r.upper_defect = -std::numeric_limits<double>::infinity();
  r.lower_defect = -std::numeric_limits<double>::infinity();
  const auto u0 = initial();
  for (int k = 0; k <= steps(); ++k) {
    const double t = k * dt();
    const auto w = slice(k);
    for (int i = 0; i < g.size(); ++i) {
      r.upper_defect = std::max(r.upper_defect, w[i] - u0[i] - r.upper_constant * t);
      r.lower_defect = std::max(r.lower_defect, u0[i] - r.lower_constant * t - w[i]);
    }
  }
  return r;
}

std::vector<double> step(const HamiltonianModel& model, const ObliqueField& field,
                         std::shared_ptr<const Grid> grid, std::span<const double> w_now, double dt) {
  require(dt > 0.0, "dt must be positive");
  SolverOptions o;
  o.dt = dt;
  auto solver = CauchySolver::create(model, field, std::move(grid), o);
  std::vector<double> next(w_now.size());
  solver->step(w_now, next);
  return next;
}

TimeField solve_cauchy(const HamiltonianModel& model, const ObliqueField& field,
                       std::shared_ptr<const Grid> grid, std::span<const double> u0, double T,
                       SolverOptions options) {
  return CauchySolver::create(model, field, std::move(grid), options)->solve(u0, T);
}

DppReport check_dpp(const TimeField& field, double s, double t, double tol, double resolve_dt) {
  const double dt = field.dt();
  const int ks = static_cast<int>(std::llround(s / dt));
  const int kt = static_cast<int>(std::llround(t / dt));
  require(std::abs(ks * dt - s) <= 1e-9 * (1.0 + s) && std::abs(kt * dt - t) <= 1e-9 * (1.0 + t),
          "check_dpp: s and t must lie on the time grid");
  require(ks + kt <= field.steps(), "check_dpp: s + t exceeds the horizon");
  DppReport rep;
  const auto target = field.slice(ks + kt);
  if (kt == 0) {
    rep.pass = true;
    return rep;
  }
  std::shared_ptr<const CauchySolver> solver =
      resolve_dt > 0.0 ? field.solver().with_dt(resolve_dt) : field.solver_ptr();
  const int steps = static_cast<int>(std::llround(t / solver->dt()));
  std::vector<double> last;
  solver->run(field.slice(ks), steps, [&](int k, std::span<const double> w) {
    if (k == steps) last.assign(w.begin(), w.end());
  });
  for (std::size_t i = 0; i < last.size(); ++i) {
    const double d = std::abs(last[i] - target[i]);
    if (d > rep.max_defect || rep.witness < 0) {
      rep.max_defect = d;
      rep.witness = static_cast<int>(i);
    }
  }
  rep.pass = rep.max_defect <= tol;
  return rep;
}

std::vector<double> sample_on_grid(const Grid& grid, const std::function<double(const Vec2&)>& f) {
  std::vector<double> out(grid.size());
  for (int i = 0; i < grid.size(); ++i) out[i] = f(grid.node(i));
  return out;
}

}  // namespace wkam
