#include "wkam/skorokhod.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wkam/errors.hpp"

namespace wkam {

double InputSignal::max_norm() const {
  double m = 0.0;
  for (const Vec2& x : v) m = std::max(m, norm(x));
  return m;
}

InputSignal constant_input(Vec2 v, double T, int steps) {
  return sampled_input([v](double) { return v; }, T, steps);
}

InputSignal sampled_input(const std::function<Vec2(double)>& f, double T, int steps) {
  require(T > 0.0, "input horizon must be positive");
  require(steps >= 1, "input needs at least one interval");
  InputSignal in;
  in.t.resize(steps + 1);
  in.v.resize(steps);
  for (int i = 0; i <= steps; ++i) in.t[i] = T * i / steps;
  for (int i = 0; i < steps; ++i) in.v[i] = f(0.5 * (in.t[i] + in.t[i + 1]));
  return in;
}

InputSignal clip_input(const InputSignal& input, double k) {
  require(k > 0.0, "clip level must be positive");
  InputSignal out = input;
  for (Vec2& v : out.v) {
    const double n = norm(v);
    if (n > k) v = v * (k / n);
  }
  return out;
}

PenaltyScheme make_scheme(const ImplicitDomain& domain, double epsilon, double h_ode, int method) {
  require(epsilon > 0.0, "penalty epsilon must be positive");
  require(method == 1 || method == 2, "integrator method must be 1 or 2");
  PenaltyScheme s;
  s.epsilon = epsilon;
  s.cap_delta = domain.band() / domain.rho0();
  s.h_ode = std::min(h_ode, epsilon / 10.0);
  s.method = method;
  return s;
}

double scaled_penalty(const ImplicitDomain& domain, double cap, const Vec2& x) {
  return std::min(std::max(domain.psi(x) / domain.rho0(), 0.0), cap);
}

namespace {

struct Rhs {
  Vec2 f;       // ξ̇
  double q;     // penalty level
  Vec2 qgamma;  // q·γ
};

Rhs rhs(const ImplicitDomain& domain, const ObliqueField& field, const PenaltyScheme& s,
        const Vec2& xi, const Vec2& v) {
  const double q = scaled_penalty(domain, s.cap_delta, xi);
  const Vec2 qg = q > 0.0 ? field.gamma(xi) * q : Vec2{};
  return {v - qg / s.epsilon, q, qg};
}

}  // namespace

RawPath solve_penalized(const ImplicitDomain& domain, const ObliqueField& field,
                        const PenaltyScheme& scheme, const Vec2& x0, const InputSignal& input) {
  require(input.t.size() >= 2 && input.v.size() + 1 == input.t.size(), "malformed input signal");
  require(scheme.epsilon > 0.0 && scheme.h_ode > 0.0, "scheme needs positive epsilon and h_ode");
  if (scheme.h_ode > scheme.epsilon / 4.0) {
    fail(ErrorCode::StiffnessFailure, "h_ode exceeds epsilon/4");
  }
  if (!domain.in_closure(x0)) fail(ErrorCode::InvalidArgument, "start point is outside the domain");

  RawPath out;
  out.t = input.t;
  out.epsilon = scheme.epsilon;
  out.xi.reserve(input.t.size());
  out.l_avg.reserve(input.v.size());
  out.push_avg.reserve(input.v.size());

  Vec2 xi = x0;
  out.xi.push_back(xi);
  const double inv_eps = 1.0 / scheme.epsilon;
  for (std::size_t i = 0; i < input.v.size(); ++i) {
    const Vec2 v = input.v[i];
    const double span = input.t[i + 1] - input.t[i];
    int n_sub = static_cast<int>(std::ceil(span / scheme.h_ode - 1e-9));
    n_sub = std::max(n_sub, 1);
    double l_int = 0.0;
    Vec2 push_int{};

    // Integrate the interval; if the penalty jumps by more than cap/2 in one
    // substep, restart the interval with finer substeps.
    for (int refine = 0;; ++refine) {
      const double h = span / n_sub;
      Vec2 y = xi;
      double li = 0.0;
      Vec2 pi{};
      bool stiff = false;
      for (int k = 0; k < n_sub && !stiff; ++k) {
        const Rhs a = rhs(domain, field, scheme, y, v);
        Vec2 next;
        double q_next;
        if (scheme.method == 1) {
          next = y + a.f * h;
          li += h * a.q * inv_eps;
          pi = pi + a.qgamma * (h * inv_eps);
          q_next = scaled_penalty(domain, scheme.cap_delta, next);
        } else {
          const Vec2 pred = y + a.f * h;
          const Rhs b = rhs(domain, field, scheme, pred, v);
          next = y + (a.f + b.f) * (0.5 * h);
          li += 0.5 * h * (a.q + b.q) * inv_eps;
          pi = pi + (a.qgamma + b.qgamma) * (0.5 * h * inv_eps);
          q_next = scaled_penalty(domain, scheme.cap_delta, next);
        }
        if (std::abs(q_next - a.q) > 0.5 * scheme.cap_delta) stiff = true;
        out.max_q = std::max(out.max_q, q_next);
        y = next;
      }
      if (!stiff) {
        xi = y;
        l_int = li;
        push_int = pi;
        break;
      }
      if (refine >= 8) fail(ErrorCode::StiffnessFailure, "penalty increment stays above cap/2");
      n_sub *= 2;
    }
    out.xi.push_back(xi);
    out.l_avg.push_back(l_int / span);
    out.push_avg.push_back(push_int / span);
  }
  const double vmax = input.max_norm();
  out.excursion_K = vmax > 0.0 ? out.max_q / (scheme.epsilon * vmax) : 0.0;
  return out;
}

SkorokhodTriple extract_triple(const ImplicitDomain& domain, const ObliqueField& field,
                               const PenaltyScheme& scheme, const RawPath& raw,
                               const InputSignal& input) {
  (void)field;
  require(raw.xi.size() == input.t.size(), "raw path does not match the input grid");
  SkorokhodTriple tr;
  tr.t = raw.t;
  tr.epsilon = scheme.epsilon;
  tr.l_interval = raw.l_avg;
  tr.push = raw.push_avg;
  const std::size_t n = raw.xi.size();
  tr.eta.resize(n);
  tr.l.resize(n);
  tr.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    tr.eta[i] = project_to_closure(domain, raw.xi[i]);
    tr.l[i] = scaled_penalty(domain, scheme.cap_delta, raw.xi[i]) / scheme.epsilon;
    tr.v[i] = input.v[std::min(i, input.v.size() - 1)];
  }

  double vmax = input.max_norm();
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    tr.max_constraint_violation =
        std::max(tr.max_constraint_violation, std::max(0.0, domain.psi(tr.eta[i]) / domain.rho0()));
    tr.max_complementarity =
        std::max(tr.max_complementarity,
                 tr.l[i] * std::max(0.0, -domain.psi(tr.eta[i]) - domain.boundary_tol()));
    worst = std::max(worst, tr.l[i]);
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dt = tr.t[i + 1] - tr.t[i];
    const Vec2 rate = (tr.eta[i + 1] - tr.eta[i]) / dt;
    tr.max_ode_residual = std::max(tr.max_ode_residual, norm(rate + tr.push[i] - input.v[i]));
    worst = std::max({worst, norm(rate), tr.l_interval[i]});
  }
  tr.bound_ratio = vmax > 0.0 ? worst / vmax : 0.0;
  return tr;
}

namespace {

double sup_diff(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, dist(a[i], b[i]));
  return d;
}

}  // namespace

ReflectedResult solve_reflected(const ImplicitDomain& domain, const ObliqueField& field,
                                const Vec2& x0, const InputSignal& input_in,
                                ReflectedOptions options) {
  require(options.tol > 0.0, "solve_reflected tolerance must be positive");
  const InputSignal input = options.clip > 0.0 ? clip_input(input_in, options.clip) : input_in;
  const double T = input.horizon();
  const double base = options.h_ode > 0.0 ? options.h_ode : T / 4096.0;
  const double vmax = input.max_norm();
  const double cap = domain.band() / domain.rho0();

  // Keep the stationary penalty level q = ε|v|/(ν·γ) well inside the clamp.
  double eps0 = 10.0 * base;
  if (vmax > 0.0) {
    const double margin = std::max(field.delta0(), 1e-3);
    eps0 = std::min(eps0, 0.25 * cap * margin / vmax);
  }

  double min_span = T;
  for (std::size_t i = 0; i + 1 < input.t.size(); ++i) min_span = std::min(min_span, input.t[i + 1] - input.t[i]);

  ReflectedResult res;
  std::vector<Vec2> prev_eta;
  double prev_diff = -1.0;
  int slow = 0;
  for (int k = 0; k <= options.max_halvings; ++k) {
    const double eps = eps0 / std::ldexp(1.0, k);
    const PenaltyScheme scheme = make_scheme(domain, eps, base);
    const RawPath raw = solve_penalized(domain, field, scheme, x0, input);
    SkorokhodTriple tr = extract_triple(domain, field, scheme, raw, input);
    res.epsilons.push_back(eps);
    res.excursion_K = std::max(res.excursion_K, raw.excursion_K);
    if (k > 0) {
      const double d = sup_diff(tr.eta, prev_eta);
      res.sup_diffs.push_back(d);
      if (prev_diff >= 0.0) {
        // Differences far below tol are settled, not stalled.
        const double floor = 1e-3 * options.tol;
        const double ratio = (d < floor) ? 0.0 : (prev_diff < floor ? 1.0 : d / prev_diff);
        res.ratios.push_back(ratio);
        slow = ratio > options.contraction ? slow + 1 : 0;
        if (slow >= 3) {
          fail(ErrorCode::NoConvergence, "epsilon halving stopped contracting (ratio " +
                                             std::to_string(ratio) + ")");
        }
      }
      prev_diff = d;
      if (k >= options.min_halvings && d < options.tol && eps <= options.layer_ratio * min_span) {
        res.triple = std::move(tr);
        return res;
      }
    }
    prev_eta = tr.eta;
    res.triple = std::move(tr);
  }
  fail(ErrorCode::NoConvergence, "no agreement within tol after " +
                                     std::to_string(options.max_halvings) + " halvings");
}

TripleTolerances default_tolerances(const SkorokhodTriple& triple) {
  double vmax = 0.0;
  for (const Vec2& v : triple.v) vmax = std::max(vmax, norm(v));
  TripleTolerances t;
  t.geo = 10.0 * triple.epsilon;
  t.comp = 0.05 * vmax + 1e-9;
  t.ode = 0.05 * vmax + 1e-9;
  return t;
}

bool TripleReport::all_pass() const {
  return std::all_of(clauses.begin(), clauses.end(), [](const Clause& c) { return c.pass; });
}

const Clause& TripleReport::clause(const std::string& name) const {
  for (const Clause& c : clauses)
    if (c.name == name) return c;
  fail(ErrorCode::InvalidArgument, "no clause named " + name);
}

TripleReport validate_triple(const ImplicitDomain& domain, const ObliqueField& field,
                             const SkorokhodTriple& tr, const TripleTolerances& tol) {
  const std::size_t n = tr.eta.size();
  require(tr.t.size() == n && tr.l.size() == n && tr.v.size() == n, "triple fields differ in length");
  Clause member{"membership"}, sign{"l_nonnegative"}, comp{"complementarity"}, ode{"ode_residual"},
      bound{"a_priori_bound"};
  auto track = [](Clause& c, double value, int i) {
    if (c.witness < 0 || value > c.worst) {
      c.worst = value;
      c.witness = i;
    }
  };
  double vmax = 0.0, peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int ii = static_cast<int>(i);
    const double psi = domain.psi(tr.eta[i]);
    track(member, psi / domain.rho0(), ii);
    track(sign, -tr.l[i], ii);
    track(comp, tr.l[i] * std::max(0.0, -psi - domain.boundary_tol()), ii);
    vmax = std::max(vmax, norm(tr.v[i]));
    peak = std::max(peak, tr.l[i]);
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double dt = tr.t[i + 1] - tr.t[i];
    const Vec2 rate = (tr.eta[i + 1] - tr.eta[i]) / dt;
    Vec2 push;
    if (tr.push.size() == n - 1) {
      push = tr.push[i];
    } else {
      push = (field.gamma(tr.eta[i]) * tr.l[i] + field.gamma(tr.eta[i + 1]) * tr.l[i + 1]) * 0.5;
    }
    track(ode, norm(rate + push - tr.v[i]), static_cast<int>(i));
    peak = std::max(peak, norm(rate));
    if (tr.l_interval.size() == n - 1) peak = std::max(peak, tr.l_interval[i]);
  }
  member.pass = member.worst <= tol.geo;
  sign.pass = sign.worst <= 1e-12;
  comp.pass = comp.worst <= tol.comp;
  ode.pass = ode.worst <= tol.ode;
  const double allowed = tol.bound_factor * (1.0 + field.gamma_sup() / field.delta0());
  bound.worst = vmax > 0.0 ? peak / vmax : 0.0;
  bound.pass = vmax > 0.0 ? bound.worst <= allowed : peak <= 1e-12;
  TripleReport rep;
  rep.clauses = {member, sign, comp, ode, bound};
  return rep;
}

ReflectStep reflect_step(const ImplicitDomain& domain, const ObliqueField& field, const Vec2& x,
                         const Vec2& displacement) {
  Vec2 z = x + displacement;
  double val = domain.psi(z);
  if (val <= 0.0) return {z, 0.0};
  double s = 0.0;
  for (int it = 0; it < 60; ++it) {
    if (val <= domain.boundary_tol() && val >= -domain.boundary_tol()) return {z, s};
    const Vec2 gam = field.gamma(z);
    const double slope = dot(domain.grad_psi(z), gam);
    if (!(slope > 0.0)) {
      fail(ErrorCode::ObliquenessViolated, "reflection direction is tangent to the level set");
    }
    const double ds = val / slope;
    z = z - gam * ds;
    s += ds;
    val = domain.psi(z);
  }
  if (val <= domain.boundary_tol()) return {z, s};
  fail(ErrorCode::ProjectionDiverged, "reflected substep did not reach the boundary");
}

}  // namespace wkam
