#pragma once

// Reflected dynamics η̇ + l·γ(η) = v in Ω̄, l ≥ 0 and l = 0 off the boundary,
// solved by penalization: ξ̇ = v − (1/ε) q(ξ) γ(ξ) with q the clamped, rescaled
// defining function, and l recovered as q(ξ)/ε.

#include <functional>
#include <string>
#include <vector>

#include "wkam/geometry.hpp"
#include "wkam/vec.hpp"

namespace wkam {

// Piecewise-constant input: v[i] acts on [t[i], t[i+1]). t[0] = 0 and the
// grid is uniform; v has t.size() - 1 entries.
struct InputSignal {
  std::vector<double> t;
  std::vector<Vec2> v;

  double horizon() const { return t.back(); }
  std::size_t intervals() const { return v.size(); }
  double max_norm() const;
};

InputSignal constant_input(Vec2 v, double T, int steps);
// v[i] = f(midpoint of interval i).
InputSignal sampled_input(const std::function<Vec2(double)>& f, double T, int steps);
// Radial clipping |v| ≤ k, the truncation used to reduce unbounded inputs to bounded ones.
InputSignal clip_input(const InputSignal& input, double k);

struct PenaltyScheme {
  double epsilon;
  double cap_delta;  // clamp level of the rescaled q
  double h_ode;
  int method = 2;    // 1 explicit Euler, 2 Heun
};

// cap_delta from the boundary band, h_ode = min(h_ode, ε/10).
PenaltyScheme make_scheme(const ImplicitDomain& domain, double epsilon, double h_ode, int method = 2);

// min(max(ψ(x)/ρ₀, 0), cap): ψ rescaled so its slope on Γ is at least 1.
double scaled_penalty(const ImplicitDomain& domain, double cap, const Vec2& x);

struct RawPath {
  std::vector<double> t;
  std::vector<Vec2> xi;          // ξ_ε(t_i)
  std::vector<double> l_avg;     // per interval: (1/Δt)∫ q/ε
  std::vector<Vec2> push_avg;    // per interval: (1/Δt)∫ (q/ε) γ
  double epsilon = 0.0;
  double max_q = 0.0;            // largest q seen during integration
  double excursion_K = 0.0;      // max_q / (ε ‖v‖∞); 0 when v ≡ 0
};

RawPath solve_penalized(const ImplicitDomain& domain, const ObliqueField& field,
                        const PenaltyScheme& scheme, const Vec2& x0, const InputSignal& input);

struct SkorokhodTriple {
  std::vector<double> t;
  std::vector<Vec2> eta;
  std::vector<Vec2> v;            // per sample; the last sample repeats the last interval
  std::vector<double> l;          // pointwise q(ξ_ε)/ε
  std::vector<double> l_interval; // per-interval time averages (may be empty)
  std::vector<Vec2> push;         // per-interval averages of l·γ (may be empty)
  double epsilon = 0.0;

  double max_ode_residual = 0.0;
  double max_constraint_violation = 0.0;
  double max_complementarity = 0.0;
  double bound_ratio = 0.0;       // max_i (|Δη/Δt| ∨ l) / max_i |v|
};

SkorokhodTriple extract_triple(const ImplicitDomain& domain, const ObliqueField& field,
                               const PenaltyScheme& scheme, const RawPath& raw,
                               const InputSignal& input);

struct ReflectedOptions {
  double tol = 1e-3;        // sup-norm gap between successive ε runs
  double h_ode = 0.0;       // 0 means T/4096
  double clip = 0.0;        // 0 means no clipping
  int min_halvings = 3;
  int max_halvings = 12;
  double contraction = 0.8;
  // The last ε must also be at most this fraction of the shortest sample
  // interval, so the O(ε) start-up layer of l fits inside one interval.
  double layer_ratio = 0.02;
};

struct ReflectedResult {
  SkorokhodTriple triple;
  std::vector<double> epsilons;
  std::vector<double> sup_diffs;  // ‖η_k − η_{k−1}‖∞, one per halving
  std::vector<double> ratios;     // successive sup_diff ratios (0 when both are negligible)
  double excursion_K = 0.0;
};

// Halves ε until successive paths agree within tol and ε is below
// layer_ratio times the sample spacing. Throws NoConvergence when
// the gap fails to contract by `contraction` three halvings in a row, or when
// max_halvings is exceeded.
ReflectedResult solve_reflected(const ImplicitDomain& domain, const ObliqueField& field,
                                const Vec2& x0, const InputSignal& input,
                                ReflectedOptions options = {});

struct TripleTolerances {
  double geo = 1e-6;
  double comp = 1e-6;
  double ode = 1e-6;
  double bound_factor = 1.1;
};

// tol_geo = 10 ε, tol_comp = 0.05 ‖v‖∞, tol_ode = 0.05 ‖v‖∞ (plus a floor).
TripleTolerances default_tolerances(const SkorokhodTriple& triple);

struct Clause {
  std::string name;
  bool pass = true;
  double worst = 0.0;
  int witness = -1;  // sample index of the worst value
};

struct TripleReport {
  std::vector<Clause> clauses;
  bool all_pass() const;
  const Clause& clause(const std::string& name) const;
};

// Membership, sign of l, complementarity, ODE residual and the a priori bound.
TripleReport validate_triple(const ImplicitDomain& domain, const ObliqueField& field,
                             const SkorokhodTriple& triple, const TripleTolerances& tol);

struct ReflectStep {
  Vec2 foot;
  double push = 0.0;  // ∫ l over the substep
};

// One implicit reflected substep: the free point x + displacement, pulled back
// along γ onto Γ when it leaves Ω̄.
ReflectStep reflect_step(const ImplicitDomain& domain, const ObliqueField& field, const Vec2& x,
                         const Vec2& displacement);

}  // namespace wkam
