#pragma once

// Minimizing and calibrated reflected trajectories traced through the stored
// argmins of the semi-Lagrangian solver, and two-sided curves on the Aubry set
// built from cheap loops of the action graph.

#include <span>
#include <vector>

#include "wkam/lax_oleinik.hpp"
#include "wkam/skorokhod.hpp"
#include "wkam/weak_kam.hpp"

namespace wkam {

struct TracedPath {
  SkorokhodTriple triple;         // forward in time: η(0) = x
  std::vector<double> step_cost;  // action of each step
  double action = 0.0;
  double payoff = 0.0;  // u₀(η(t))
  double value = 0.0;   // w(x, t)
  double defect = 0.0;  // |action + payoff − value|
  double bound = 0.0;   // (h + dt) · t / dt
};

// Backward tracing of w(x, t) from slice round(t / dt) down to slice 0. At each
// step the candidates are ξ = 0 and the stored argmin controls of the nodes of
// the current stencil; ties go to the smaller |ξ|, then the lower node index.
// Throws MissingPolicy when the field was solved without retain_policy.
TracedPath attained_minimizer(const TimeField& field, const Vec2& x, double t);

struct CalibrationOptions {
  double window = 0.0;  // 0 means diameter / C_ctl
  double tol = 0.0;     // 0 means 5 (h + dt)
  SolverOptions solver;
};

struct CalibratedCurve {
  SkorokhodTriple triple;
  std::vector<double> window_start;   // times t_k
  std::vector<double> window_action;  // action over [t_k, t_{k+1}]
  // φ(η(t_k)) − φ(η(t_{k+1})) − action; calibration means these vanish.
  std::vector<double> window_defect;
  double total_defect = 0.0;  // φ(η(0)) − φ(η(T)) − total action
  double tol = 0.0;
  double window = 0.0;
  double max_speed = 0.0;       // ‖v‖∞ along the curve
  double lipschitz_phi = 0.0;
  double speed_bound = 0.0;     // control_bound at the measured Lip(φ)
  double max_abs_defect() const;
};

// Concatenates minimizers of the Cauchy problem at level c with terminal data φ
// over windows of fixed length. Throws CalibrationLost when a window defect
// exceeds 10 · tol.
CalibratedCurve calibrated_extremal(const HamiltonianModel& model, const ObliqueField& field,
                                    std::shared_ptr<const Grid> grid, std::span<const double> phi,
                                    double c, const Vec2& x, double T,
                                    CalibrationOptions options = {});

struct AubryApproach {
  std::vector<double> t;
  std::vector<double> distance;  // dist(η(t), A_h)
  double tail_late = 0.0;        // max over [T/2, T]
  double tail_mid = 0.0;         // max over [T/4, T/2]
  bool pass = false;             // tail_late ≤ max(2h, tail_mid)
};

AubryApproach aubry_convergence(const CalibratedCurve& curve, const AubryResult& aubry,
                                const Grid& grid);

struct TwoSidedCurve {
  std::vector<double> t;      // knots from −T to T
  std::vector<int> nodes;     // node at each knot
  std::vector<double> cost;   // action of each segment [t_k, t_{k+1}]
  std::vector<int> loop_of;   // loop index of each segment
  double loop_cost = 0.0;
  double loop_duration = 0.0;
  int loops = 0;
};

// Repeats the cheapest loop through y (a rest when that is cheapest) over
// [−T, T]. Throws NoCheapLoop when r(y) exceeds the Aubry tolerance.
TwoSidedCurve two_sided_extremal(const ActionGraph& graph, const ManePotential& d,
                                 const AubryResult& aubry, int y, double T);

// max over knot pairs σ < τ of (action over [σ, τ] − d(η(σ), η(τ))) / loops touched.
double two_sided_consistency(const TwoSidedCurve& curve, const ManePotential& d);

}  // namespace wkam
