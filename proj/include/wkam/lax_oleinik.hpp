#pragma once

// Semi-Lagrangian solver for u_t + H(x, Du) = a with the oblique condition
// D_γ u = g, through the value function
//   w(x, t) = inf ∫₀ᵗ (L(η, −v) + a + g(η) l) ds + u₀(η(t))
// discretized one step at a time over a finite control set.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "wkam/geometry.hpp"
#include "wkam/grid.hpp"
#include "wkam/hamiltonian.hpp"
#include "wkam/kernels.hpp"
#include "wkam/skorokhod.hpp"

namespace wkam {

struct ControlSet {
  std::vector<Vec2> controls;  // controls[0] is ξ = 0; the rest sorted by speed
  double bound = 0.0;          // C_ctl

  static ControlSet polar(int dim, double bound, int n_angle = 32, int n_speed = 16,
                          double min_speed_ratio = 1.0 / 64.0);
};

struct SolverOptions {
  double dt = 0.0;         // 0 means h / (2 C_ctl + 1)
  double courant = 0.0;    // when > 0 and dt == 0, dt = courant · h / C_ctl
  double R = 0.0;          // gradient scale for the control bound; 0 means 1
  int n_angle = 32;
  int n_speed = 16;
  double min_speed_ratio = 1.0 / 64.0;
  bool retain_policy = false;
  bool check_control_bound = true;  // recompute the a priori bound every step
};

struct Transition {
  double cost;  // dt·(L(x, −ξ) + a) + g(foot)·push
  Stencil stencil;
  int control;  // index into the control set
  Vec2 foot;
  double push;
};

struct StepStats {
  double max_control_norm = 0.0;   // largest |ξ| among the argmins
  double control_bound_now = 0.0;  // control_bound at the current discrete Lipschitz ratio
};

class TimeField;

class CauchySolver : public std::enable_shared_from_this<CauchySolver> {
 public:
  static std::shared_ptr<const CauchySolver> create(HamiltonianModel model, ObliqueField field,
                                                    std::shared_ptr<const Grid> grid,
                                                    SolverOptions options = {});

  const HamiltonianModel& model() const { return model_; }
  const ObliqueField& field() const { return field_; }
  const Grid& grid() const { return *grid_; }
  std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
  const ControlSet& controls() const { return controls_; }
  const SolverOptions& options() const { return options_; }
  double dt() const { return dt_; }
  double R() const { return R_; }

  // Candidate moves of node i, or of an arbitrary point of Ω̄.
  std::vector<Transition> transitions(int node) const;
  std::vector<Transition> transitions_at(const Vec2& x) const;
  Transition transition_at(const Vec2& x, int control) const;

  // One dynamic-programming step. argmin (optional) receives the index of the
  // winning transition of each node.
  StepStats step(std::span<const double> w_now, std::span<double> w_next,
                 std::span<std::int32_t> argmin = {}) const;

  // Iterates `steps` steps; observer(k, w_k) sees every slice, k = 0..steps.
  void run(std::span<const double> u0, int steps,
           const std::function<void(int, std::span<const double>)>& observer) const;

  TimeField solve(std::span<const double> u0, double T) const;

  // Same problem with another time step / policy flag.
  std::shared_ptr<const CauchySolver> with_dt(double dt) const;
  std::shared_ptr<const CauchySolver> with_policy(bool retain) const;

  // k-th candidate move of a node (the index stored in a policy), rebuilt on demand.
  Transition node_transition(int node, int k) const;
  int node_transition_count(int node) const;
  // Control index of the k-th candidate move of a node.
  int node_control(int node, int k) const { return control_of_[offset_[node] + k]; }

 private:
  CauchySolver(HamiltonianModel model, ObliqueField field, std::shared_ptr<const Grid> grid,
               SolverOptions options);
  void build_tables();

  HamiltonianModel model_;
  ObliqueField field_;
  std::shared_ptr<const Grid> grid_;
  SolverOptions options_;
  ControlSet controls_;
  double dt_ = 0.0;
  double R_ = 1.0;
  std::vector<Vec2> bound_samples_;

  // Per-node candidate tables in structure-of-arrays form.
  std::vector<std::size_t> offset_;
  std::vector<double> cost_, w1_, w2_, w3_;
  std::vector<std::int32_t> i0_, i1_, i2_, i3_;
  std::vector<std::int32_t> control_of_;
};

struct BarrierReport {
  double upper_constant = 0.0;  // C with w ≤ u₀ + C t
  double upper_defect = 0.0;    // max(w − u₀ − C t), ≤ 0 for an exact scheme
  double lower_constant = 0.0;  // C_K with w ≥ u₀ − C_K t
  double lower_defect = 0.0;    // max(u₀ − C_K t − w)
  double lipschitz_u0 = 0.0;
};

class TimeField {
 public:
  TimeField(std::shared_ptr<const CauchySolver> solver, std::vector<std::vector<double>> slices,
            std::vector<std::vector<std::int32_t>> policy, std::vector<StepStats> stats);

  const CauchySolver& solver() const { return *solver_; }
  std::shared_ptr<const CauchySolver> solver_ptr() const { return solver_; }
  const Grid& grid() const { return solver_->grid(); }
  double dt() const { return solver_->dt(); }
  double level() const { return solver_->model().shift_a(); }
  int steps() const { return static_cast<int>(slices_.size()) - 1; }
  double horizon() const { return steps() * dt(); }
  std::span<const double> slice(int k) const { return slices_[k]; }
  std::span<const double> initial() const { return slices_.front(); }
  std::span<const double> final() const { return slices_.back(); }
  bool has_policy() const { return !policy_.empty(); }
  // Index of the winning transition of `node` in step k (producing slice k).
  std::int32_t policy(int k, int node) const { return policy_[k - 1][node]; }
  const std::vector<StepStats>& stats() const { return stats_; }
  // Every argmin |ξ| within the control bound of the
  // current discrete gradient scale.
  bool control_bound_respected() const;

  double value(const Vec2& x, int k) const { return grid().interpolate(slices_[k], x); }

  BarrierReport barriers() const;
  double lipschitz_ratio(int k) const { return grid().lipschitz_ratio(slices_[k]); }

 private:
  std::shared_ptr<const CauchySolver> solver_;
  std::vector<std::vector<double>> slices_;
  std::vector<std::vector<std::int32_t>> policy_;
  std::vector<StepStats> stats_;
};

// Single step with a freshly built solver.
std::vector<double> step(const HamiltonianModel& model, const ObliqueField& field,
                         std::shared_ptr<const Grid> grid, std::span<const double> w_now,
                         double dt);

TimeField solve_cauchy(const HamiltonianModel& model, const ObliqueField& field,
                       std::shared_ptr<const Grid> grid, std::span<const double> u0, double T,
                       SolverOptions options = {});

struct DppReport {
  double max_defect = 0.0;
  int witness = -1;
  bool pass = false;
};

// Compares slice s + t with a re-solve from slice s over duration t. With
// resolve_dt = 0 the re-solve reuses the field's time step.
DppReport check_dpp(const TimeField& field, double s, double t, double tol, double resolve_dt = 0.0);

// Samples an expression on the grid nodes.
std::vector<double> sample_on_grid(const Grid& grid, const std::function<double(const Vec2&)>& f);

}  // namespace wkam
