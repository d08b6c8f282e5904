#pragma once

// Critical value, Mañé potential, Aubry set and weak KAM solutions on a
// weighted directed graph over the grid nodes.
//
// Orientation: d[i][j] is the least action of a reflected curve that starts at
// node i and ends at node j, integrating L(η, −v) + g·l + a. With this
// convention every subsolution satisfies u(i) − u(j) ≤ d[i][j] and the
// representation formula reads u(x) = min_{y ∈ A} u(y) + d[x][y].

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "wkam/geometry.hpp"
#include "wkam/grid.hpp"
#include "wkam/hamiltonian.hpp"
#include "wkam/lax_oleinik.hpp"

namespace wkam {

struct ActionGraphOptions {
  // Edges reach nodes within radius_factor · h · max(1, sqrt(reference_h / h)).
  // The reach grows like sqrt(h) so the set of edge directions keeps refining
  // and the graph metric converges to the continuous one at rate O(h).
  double radius_factor = 2.3;
  double reference_h = 0.0;       // 0 means domain diameter / 40
  int n_tau = 32;                 // durations per edge
  double min_speed_ratio = 1e-3;  // slowest speed as a fraction of the fastest
  double speed = 0.0;             // fastest speed; 0 means control_bound(R = 1)
  int push_iterations = 40;       // golden-section steps for the boundary push
};

// Every edge carries a menu of durations τ_k with costs cost0_k (level 0); at
// level a its weight is min_k cost0_k + a τ_k, refined by a parabola in log τ
// through the best entry and its two neighbours.
class ActionGraph {
 public:
  static ActionGraph build(const HamiltonianModel& model, const ObliqueField& field,
                           std::shared_ptr<const Grid> grid, double level,
                           ActionGraphOptions options = {});

  const Grid& grid() const { return *grid_; }
  std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
  int size() const { return grid_->size(); }
  int edge_count() const { return static_cast<int>(target_.size()); }
  double speed() const { return speed_; }

  double level() const { return level_; }
  void set_level(double a);

  // Outgoing edges of node i are [out_begin(i), out_begin(i + 1)).
  int out_begin(int i) const { return out_offset_[i]; }
  int source(int e) const { return source_[e]; }
  int target(int e) const { return target_[e]; }
  double weight(int e) const { return weight_[e]; }
  double tau(int e) const { return tau_[e]; }
  double push(int e) const { return push_menu_[menu_offset_[e] + choice_[e]]; }
  std::span<const double> tau_menu(int e) const;
  std::span<const double> cost_menu(int e) const;

  // Incoming edges of node j: edge ids in_edge(k) for k in [in_begin(j), in_begin(j + 1)).
  int in_begin(int j) const { return in_offset_[j]; }
  int in_edge(int k) const { return in_edges_[k]; }

  // Running cost of resting at node i at level 0: min over l ≥ 0 of
  // L(x, −lγ) + g·l (l = 0 in the interior).
  double rest_rate(int i) const { return rest_rate_[i]; }
  double rest_push(int i) const { return rest_push_[i]; }
  double median_tau() const { return median_tau_; }

 private:
  std::shared_ptr<const Grid> grid_;
  double speed_ = 0.0;
  double level_ = 0.0;
  double median_tau_ = 0.0;
  std::vector<int> out_offset_, source_, target_;
  std::vector<int> in_offset_, in_edges_;
  std::vector<std::size_t> menu_offset_;
  std::vector<double> tau_menu_, cost_menu_, push_menu_;
  std::vector<double> weight_, tau_;
  std::vector<std::int32_t> choice_;
  std::vector<double> rest_rate_, rest_push_;
};

// Potentials from a virtual source (all nodes start at 0). Returns nullopt when
// a negative cycle (including a negative rest) exists at the graph's level.
std::optional<std::vector<double>> bellman_ford_potential(const ActionGraph& graph);

struct CriticalValue {
  double c_cycle = 0.0;
  double c_slope = std::numeric_limits<double>::quiet_NaN();
  double c = 0.0;  // adopted value (c_cycle)
  double gap = std::numeric_limits<double>::quiet_NaN();
  double bracket_lo = 0.0;  // negative cycle
  double bracket_hi = 0.0;  // no negative cycle
  double scale = 1.0;
  int iterations = 0;
  // −(Bellman-Ford potential) at bracket_hi: a discrete subsolution.
  std::vector<double> subsolution;
};

struct CycleOptions {
  double width = 1e-7;  // final bracket width relative to scale
  int max_iterations = 200;
};

// Bisection on the level by negative-cycle detection. The graph is left at
// level bracket_hi. Throws BracketFailure if no admissible bracket exists
// within 10 · scale.
CriticalValue critical_value_cycle(ActionGraph& graph, CycleOptions options = {});

struct SlopeOptions {
  double dt = 0.0;       // 0 means 2h / C_ctl
  double tol = 1e-2;     // allowed disagreement between the two window slopes
  SolverOptions solver;  // dt here is overridden by the field above
};

struct SlopeEstimate {
  double c = 0.0;
  double slope_early = 0.0;  // fit over [T/2, 3T/4]
  double slope_late = 0.0;   // fit over [3T/4, T]
  double horizon = 0.0;
  double dt = 0.0;
};

// c from the long-time growth of mean_x w(x, t) at a = 0 from u₀ ≡ 0. Throws
// SlopeNotConverged when the window slopes disagree by more than tol.
SlopeEstimate critical_value_slope(const HamiltonianModel& model, const ObliqueField& field,
                                   std::shared_ptr<const Grid> grid, double T,
                                   SlopeOptions options = {});

// Shortest paths at the graph's level. `forward` trees hold d[root][j] and the
// last edge into j; backward trees hold d[i][root] and the first edge out of i.
struct PathTree {
  int root = -1;
  bool forward = true;
  std::vector<double> dist;
  std::vector<int> edge;  // −1 at the root and at unreachable nodes
};

// `potential` (from bellman_ford_potential at the same level) enables Dijkstra.
PathTree shortest_from(const ActionGraph& graph, std::span<const double> potential, int source);
PathTree shortest_to(const ActionGraph& graph, std::span<const double> potential, int target);
// Node sequence of the tree path between the root and `node`, in travel order.
std::vector<int> tree_path(const ActionGraph& graph, const PathTree& tree, int node);

class ManePotential {
 public:
  ManePotential(double level, int n, std::vector<double> d, std::vector<double> potential)
      : level_(level), n_(n), d_(std::move(d)), potential_(std::move(potential)) {}

  double level() const { return level_; }
  int size() const { return n_; }
  // Least action from node i to node j.
  double operator()(int i, int j) const { return d_[static_cast<std::size_t>(i) * n_ + j]; }
  static constexpr bool cost_from_row_to_column = true;
  std::span<const double> row(int i) const {
    return {d_.data() + static_cast<std::size_t>(i) * n_, static_cast<std::size_t>(n_)};
  }
  // d(·, j) as a grid field.
  std::vector<double> column(int j) const;
  std::span<const double> bellman_ford_potential() const { return potential_; }
  double triangle_defect() const;

 private:
  double level_;
  int n_;
  std::vector<double> d_;
  std::vector<double> potential_;
};

// All pairs by Johnson reweighting. Throws NegativeCycleAtC if the graph has a
// negative cycle at its level, InvalidArgument above max_nodes.
ManePotential mane_potential(const ActionGraph& graph, int max_nodes = 8000);

struct AubryOptions {
  double tau_min = 0.0;  // 0 means 4 · median τ
  double tol = 0.0;      // 0 means τ_min · h² · (1 + ‖g‖∞) / 2
};

struct AubryResult {
  std::vector<double> residual;  // r(y)
  std::vector<int> partner;      // best loop partner z of y, or y itself for a rest loop
  std::vector<int> nodes;        // A_h
  std::vector<char> member;
  double tau_min = 0.0;
  double tol = 0.0;
  bool forced = false;  // threshold set was empty; A_h holds the argmin
  double min_residual = 0.0;

  bool contains(int node) const { return member[node] != 0; }
  double distance(const Grid& grid, const Vec2& x) const;
};

AubryResult aubry_detect(const ActionGraph& graph, const ManePotential& d,
                         const ObliqueField& field, AubryOptions options = {});

// u(x) = min_{y ∈ A} u(y) + d[x][y]. `u_on_A` is indexed like aubry.nodes.
// Throws IncompatibleTrace when u(y) − u(y') > d[y][y'] + tol.
std::vector<double> representation(std::span<const double> u_on_A, const AubryResult& aubry,
                                   const ManePotential& d, double tol = 1e-9);
// Restriction of a grid field to A_h, in the order of aubry.nodes.
std::vector<double> restrict_to_aubry(std::span<const double> u, const AubryResult& aubry);

struct UMinusOptions {
  double tol = 0.0;  // 0 means h
  SolverOptions solver;
};

// Running minimum of w(x, t) over t ∈ [T/2, T] for the problem at level c.
// Throws NotRelaxed when the minimum over [T/2, 3T/4] and over [T/2, T] differ
// by more than tol.
std::vector<double> u_minus(const HamiltonianModel& model, const ObliqueField& field,
                            std::shared_ptr<const Grid> grid, std::span<const double> u0, double c,
                            double T, UMinusOptions options = {});

}  // namespace wkam
