#pragma once

// Brute-force fixed point of the stationary problem at a given level, on a
// lattice finer than the main grid. It shares no code with the semi-Lagrangian
// step or the action graph: moves of length ρ in 64 directions, the time of a
// move chosen by golden-section search, bilinear interpolation, and a plain
// nearest-point projection at the boundary that charges g times the pushed
// distance.

#include <span>
#include <vector>

#include "wkam/geometry.hpp"
#include "wkam/hamiltonian.hpp"

namespace wkam {

struct OracleOptions {
  int refine = 4;           // lattice spacing = h / refine
  int directions = 64;      // 2-D only; 1-D uses ±1
  int max_sweeps = 4000;
  double tol = 1e-12;       // stop when a sweep changes nothing by more than tol·(1 + max|u|)
  int speed_iterations = 48;
};

class OracleField {
 public:
  double spacing() const { return ho_; }
  int sweeps() const { return sweeps_; }
  int points() const { return static_cast<int>(inside_count_); }
  // Bilinear interpolation; exterior corners borrow the nearest inside value.
  double value(const Vec2& x) const;

 private:
  friend OracleField oracle_value_iteration(const HamiltonianModel&, const ObliqueField&,
                                            const ImplicitDomain&, double, double,
                                            std::span<const Vec2>, std::span<const double>,
                                            OracleOptions);
  double ho_ = 0.0;
  int ilo_ = 0, jlo_ = 0, nx_ = 0, ny_ = 0;
  int dim_ = 2;
  std::vector<double> u_;
  std::vector<int> substitute_;  // inside index to use for each lattice point, or −1
  std::size_t inside_count_ = 0;
  int sweeps_ = 0;
  int corner(int i, int j) const;
};

// Fixed point of u(x) = min_e [cost(x → x + ρe) + u(x + ρe)] with u pinned to
// the given values at the lattice points nearest to `anchors`. Throws
// NotConverged when the sweeps do not settle or a point stays unreached.
OracleField oracle_value_iteration(const HamiltonianModel& model, const ObliqueField& field,
                                   const ImplicitDomain& domain, double h, double level,
                                   std::span<const Vec2> anchors,
                                   std::span<const double> anchor_values,
                                   OracleOptions options = {});

}  // namespace wkam
