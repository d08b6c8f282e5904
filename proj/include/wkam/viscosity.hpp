#pragma once

// Discrete viscosity sub/supersolution tests on grid functions, and the
// stability / comparison property suites built on them.
//
// Candidate gradients at a node are the least-squares gradient over its ring
// and the simplex gradients of consecutive ring pairs. The subsolution test
// keeps candidates that touch u from above on the ring (up to a curvature
// allowance κ|z − x|²), the supersolution test those that touch from below.

#include <span>
#include <vector>

#include "wkam/geometry.hpp"
#include "wkam/grid.hpp"
#include "wkam/hamiltonian.hpp"

namespace wkam {

struct ViscosityOptions {
  double curvature = -1.0;     // κ; negative means 2 (1 + Lip(u))
  std::vector<int> exclude;    // nodes skipped by the test
};

struct ViscosityReport {
  double defect = 0.0;   // worst violation (≤ 0 means every tested inequality holds)
  int witness = -1;      // node of the worst violation
  double tol = 0.0;
  bool pass = true;
  int tested_nodes = 0;  // nodes with at least one kept candidate
  int candidates = 0;
};

// scale · h · (1 + Lip(u))², the empirically calibrated slack of the tests.
// scale = 3 leaves about 40% headroom over the largest ratio measured on
// graph distances (about 2.15, oblique disk, h from 1/20 to 1/80).
double viscosity_tolerance(const Grid& grid, std::span<const double> u, double scale = 3.0);

ViscosityReport check_subsolution(const HamiltonianModel& model, const ObliqueField& field,
                                  const Grid& grid, std::span<const double> u, double a, double tol,
                                  const ViscosityOptions& options = {});
ViscosityReport check_supersolution(const HamiltonianModel& model, const ObliqueField& field,
                                    const Grid& grid, std::span<const double> u, double a,
                                    double tol, const ViscosityOptions& options = {});

// Gradient candidates at a node (exposed for diagnostics and tests).
std::vector<Vec2> gradient_candidates(const Grid& grid, std::span<const double> u, int node);

struct StabilityReport {
  ViscosityReport minimum;      // min(u1, u2)
  ViscosityReport combination;  // λ u1 + (1 − λ) u2
  bool pass() const { return minimum.pass && combination.pass; }
};

// Both inputs are expected to pass the subsolution test at level a; the derived
// functions are tested with tol + slack.
StabilityReport stability_suite(const HamiltonianModel& model, const ObliqueField& field,
                                const Grid& grid, std::span<const double> u1,
                                std::span<const double> u2, double a, double lambda, double tol,
                                double slack);

struct ComparisonReport {
  bool refused = false;          // a1 ≥ a2
  ViscosityReport sub;           // u at a1
  ViscosityReport super;         // v at a2
  double max_diff = 0.0;         // max (u − v)
  double min_diff = 0.0;
  double oscillation = 0.0;
  int argmax = -1;
  bool argmax_interior = false;
  bool constant_difference = false;  // oscillation ≤ tol
  // At argmax, with the candidates of u shared by both functions:
  // max over candidates p of max(H(p) − a1, a2 − H(p)) (boundary alternatives
  // included). Comparison forces this to be at least (a2 − a1)/2.
  double pair_defect = 0.0;
  double expected_pair_defect = 0.0;  // (a2 − a1)/2 − slack
  // True when the data are consistent with comparison: either one of the two
  // tests fails, or the pair defect reaches its forced lower bound.
  bool consistent = false;
};

ComparisonReport comparison_suite(const HamiltonianModel& model, const ObliqueField& field,
                                  const Grid& grid, std::span<const double> u_sub,
                                  std::span<const double> v_super, double a1, double a2, double tol);

}  // namespace wkam
