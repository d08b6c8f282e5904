#pragma once

// Nodes of Ω̄: lattice points (i·h, j·h) inside the domain plus boundary nodes
// obtained by snapping exterior lattice neighbours onto Γ. Interpolation is
// bilinear in full cells and barycentric on cut cells; weights are always
// nonnegative so interpolation is monotone.

#include <array>
#include <span>
#include <vector>

#include "wkam/geometry.hpp"
#include "wkam/vec.hpp"

namespace wkam {

// Interpolation stencil: value = u[idx[0]] + Σ_{k≥1} w[k]·(u[idx[k]] − u[idx[0]]).
// Unused slots repeat idx[0] with zero weight. w[0] is the implied weight.
struct Stencil {
  std::array<int, 4> idx{-1, -1, -1, -1};
  std::array<double, 4> w{0.0, 0.0, 0.0, 0.0};

  template <class Values>
  double apply(const Values& u) const {
    const double u0 = u[idx[0]];
    return u0 + ((w[1] * (u[idx[1]] - u0) + w[2] * (u[idx[2]] - u0)) + w[3] * (u[idx[3]] - u0));
  }
};

class Grid {
 public:
  Grid(const ImplicitDomain& domain, double h);

  double h() const { return h_; }
  int dim() const { return domain_.dim(); }
  int size() const { return static_cast<int>(nodes_.size()); }
  const Vec2& node(int i) const { return nodes_[i]; }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  bool is_boundary(int i) const { return boundary_[i] != 0; }
  int boundary_count() const;
  const ImplicitDomain& domain() const { return domain_; }

  Stencil locate(const Vec2& p) const;
  double interpolate(std::span<const double> values, const Vec2& p) const;

  int nearest(const Vec2& p) const;
  std::vector<int> nodes_within(const Vec2& p, double radius) const;
  // Nodes within 1.5 h of node i (excluding i), sorted by angle around it.
  const std::vector<int>& ring(int i) const { return rings_[i]; }

  // max |u_i − u_j| / |x_i − x_j| over ring pairs.
  double lipschitz_ratio(std::span<const double> u) const;

 private:
  ImplicitDomain domain_;
  double h_;
  int ilo_ = 0, jlo_ = 0, nx_ = 0, ny_ = 0;
  std::vector<Vec2> nodes_;
  std::vector<char> boundary_;
  std::vector<int> lattice_node_;  // node at lattice point, or -1
  std::vector<int> snapped_;       // node standing in for an exterior lattice point, or -1
  std::vector<std::vector<int>> buckets_;  // nodes per lattice cell
  std::vector<std::vector<int>> rings_;
  std::vector<int> sorted_1d_;     // node indices by x (1-D only)

  int lattice_id(int i, int j) const { return (j - jlo_) * nx_ + (i - ilo_); }
  bool lattice_valid(int i, int j) const {
    return i >= ilo_ && i < ilo_ + nx_ && j >= jlo_ && j < jlo_ + ny_;
  }
  Vec2 lattice_point(int i, int j) const { return {i * h_, j * h_}; }
  int bucket_of(const Vec2& p) const;
  Stencil locate_cut(const Vec2& p, int ci, int cj) const;
  Stencil locate_1d(const Vec2& p) const;
};

}  // namespace wkam
