#pragma once

// Implicit domains Ω = {ψ < 0} ∩ box in one or two dimensions, the oblique
// reflection field γ with Neumann data g, and the geometric primitives used by
// the reflected dynamics and the grids.

#include <functional>
#include <string>
#include <vector>

#include "wkam/expr.hpp"
#include "wkam/vec.hpp"

namespace wkam {

using ScalarField = std::function<double(const Vec2&)>;
using VectorField = std::function<Vec2(const Vec2&)>;

struct Box {
  Vec2 lo;
  Vec2 hi;

  bool contains(const Vec2& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
  }
  Vec2 center() const { return (lo + hi) * 0.5; }
};

class ImplicitDomain {
 public:
  struct Options {
    double boundary_tol_rel = 1e-8;  // ε_Γ as a fraction of the diameter
    double band_rel = 0.05;          // δ_band as a fraction of the diameter
    int rho_samples = 200;           // per axis, for the ρ₀ estimate
  };

  // `diameter` is the diameter of Ω̄ (not of the box). Throws InvalidDomain when
  // the sampled invariants fail.
  ImplicitDomain(ScalarField psi, VectorField grad_psi, int dim, Box box, double diameter,
                 std::string description, Options options);
  ImplicitDomain(ScalarField psi, VectorField grad_psi, int dim, Box box, double diameter,
                 std::string description)
      : ImplicitDomain(std::move(psi), std::move(grad_psi), dim, box, diameter,
                       std::move(description), Options{}) {}

  double psi(const Vec2& x) const { return psi_(x); }
  Vec2 grad_psi(const Vec2& x) const { return grad_psi_(x); }
  // ∇ψ/|∇ψ| without any boundary check; defined wherever ∇ψ ≠ 0.
  Vec2 normal_field(const Vec2& x) const { return unit(grad_psi_(x)); }

  int dim() const { return dim_; }
  const Box& bounding_box() const { return box_; }
  double diameter() const { return diameter_; }
  double boundary_tol() const { return boundary_tol_; }
  double band() const { return band_; }
  double rho0() const { return rho0_; }
  const std::string& description() const { return description_; }

  bool in_closure(const Vec2& x) const { return psi_(x) <= boundary_tol_; }
  bool on_boundary(const Vec2& x) const { return std::abs(psi_(x)) <= boundary_tol_; }

 private:
  ScalarField psi_;
  VectorField grad_psi_;
  int dim_;
  Box box_;
  double diameter_;
  std::string description_;
  double boundary_tol_;
  double band_;
  double rho0_ = 0.0;
};

// Built-in families. The 1-D interval lives on the x axis (y == 0).
ImplicitDomain make_disk(Vec2 center, double radius);
ImplicitDomain make_ellipse(Vec2 center, double semi_x, double semi_y);
// Superellipse (|x/a|^p + |y/b|^p)^(1/p) - 1, a C¹ rounding of the rectangle.
ImplicitDomain make_smoothed_rectangle(Vec2 center, double half_x, double half_y, double exponent = 8.0);
ImplicitDomain make_interval(double lo, double hi);
// User-supplied ψ; the gradient is taken by central differences.
ImplicitDomain make_expression_domain(const Expr& psi, Box omega_box, int dim);

class ObliqueField {
 public:
  ObliqueField(VectorField gamma, ScalarField g, const ImplicitDomain& domain,
               std::string description, int samples = 256);

  Vec2 gamma(const Vec2& x) const { return gamma_(x); }
  double g(const Vec2& x) const { return g_(x); }
  double delta0() const { return delta0_; }
  double gamma_sup() const { return gamma_sup_; }
  double g_sup() const { return g_sup_; }
  const std::string& description() const { return description_; }

 private:
  VectorField gamma_;
  ScalarField g_;
  std::string description_;
  double delta0_ = 0.0;
  double gamma_sup_ = 0.0;
  double g_sup_ = 0.0;
};

// γ = ν rotated by `angle_deg` (|angle| < 90). In 1-D only angle 0 is meaningful.
ObliqueField make_rotated_normal(const ImplicitDomain& domain, double angle_deg, ScalarField g);
// Same field without the angle guard; validate_obliqueness reports the failure.
ObliqueField rotated_normal_field(const ImplicitDomain& domain, double angle_deg, ScalarField g);

Vec2 outward_normal(const ImplicitDomain& domain, const Vec2& x);
double penalty_q(const ImplicitDomain& domain, double cap, const Vec2& x);
Vec2 project_to_closure(const ImplicitDomain& domain, const Vec2& x);

// Points of Γ found by sign changes of ψ on a background lattice, thinned to
// at most `count` points spread along the list.
std::vector<Vec2> sample_boundary(const ImplicitDomain& domain, int count);

struct ObliquenessReport {
  double margin;  // min over sampled Γ of ν·γ
  Vec2 witness;   // where the minimum is attained
  int samples;
};

// Throws ObliquenessViolated (with the witness in the message) if margin <= 0.
ObliquenessReport validate_obliqueness(const ImplicitDomain& domain, const ObliqueField& field,
                                       int samples);

}  // namespace wkam
