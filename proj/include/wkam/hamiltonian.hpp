#pragma once

// Convex, coercive Hamiltonians H(x, p), their Legendre transforms and the
// a priori bounds used to size control sets.

#include <functional>
#include <optional>
#include <span>
#include <string>

#include "wkam/expr.hpp"
#include "wkam/vec.hpp"

namespace wkam {

// A real number or +infinity. Min-type reductions treat infinity as absorbing
// for "no candidate"; never compare infinite values arithmetically.
class ExtReal {
 public:
  constexpr ExtReal() = default;
  constexpr ExtReal(double v) : value_(v) {}  // NOLINT(google-explicit-constructor)
  static constexpr ExtReal infinite() {
    ExtReal r;
    r.infinite_ = true;
    return r;
  }

  constexpr bool is_finite() const { return !infinite_; }
  constexpr bool is_infinite() const { return infinite_; }
  // Precondition: finite.
  double value() const;
  double value_or(double fallback) const { return infinite_ ? fallback : value_; }

  friend ExtReal operator+(ExtReal a, double b) {
    return a.infinite_ ? a : ExtReal(a.value_ + b);
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

class HamiltonianModel {
 public:
  using HFunc = std::function<double(const Vec2& x, const Vec2& p)>;
  using LFunc = std::function<ExtReal(const Vec2& x, const Vec2& xi)>;

  HamiltonianModel(HFunc H, std::optional<LFunc> analytic_L, double p_radius_hint, int dim,
                   std::string description);

  // H(x, p) - shift_a.
  double H(const Vec2& x, const Vec2& p) const { return H_(x, p) - shift_a_; }
  // Unshifted H.
  double H_raw(const Vec2& x, const Vec2& p) const { return H_(x, p); }
  bool has_analytic_L() const { return analytic_L_.has_value(); }
  // Exact L(x, xi) + shift_a. Precondition: has_analytic_L().
  ExtReal analytic_L(const Vec2& x, const Vec2& xi) const;

  double p_radius_hint() const { return p_radius_hint_; }
  double shift_a() const { return shift_a_; }
  int dim() const { return dim_; }
  const std::string& description() const { return description_; }

  // Same model solving H = a, i.e. with H replaced by H - a.
  HamiltonianModel shifted(double a) const;

 private:
  HFunc H_;
  std::optional<LFunc> analytic_L_;
  double p_radius_hint_;
  int dim_;
  std::string description_;
  double shift_a_ = 0.0;
};

// Built-in families. Each ships its closed-form Lagrangian.
HamiltonianModel make_kinetic(int dim);                        // ½|p|²
HamiltonianModel make_mechanical(const Expr& V, int dim);      // ½|p|² − V(x)
HamiltonianModel make_eikonal(const Expr& f, int dim);         // |p| − f(x)
// ½⟨M(x)p, p⟩ − V(x) with M = [[m11, m12], [m12, m22]] positive definite.
HamiltonianModel make_anisotropic(const Expr& m11, const Expr& m12, const Expr& m22,
                                  const Expr& V, int dim);
// Arbitrary H; L is computed numerically.
HamiltonianModel make_numeric(HamiltonianModel::HFunc H, int dim, double p_radius_hint,
                              std::string description);

// max over the discretized ball B(0, m) of xi·p − H(x, p), refined by coordinate
// ascent from the best sample.
double legendre_truncated(const HamiltonianModel& model, const Vec2& x, const Vec2& xi, double m);

struct LagrangianOptions {
  double tol = 1e-8;
  int max_doublings = 12;
};

// Analytic L when available; otherwise legendre_truncated with m doubling from
// p_radius_hint until successive values differ by < tol. Infinite when the
// value keeps growing.
ExtReal lagrangian(const HamiltonianModel& model, const Vec2& x, const Vec2& xi,
                   LagrangianOptions options = {});
ExtReal lagrangian_numeric(const HamiltonianModel& model, const Vec2& x, const Vec2& xi,
                           LagrangianOptions options = {});

// C = (2·C₁ + 1)/R with C₁ = max |H| over xs × B(0, 2R).
double control_bound(const HamiltonianModel& model, std::span<const Vec2> xs, double R);

// C_A = max H over xs × B(0, A), so that L(x, ξ) ≥ A|ξ| − C_A.
double lagrangian_lower_envelope(const HamiltonianModel& model, std::span<const Vec2> xs,
                                 double A);

struct ModelCheck {
  double convexity_defect = 0.0;  // worst H(mid) − average of the ends
  bool coercive = true;           // min_x H(x, R e) increased over every doubling
  double coercivity_growth = 0.0; // last min_x H(x, R e) minus the first
  bool ok() const { return convexity_defect <= 1e-9 && coercive; }
};

// Sampled convexity (midpoint) and coercivity checks over `xs`.
ModelCheck check_model(const HamiltonianModel& model, std::span<const Vec2> xs);

}  // namespace wkam
