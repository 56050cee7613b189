#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mirrorflow/types.hpp"

namespace mirrorflow {

/// Open per-coordinate interval (lower, upper).
struct Interval {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  /// Points closer than this to a finite endpoint count as outside.
  static constexpr double kMargin = 1e-14;

  bool contains(double x) const { return x > lower + kMargin && x < upper - kMargin; }
};

/// Scalar building blocks of a separable potential F(w) = sum_i phi(w_i).
struct ScalarPotential {
  std::function<double(double)> value;         // phi
  std::function<double(double)> link;          // phi'
  std::function<double(double)> inv_link;      // (phi')^{-1}; NaN/inf outside the range of phi'
  std::function<double(double)> hessian;       // phi''
  std::function<double(double)> dual_hessian;  // (phi*)''(theta), closed form
  /// Optional per-coordinate divergence replacing phi(a) - phi(b) - phi'(b)(a - b).
  std::function<double(double, double)> divergence;
  Interval domain;
  /// Range of the link, i.e. where inv_link lands inside `domain`.
  Interval dual_domain;
  /// Divergence accepts a first argument equal to domain.lower.
  bool divergence_accepts_lower = false;
  /// The Bregman projection onto the unit simplex is plain L1 normalization.
  bool relative_entropy = false;
};

/// Strictly convex separable potential with its link, inverse link, and diagonal
/// Hessian. Immutable; copies share the underlying scalar functions.
class Potential {
 public:
  Potential(std::string name, ScalarPotential scalar);

  const std::string& name() const { return name_; }
  const Interval& domain() const { return s_->domain; }
  bool relative_entropy() const { return s_->relative_entropy; }
  const ScalarPotential& scalar() const { return *s_; }

  double value(const Vector& w) const;
  Vector link(const Vector& w) const;
  /// Elementwise inverse link; does not check that the result is inside the domain.
  Vector inv_link(const Vector& theta) const;
  Vector hessian_diag(const Vector& w) const;
  Vector inv_hessian_diag(const Vector& w) const;
  /// diag(H_{F*}(theta)) from the closed-form second derivative of the Fenchel dual.
  Vector dual_hessian_diag(const Vector& theta) const;

  bool is_interior(const Vector& w) const;
  /// Index of the first coordinate outside the domain, or -1.
  Index first_violation(const Vector& w) const;
  /// Throws DomainError naming the offending coordinate.
  void require_interior(const Vector& w, std::string_view context) const;

 private:
  std::string name_;
  std::shared_ptr<const ScalarPotential> s_;
};

/// Fenchel-dual view of a potential: f* = f^{-1}, H_{F*}(f(w)) = H_F(w)^{-1}.
class DualPotential {
 public:
  explicit DualPotential(Potential primal) : primal_(std::move(primal)) {}

  const Potential& primal() const { return primal_; }
  Vector link(const Vector& theta) const { return primal_.inv_link(theta); }
  Vector hessian_diag(const Vector& theta) const { return primal_.dual_hessian_diag(theta); }

 private:
  Potential primal_;
};

// --- tempered logarithm family -------------------------------------------

/// |1 - tau| below this switches to the natural log/exp branch.
inline constexpr double kTauLimitBand = 1e-8;

inline bool is_log_limit(double tau) { return std::abs(1.0 - tau) < kTauLimitBand; }

double log_tau(double x, double tau);
double exp_tau(double x, double tau);
Vector log_tau(const Vector& x, double tau);
Vector exp_tau(const Vector& x, double tau);

/// First printed form: sum(wt log_t wt - wt log_t w - (wt^{2-t} - w^{2-t})/(2-t)).
double tempered_divergence_entropy_form(const Vector& w_tilde, const Vector& w, double tau);
/// Second (beta-divergence) form; finite when w_tilde has zero entries and tau < 1.
double tempered_divergence_beta_form(const Vector& w_tilde, const Vector& w, double tau);

// --- registry --------------------------------------------------------------

Potential gd_potential();
Potential egu_potential();
Potential burg_potential();
/// Scalar potential with link log(w / (1 - w)) on (0, 1).
Potential reduced_eg2_potential();
/// Tempered potential F_tau; throws UnsupportedTemperature for tau == 2.
Potential tempered_potential(double tau);

/// Potential F* on the link range: link f^{-1}, inverse link f, Hessian H_{F*}.
Potential fenchel_dual_potential(const Potential& p);

/// Resolves "gd", "egu", "burg", "reduced_eg2", "tempered:<tau>".
Potential make_potential(std::string_view name);
std::vector<std::string> potential_names();

// --- divergences and momenta -------------------------------------------------

double bregman_divergence(const Potential& p, const Vector& w_tilde, const Vector& w);
/// (f(w) - f(w0))^T w_dot.
double bregman_momentum(const Potential& p, const Vector& w, const Vector& w_dot, const Vector& w0);
/// (w* - w0*)^T H_{F*}(w*) w*_dot with w*_dot = H_F(w) w_dot, evaluated in the dual.
double dual_momentum(const Potential& p, const Vector& w, const Vector& w_dot, const Vector& w0);

}  // namespace mirrorflow
