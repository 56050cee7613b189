#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>

#include "mirrorflow/potential.hpp"
#include "mirrorflow/reparam_map.hpp"
#include "mirrorflow/types.hpp"

namespace mirrorflow {

/// Smooth equality constraint psi(w) = 0 with Jacobian J_psi (m x d).
class Constraint {
 public:
  using Value = std::function<Vector(const Vector&)>;
  using Jacobian = std::function<Matrix(const Vector&)>;

  Constraint(std::string name, Value psi, Jacobian jacobian);

  const std::string& name() const { return name_; }
  Vector value(const Vector& w) const { return (*psi_)(w); }
  Matrix jacobian(const Vector& w) const { return (*jacobian_)(w); }
  /// True for psi(w) = 1^T w - 1.
  bool is_simplex() const { return name_ == "simplex"; }

 private:
  std::string name_;
  std::shared_ptr<const Value> psi_;
  std::shared_ptr<const Jacobian> jacobian_;
};

Constraint simplex_constraint();
/// psi(w) = A w - b.
Constraint linear_constraint(Matrix a, Vector b);
/// Resolves "simplex".
Constraint make_constraint(std::string_view name);

/// I - J^T (J Hinv J^T)^{-1} J Hinv for a diagonal metric inverse `inv_metric`.
/// Throws SingularConstraint when J Hinv J^T is rank deficient.
Matrix oblique_projector(const Matrix& jacobian, const Vector& inv_metric);

/// P_psi(w) for the projected CMD flow.
Matrix projection_matrix(const Potential& p, const Constraint& c, const Vector& w);

/// P_{psi o q}(u) with J_{psi o q}(u) = J_psi(q(u)) J_q(u).
Matrix reparam_projection_matrix(const Potential& g, const Constraint& c, const ReparamMap& q,
                                 const Vector& u);

/// Projected natural-gradient direction P_psi^T H_F^{-1} grad (no -eta factor).
Vector projected_natural_gradient(const Potential& p, const Constraint& c, const Vector& w,
                                  const Vector& grad);

/// Relative-entropy projection onto the unit simplex: w / ||w||_1.
Vector bregman_project_simplex(const Potential& p, const Vector& w);

/// Pulls a slightly infeasible point back onto psi = 0. Uses the exact Bregman
/// projection for relative-entropy potentials on the simplex, otherwise
/// Gauss-Newton steps in the H_F^{-1} metric.
Vector restore_feasibility(const Potential& p, const Constraint& c, const Vector& w);

/// Gauss-Newton correction x <- x - Hinv J^T (J Hinv J^T)^{-1} r(x), repeated
/// until ||r||_inf <= tol or `max_iter` is reached.
Vector metric_feasibility_correction(const std::function<Vector(const Vector&)>& residual,
                                     const std::function<Matrix(const Vector&)>& jacobian,
                                     const std::function<Vector(const Vector&)>& inv_metric,
                                     Vector x, double tol = 1e-15, int max_iter = 5);

void write_matrix_csv(std::ostream& os, const Matrix& m);

}  // namespace mirrorflow
