#include "mirrorflow/geometry.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "mirrorflow/errors.hpp"
#include "mirrorflow/linalg.hpp"

namespace mirrorflow {

Constraint::Constraint(std::string name, Value psi, Jacobian jacobian)
    : name_(std::move(name)),
      psi_(std::make_shared<const Value>(std::move(psi))),
      jacobian_(std::make_shared<const Jacobian>(std::move(jacobian))) {}

Constraint simplex_constraint() {
  return Constraint(
      "simplex", [](const Vector& w) { return Vector::Constant(1, w.sum() - 1.0); },
      [](const Vector& w) { return Matrix::Ones(1, w.size()); });
}

Constraint linear_constraint(Matrix a, Vector b) {
  if (a.rows() != b.size()) throw ConfigError("linear_constraint: A and b disagree in rows");
  return Constraint(
      "linear", [a, b](const Vector& w) { return Vector(a * w - b); },
      [a](const Vector&) { return a; });
}

Constraint make_constraint(std::string_view name) {
  if (name == "simplex") return simplex_constraint();
  throw ConfigError("unknown constraint '" + std::string(name) + "'; valid: simplex");
}

Matrix oblique_projector(const Matrix& jacobian, const Vector& inv_metric) {
  const Index n = jacobian.cols();
  if (inv_metric.size() != n) throw DomainError("oblique_projector: metric size mismatch");
  const Matrix j_hinv = jacobian * inv_metric.asDiagonal();   // m x n
  const Matrix gram = j_hinv * jacobian.transpose();          // m x m
  const Matrix coeff = linalg::solve(gram, j_hinv);           // (J Hinv J^T)^{-1} J Hinv
  return Matrix::Identity(n, n) - jacobian.transpose() * coeff;
}

Matrix projection_matrix(const Potential& p, const Constraint& c, const Vector& w) {
  p.require_interior(w, "projection_matrix");
  return oblique_projector(c.jacobian(w), p.inv_hessian_diag(w));
}

Matrix reparam_projection_matrix(const Potential& g, const Constraint& c, const ReparamMap& q,
                                 const Vector& u) {
  g.require_interior(u, "reparam_projection_matrix");
  const Vector w = q.apply(u);
  const Matrix j_comp = c.jacobian(w) * q.jacobian(u);  // m x k
  return oblique_projector(j_comp, g.inv_hessian_diag(u));
}

Vector projected_natural_gradient(const Potential& p, const Constraint& c, const Vector& w,
                                  const Vector& grad) {
  const Matrix proj = projection_matrix(p, c, w);
  return proj.transpose() * p.inv_hessian_diag(w).cwiseProduct(grad);
}

Vector bregman_project_simplex(const Potential& p, const Vector& w) {
  if (!p.relative_entropy()) {
    throw Unsupported("bregman_project_simplex: closed form only for the relative entropy, not " +
                      p.name());
  }
  for (Index i = 0; i < w.size(); ++i) {
    if (!(w[i] >= 0.0)) throw DomainError("bregman_project_simplex: negative coordinate", i);
  }
  const double mass = w.sum();
  if (!(mass > 0.0)) throw DegenerateInput("bregman_project_simplex: zero vector");
  return w / mass;
}

Vector metric_feasibility_correction(const std::function<Vector(const Vector&)>& residual,
                                     const std::function<Matrix(const Vector&)>& jacobian,
                                     const std::function<Vector(const Vector&)>& inv_metric,
                                     Vector x, double tol, int max_iter) {
  for (int it = 0; it < max_iter; ++it) {
    const Vector r = residual(x);
    if (r.cwiseAbs().maxCoeff() <= tol) break;
    const Matrix j = jacobian(x);
    const Vector hinv = inv_metric(x);
    const Matrix j_hinv = j * hinv.asDiagonal();
    const Matrix gram = j_hinv * j.transpose();
    const Vector mult = linalg::solve(gram, r);
    x -= hinv.cwiseProduct(j.transpose() * mult);
  }
  return x;
}

Vector restore_feasibility(const Potential& p, const Constraint& c, const Vector& w) {
  if (c.is_simplex() && p.relative_entropy()) return bregman_project_simplex(p, w);
  return metric_feasibility_correction([&c](const Vector& x) { return c.value(x); },
                                       [&c](const Vector& x) { return c.jacobian(x); },
                                       [&p](const Vector& x) { return p.inv_hessian_diag(x); }, w);
}

void write_matrix_csv(std::ostream& os, const Matrix& m) {
  const auto old_precision = os.precision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << m(i, j);
    }
    os << '\n';
  }
  os.precision(old_precision);
}

}  // namespace mirrorflow
