#include "mirrorflow/reparam_map.hpp"

#include <cmath>

#include "mirrorflow/errors.hpp"

namespace mirrorflow {

ReparamMap::ReparamMap(std::string name, Index source_dim, Index target_dim, Apply apply,
                       Jacobian jacobian, std::optional<Apply> inverse)
    : name_(std::move(name)),
      source_dim_(source_dim),
      target_dim_(target_dim),
      apply_(std::make_shared<const Apply>(std::move(apply))),
      jacobian_(std::make_shared<const Jacobian>(std::move(jacobian))) {
  if (inverse) inverse_ = std::make_shared<const Apply>(std::move(*inverse));
  if ((source_dim_ == 0) != (target_dim_ == 0) || source_dim_ < target_dim_) {
    throw ConfigError("reparameterization '" + name_ + "': need k >= d (or both elementwise)");
  }
}

void ReparamMap::check_source(const Vector& u) const {
  if (source_dim_ != 0 && u.size() != source_dim_) {
    throw DomainError("reparameterization '" + name_ + "': expected input of size " +
                      std::to_string(source_dim_) + ", got " + std::to_string(u.size()));
  }
}

Vector ReparamMap::apply(const Vector& u) const {
  check_source(u);
  return (*apply_)(u);
}

Matrix ReparamMap::jacobian(const Vector& u) const {
  check_source(u);
  return (*jacobian_)(u);
}

Vector ReparamMap::inverse(const Vector& w) const {
  if (!inverse_) throw Unsupported("reparameterization '" + name_ + "' has no declared inverse");
  if (target_dim_ != 0 && w.size() != target_dim_) {
    throw DomainError("reparameterization '" + name_ + "': inverse expects size " +
                      std::to_string(target_dim_));
  }
  return (*inverse_)(w);
}

ReparamMap elementwise_map(std::string name, std::function<double(double)> apply,
                           std::function<double(double)> derivative,
                           std::function<double(double)> inverse) {
  auto fwd = [apply](const Vector& u) {
    Vector w(u.size());
    for (Index i = 0; i < u.size(); ++i) w[i] = apply(u[i]);
    return w;
  };
  auto jac = [derivative](const Vector& u) {
    Vector diag(u.size());
    for (Index i = 0; i < u.size(); ++i) diag[i] = derivative(u[i]);
    return Matrix(diag.asDiagonal());
  };
  std::optional<ReparamMap::Apply> inv;
  if (inverse) {
    inv = [inverse](const Vector& w) {
      Vector u(w.size());
      for (Index i = 0; i < w.size(); ++i) u[i] = inverse(w[i]);
      return u;
    };
  }
  return ReparamMap(std::move(name), 0, 0, fwd, jac, inv);
}

ReparamMap identity_map() {
  return elementwise_map(
      "identity", [](double u) { return u; }, [](double) { return 1.0; },
      [](double w) { return w; });
}

ReparamMap quarter_square_map() {
  return elementwise_map(
      "quarter_square", [](double u) { return 0.25 * u * u; }, [](double u) { return 0.5 * u; },
      [](double w) { return 2.0 * std::sqrt(w); });
}

ReparamMap exp_map() {
  return elementwise_map(
      "exp", [](double u) { return std::exp(u); }, [](double u) { return std::exp(u); },
      [](double w) { return std::log(w); });
}

ReparamMap half_sine_map() {
  auto fwd = [](const Vector& u) { return Vector::Constant(1, 0.5 * (1.0 + std::sin(u[0]))); };
  auto jac = [](const Vector& u) { return Matrix::Constant(1, 1, 0.5 * std::cos(u[0])); };
  ReparamMap::Apply inv = [](const Vector& w) {
    return Vector::Constant(1, std::asin(2.0 * w[0] - 1.0));
  };
  return ReparamMap("half_sine", 1, 1, fwd, jac, inv);
}

ReparamMap compose(const ReparamMap& outer, const ReparamMap& inner) {
  if (!outer.elementwise() && !inner.elementwise() && outer.source_dim() != inner.target_dim()) {
    throw ConfigError("compose: dimension mismatch between '" + outer.name() + "' and '" +
                      inner.name() + "'");
  }
  const Index k = inner.elementwise() ? outer.source_dim() : inner.source_dim();
  const Index d = outer.elementwise() ? inner.target_dim() : outer.target_dim();
  auto fwd = [outer, inner](const Vector& x) { return outer.apply(inner.apply(x)); };
  auto jac = [outer, inner](const Vector& x) {
    return Matrix(outer.jacobian(inner.apply(x)) * inner.jacobian(x));
  };
  std::optional<ReparamMap::Apply> inv;
  if (outer.has_inverse() && inner.has_inverse()) {
    inv = [outer, inner](const Vector& w) { return inner.inverse(outer.inverse(w)); };
  }
  return ReparamMap(outer.name() + "_of_" + inner.name(), k, d, fwd, jac, inv);
}

ReparamMap invert(const ReparamMap& q) {
  if (!q.has_inverse()) {
    throw Unsupported("invert: reparameterization '" + q.name() + "' has no declared inverse");
  }
  if (q.source_dim() != q.target_dim()) {
    throw Unsupported("invert: '" + q.name() + "' is not square");
  }
  auto fwd = [q](const Vector& w) { return q.inverse(w); };
  auto jac = [q](const Vector& w) {
    const Matrix j = q.jacobian(q.inverse(w));
    const bool diagonal = (j - Matrix(j.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
    if (diagonal) return Matrix(j.diagonal().cwiseInverse().asDiagonal());
    return Matrix(j.partialPivLu().inverse());
  };
  ReparamMap::Apply inv = [q](const Vector& u) { return q.apply(u); };
  return ReparamMap("inverse_" + q.name(), q.source_dim(), q.target_dim(), fwd, jac, inv);
}

}  // namespace mirrorflow
