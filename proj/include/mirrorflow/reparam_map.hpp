#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "mirrorflow/types.hpp"

namespace mirrorflow {

/// Map q from parameters u in R^k to weights w in R^d, with its Jacobian (d x k)
/// and an optional inverse on a declared branch. Dimensions of 0 mean
/// "elementwise, any size" (k == d).
class ReparamMap {
 public:
  using Apply = std::function<Vector(const Vector&)>;
  using Jacobian = std::function<Matrix(const Vector&)>;

  ReparamMap(std::string name, Index source_dim, Index target_dim, Apply apply, Jacobian jacobian,
             std::optional<Apply> inverse = std::nullopt);

  const std::string& name() const { return name_; }
  Index source_dim() const { return source_dim_; }
  Index target_dim() const { return target_dim_; }
  bool elementwise() const { return source_dim_ == 0; }

  Vector apply(const Vector& u) const;
  Matrix jacobian(const Vector& u) const;
  bool has_inverse() const { return static_cast<bool>(inverse_); }
  /// Throws Unsupported when no inverse was declared.
  Vector inverse(const Vector& w) const;

 private:
  void check_source(const Vector& u) const;

  std::string name_;
  Index source_dim_;
  Index target_dim_;
  std::shared_ptr<const Apply> apply_;
  std::shared_ptr<const Jacobian> jacobian_;
  std::shared_ptr<const Apply> inverse_;
};

/// Builds an elementwise map from scalar pieces; the Jacobian is diagonal.
ReparamMap elementwise_map(std::string name, std::function<double(double)> apply,
                           std::function<double(double)> derivative,
                           std::function<double(double)> inverse = nullptr);

ReparamMap identity_map();
/// w = u^2 / 4, inverse on the nonnegative branch u = 2 sqrt(w).
ReparamMap quarter_square_map();
/// w = exp(u), inverse log.
ReparamMap exp_map();
/// Scalar w = (1 + sin u) / 2 with inverse asin(2w - 1) on (-pi/2, pi/2).
ReparamMap half_sine_map();

/// outer(inner(x)) with Jacobian J_outer(inner(x)) J_inner(x).
ReparamMap compose(const ReparamMap& outer, const ReparamMap& inner);
/// Swaps apply and inverse; Jacobian is the matrix inverse of J_q at q^{-1}(w).
ReparamMap invert(const ReparamMap& q);

}  // namespace mirrorflow
