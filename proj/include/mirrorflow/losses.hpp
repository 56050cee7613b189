#pragma once

#include <functional>

#include "mirrorflow/types.hpp"

namespace mirrorflow {

struct Loss {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

/// L(w) = g^T w.
Loss linear_loss(Vector g);
/// L(w) = 1/2 ||w - center||^2.
Loss quadratic_loss(Vector center);
/// L(w) = g^T w + 1/2 sum_i a_i w_i^2 (convex for a >= 0).
Loss diag_quadratic_loss(Vector g, Vector a);
/// L(w) = 1/2 ||X w - y||^2, gradient X^T (X w - y).
Loss least_squares_loss(Matrix x, Vector y);

}  // namespace mirrorflow
