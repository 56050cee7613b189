#pragma once

#include <functional>

#include "mirrorflow/types.hpp"

namespace mirrorflow::numdiff {

using ScalarField = std::function<double(const Vector&)>;
using VectorField = std::function<Vector(const Vector&)>;

/// Central-difference gradient; error is O(h^2).
Vector gradient(const ScalarField& f, const Vector& x, double h = 1e-5);

/// Central-difference Jacobian (rows: outputs, columns: inputs).
Matrix jacobian(const VectorField& f, const Vector& x, double h = 1e-5);

/// Central difference of a scalar function.
double derivative(const std::function<double(double)>& f, double x, double h = 1e-5);

}  // namespace mirrorflow::numdiff
