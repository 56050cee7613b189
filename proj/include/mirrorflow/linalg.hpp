#pragma once

#include "mirrorflow/types.hpp"

namespace mirrorflow::linalg {

/// Pivots below this fraction of the largest |entry| are treated as zero.
inline constexpr double kPivotTolerance = 1e-12;

/// Solves A X = B by Gaussian elimination with partial pivoting.
/// Throws SingularConstraint when a pivot falls below kPivotTolerance * max|A|.
Matrix solve(Matrix a, Matrix b);

/// Row rank by pivoted elimination with the same relative threshold.
Index row_rank(const Matrix& a, double rel_tol = kPivotTolerance);

}  // namespace mirrorflow::linalg
