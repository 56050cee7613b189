#pragma once

#include <vector>

#include "mirrorflow/types.hpp"

namespace mirrorflow::lp {

enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Result {
  Status status = Status::optimal;
  Vector x;
  double objective = 0.0;
  /// Equality multipliers y with c_B = B^T y at the final basis.
  Vector duals;
  std::vector<Index> basis;
};

/// min c^T x  s.t.  A x = b, x >= 0, by a dense two-phase tableau simplex with
/// Bland's rule. Redundant equality rows are dropped after phase one.
Result solve_standard_form(const Vector& c, const Matrix& a, const Vector& b,
                           double tol = 1e-9, long max_pivots = 100000);

}  // namespace mirrorflow::lp
