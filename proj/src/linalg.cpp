#include "mirrorflow/linalg.hpp"

#include <cmath>
#include <sstream>

#include "mirrorflow/errors.hpp"

namespace mirrorflow::linalg {

Matrix solve(Matrix a, Matrix b) {
  const Index n = a.rows();
  if (a.cols() != n || b.rows() != n) {
    throw SingularConstraint("linalg::solve: expected a square system");
  }
  const double scale = a.cwiseAbs().maxCoeff();
  if (n > 0 && !(scale > 0.0)) throw SingularConstraint("linalg::solve: zero matrix");
  const double threshold = kPivotTolerance * scale;

  for (Index k = 0; k < n; ++k) {
    Index pivot = k;
    a.col(k).tail(n - k).cwiseAbs().maxCoeff(&pivot);
    pivot += k;
    if (!(std::abs(a(pivot, k)) > threshold)) {
      std::ostringstream os;
      os << "linalg::solve: pivot " << a(pivot, k) << " at column " << k
         << " is below the rank threshold " << threshold;
      throw SingularConstraint(os.str());
    }
    if (pivot != k) {
      a.row(k).swap(a.row(pivot));
      b.row(k).swap(b.row(pivot));
    }
    for (Index i = k + 1; i < n; ++i) {
      const double factor = a(i, k) / a(k, k);
      if (factor == 0.0) continue;
      a.row(i).tail(n - k) -= factor * a.row(k).tail(n - k);
      b.row(i) -= factor * b.row(k);
    }
  }
  // back substitution
  for (Index k = n - 1; k >= 0; --k) {
    for (Index j = k + 1; j < n; ++j) b.row(k) -= a(k, j) * b.row(j);
    b.row(k) /= a(k, k);
  }
  return b;
}

Index row_rank(const Matrix& input, double rel_tol) {
  Matrix a = input;
  const Index rows = a.rows();
  const Index cols = a.cols();
  if (rows == 0 || cols == 0) return 0;
  const double scale = a.cwiseAbs().maxCoeff();
  if (!(scale > 0.0)) return 0;
  const double threshold = rel_tol * scale;

  Index rank = 0;
  for (Index c = 0; c < cols && rank < rows; ++c) {
    Index pivot = 0;
    const double best = a.col(c).tail(rows - rank).cwiseAbs().maxCoeff(&pivot);
    if (!(best > threshold)) continue;
    pivot += rank;
    a.row(rank).swap(a.row(pivot));
    for (Index i = rank + 1; i < rows; ++i) {
      a.row(i) -= (a(i, c) / a(rank, c)) * a.row(rank);
    }
    ++rank;
  }
  return rank;
}

}  // namespace mirrorflow::linalg
