#include "mirrorflow/lp_simplex.hpp"

#include <cmath>

#include "mirrorflow/errors.hpp"
#include "mirrorflow/linalg.hpp"

namespace mirrorflow::lp {

namespace {

struct Tableau {
  // rows 0..m-1 constraints, last column is the right-hand side.
  Matrix t;
  std::vector<Index> basis;

  Index rows() const { return static_cast<Index>(basis.size()); }
  Index rhs() const { return t.cols() - 1; }

  void pivot(Index r, Index col) {
    t.row(r) /= t(r, col);
    for (Index i = 0; i < t.rows(); ++i) {
      if (i != r && t(i, col) != 0.0) t.row(i) -= t(i, col) * t.row(r);
    }
    basis[static_cast<std::size_t>(r)] = col;
  }
};

/// Minimizes the objective stored in the last tableau row (reduced costs,
/// with -objective in the rhs slot) over columns [0, allowed).
Status run(Tableau& tab, Index allowed, double tol, long max_pivots) {
  const Index obj = tab.t.rows() - 1;
  for (long it = 0; it < max_pivots; ++it) {
    Index enter = -1;
    for (Index j = 0; j < allowed; ++j) {
      if (tab.t(obj, j) < -tol) {
        enter = j;  // Bland: smallest index
        break;
      }
    }
    if (enter < 0) return Status::optimal;
    Index leave = -1;
    double best = 0.0;
    for (Index i = 0; i < tab.rows(); ++i) {
      const double a = tab.t(i, enter);
      if (a > tol) {
        const double ratio = tab.t(i, tab.rhs()) / a;
        if (leave < 0 || ratio < best - tol ||
            (std::abs(ratio - best) <= tol &&
             tab.basis[static_cast<std::size_t>(i)] < tab.basis[static_cast<std::size_t>(leave)])) {
          leave = i;
          best = ratio;
        }
      }
    }
    if (leave < 0) return Status::unbounded;
    tab.pivot(leave, enter);
  }
  return Status::iteration_limit;
}

}  // namespace

Result solve_standard_form(const Vector& c, const Matrix& a, const Vector& b, double tol,
                           long max_pivots) {
  const Index m = a.rows();
  const Index n = a.cols();
  if (c.size() != n || b.size() != m) throw ConfigError("lp: inconsistent problem dimensions");

  // Phase one: artificial variables n..n+m-1, rows flipped so b >= 0.
  Tableau tab;
  tab.t = Matrix::Zero(m + 1, n + m + 1);
  tab.basis.resize(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    const double s = b[i] < 0.0 ? -1.0 : 1.0;
    tab.t.row(i).head(n) = s * a.row(i);
    tab.t(i, n + i) = 1.0;
    tab.t(i, n + m) = s * b[i];
    tab.basis[static_cast<std::size_t>(i)] = n + i;
  }
  for (Index i = 0; i < m; ++i) tab.t.row(m) -= tab.t.row(i);
  for (Index i = 0; i < m; ++i) tab.t(m, n + i) = 0.0;

  Result res;
  const Status phase1 = run(tab, n + m, tol, max_pivots);
  if (phase1 == Status::iteration_limit) {
    res.status = phase1;
    return res;
  }
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  if (-tab.t(m, n + m) > tol * scale) {
    res.status = Status::infeasible;
    return res;
  }

  // Drive artificials out of the basis; rows where that is impossible are redundant.
  std::vector<Index> keep;
  for (Index i = 0; i < m; ++i) {
    if (tab.basis[static_cast<std::size_t>(i)] >= n) {
      Index col = -1;
      for (Index j = 0; j < n; ++j) {
        if (std::abs(tab.t(i, j)) > tol) {
          col = j;
          break;
        }
      }
      if (col < 0) continue;
      tab.pivot(i, col);
    }
    keep.push_back(i);
  }

  // Phase two tableau over the original columns.
  const Index r = static_cast<Index>(keep.size());
  Tableau t2;
  t2.t = Matrix::Zero(r + 1, n + 1);
  t2.basis.resize(static_cast<std::size_t>(r));
  for (Index k = 0; k < r; ++k) {
    const Index i = keep[static_cast<std::size_t>(k)];
    t2.t.row(k).head(n) = tab.t.row(i).head(n);
    t2.t(k, n) = tab.t(i, n + m);
    t2.basis[static_cast<std::size_t>(k)] = tab.basis[static_cast<std::size_t>(i)];
  }
  t2.t.row(r).head(n) = c.transpose();
  for (Index k = 0; k < r; ++k) {
    const double cb = c[t2.basis[static_cast<std::size_t>(k)]];
    if (cb != 0.0) t2.t.row(r) -= cb * t2.t.row(k);
  }

  res.status = run(t2, n, tol, max_pivots);
  if (res.status != Status::optimal) return res;

  res.x = Vector::Zero(n);
  for (Index k = 0; k < r; ++k) {
    res.x[t2.basis[static_cast<std::size_t>(k)]] = std::max(0.0, t2.t(k, n));
  }
  res.objective = c.dot(res.x);
  res.basis = t2.basis;

  // Duals from B^T y = c_B over the kept rows; dropped rows get zero.
  Matrix bt(r, r);
  Vector cb(r);
  for (Index k = 0; k < r; ++k) {
    const Index col = t2.basis[static_cast<std::size_t>(k)];
    for (Index l = 0; l < r; ++l) bt(k, l) = a(keep[static_cast<std::size_t>(l)], col);
    cb[k] = c[col];
  }
  res.duals = Vector::Zero(m);
  if (r > 0) {
    const Vector y = linalg::solve(bt, cb);
    for (Index l = 0; l < r; ++l) res.duals[keep[static_cast<std::size_t>(l)]] = y[l];
  }
  return res;
}

}  // namespace mirrorflow::lp
