#pragma once

#include <functional>

#include "mirrorflow/types.hpp"

// Hot loops with a serial reference and an OpenMP version. The dispatchers
// pick the parallel path only when the work is large enough to pay for it.
namespace mirrorflow::kernels {

/// X^T (X w - y), one row of X at a time.
Vector lsq_gradient_serial(const Matrix& x, const Vector& y, const Vector& w);
Vector lsq_gradient_parallel(const Matrix& x, const Vector& y, const Vector& w);
Vector lsq_gradient(const Matrix& x, const Vector& y, const Vector& w);

/// Scalar residual of sample i; NaN counts as +inf.
using ResidualFn = std::function<double(Index sample)>;

/// max_i residual(i) over n samples.
double max_over_samples_serial(Index n, const ResidualFn& residual);
double max_over_samples_parallel(Index n, const ResidualFn& residual);
double max_over_samples(Index n, const ResidualFn& residual);

/// Work size (rows x cols) above which the dispatchers go parallel.
inline constexpr Index kParallelThreshold = 1 << 16;

}  // namespace mirrorflow::kernels
