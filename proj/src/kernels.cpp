#include "mirrorflow/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include <omp.h>

namespace mirrorflow::kernels {

namespace {

double nan_as_inf(double r) { return std::isnan(r) ? std::numeric_limits<double>::infinity() : r; }

}  // namespace

Vector lsq_gradient_serial(const Matrix& x, const Vector& y, const Vector& w) {
  const Index n = x.rows();
  const Index d = x.cols();
  Vector out = Vector::Zero(d);
  for (Index i = 0; i < n; ++i) {
    double r = -y[i];
    for (Index j = 0; j < d; ++j) r += x(i, j) * w[j];
    for (Index j = 0; j < d; ++j) out[j] += x(i, j) * r;
  }
  return out;
}

Vector lsq_gradient_parallel(const Matrix& x, const Vector& y, const Vector& w) {
  const Index n = x.rows();
  const Index d = x.cols();
  Vector r(n);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    double acc = -y[i];
    for (Index j = 0; j < d; ++j) acc += x(i, j) * w[j];
    r[i] = acc;
  }
  Vector out(d);
  // Column-wise so each thread owns its output entries; summation order over
  // rows matches the serial kernel.
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < d; ++j) {
    double acc = 0.0;
    for (Index i = 0; i < n; ++i) acc += x(i, j) * r[i];
    out[j] = acc;
  }
  return out;
}

Vector lsq_gradient(const Matrix& x, const Vector& y, const Vector& w) {
  if (x.size() >= kParallelThreshold && omp_get_max_threads() > 1) {
    return lsq_gradient_parallel(x, y, w);
  }
  return lsq_gradient_serial(x, y, w);
}

double max_over_samples_serial(Index n, const ResidualFn& residual) {
  double best = 0.0;
  for (Index i = 0; i < n; ++i) best = std::max(best, nan_as_inf(residual(i)));
  return best;
}

double max_over_samples_parallel(Index n, const ResidualFn& residual) {
  double best = 0.0;
  std::exception_ptr failure;
#pragma omp parallel for reduction(max : best) schedule(dynamic, 8)
  for (Index i = 0; i < n; ++i) {
    try {
      best = std::max(best, nan_as_inf(residual(i)));
    } catch (...) {
#pragma omp critical(mirrorflow_kernel_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return best;
}

double max_over_samples(Index n, const ResidualFn& residual) {
  if (n >= 64 && omp_get_max_threads() > 1) return max_over_samples_parallel(n, residual);
  return max_over_samples_serial(n, residual);
}

}  // namespace mirrorflow::kernels
