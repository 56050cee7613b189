#include "mirrorflow/numdiff.hpp"

namespace mirrorflow::numdiff {

Vector gradient(const ScalarField& f, const Vector& x, double h) {
  Vector g(x.size());
  Vector xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = f(xp);
    xp[i] = xi - h;
    const double fm = f(xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Matrix jacobian(const VectorField& f, const Vector& x, double h) {
  const Vector f0 = f(x);
  Matrix jac(f0.size(), x.size());
  Vector xp = x;
  for (Index j = 0; j < x.size(); ++j) {
    const double xj = x[j];
    xp[j] = xj + h;
    const Vector fp = f(xp);
    xp[j] = xj - h;
    const Vector fm = f(xp);
    xp[j] = xj;
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

double derivative(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace mirrorflow::numdiff
