#include "mirrorflow/losses.hpp"

#include <memory>

#include "mirrorflow/errors.hpp"
#include "mirrorflow/kernels.hpp"

namespace mirrorflow {

namespace {

void require_size(const Vector& w, Index n, const char* which) {
  if (w.size() != n) {
    throw DomainError(std::string(which) + ": expected dimension " + std::to_string(n) + ", got " +
                      std::to_string(w.size()));
  }
}

}  // namespace

Loss linear_loss(Vector g) {
  auto gp = std::make_shared<const Vector>(std::move(g));
  return {[gp](const Vector& w) {
            require_size(w, gp->size(), "linear loss");
            return gp->dot(w);
          },
          [gp](const Vector& w) {
            require_size(w, gp->size(), "linear loss");
            return *gp;
          }};
}

Loss quadratic_loss(Vector center) {
  auto c = std::make_shared<const Vector>(std::move(center));
  return {[c](const Vector& w) {
            require_size(w, c->size(), "quadratic loss");
            return 0.5 * (w - *c).squaredNorm();
          },
          [c](const Vector& w) {
            require_size(w, c->size(), "quadratic loss");
            return Vector(w - *c);
          }};
}

Loss diag_quadratic_loss(Vector g, Vector a) {
  if (g.size() != a.size()) throw ConfigError("diag_quadratic_loss: g and a differ in size");
  auto gp = std::make_shared<const Vector>(std::move(g));
  auto ap = std::make_shared<const Vector>(std::move(a));
  return {[gp, ap](const Vector& w) {
            require_size(w, gp->size(), "diagonal quadratic loss");
            return gp->dot(w) + 0.5 * ap->dot(w.cwiseAbs2());
          },
          [gp, ap](const Vector& w) {
            require_size(w, gp->size(), "diagonal quadratic loss");
            return Vector(*gp + ap->cwiseProduct(w));
          }};
}

Loss least_squares_loss(Matrix x, Vector y) {
  if (x.rows() != y.size()) throw ConfigError("least_squares_loss: X and y differ in rows");
  auto xp = std::make_shared<const Matrix>(std::move(x));
  auto yp = std::make_shared<const Vector>(std::move(y));
  return {[xp, yp](const Vector& w) {
            require_size(w, xp->cols(), "least-squares loss");
            return 0.5 * (*xp * w - *yp).squaredNorm();
          },
          [xp, yp](const Vector& w) {
            require_size(w, xp->cols(), "least-squares loss");
            return kernels::lsq_gradient(*xp, *yp, w);
          }};
}

}  // namespace mirrorflow
