#include "mirrorflow/flow.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "mirrorflow/errors.hpp"

namespace mirrorflow {

void FlowProblem::validate() const {
  if (!loss.value || !loss.gradient) throw ConfigError("flow problem: loss is incomplete");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("flow problem: eta must be positive");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw ConfigError("flow problem: horizon must be nonnegative");
  }
  if (w0.size() == 0) throw ConfigError("flow problem: empty initial point");
  potential.require_interior(w0, "flow problem initial point");
  if (constraint) {
    const double r = constraint->value(w0).cwiseAbs().maxCoeff();
    if (r > 1e-10) {
      std::ostringstream os;
      os << "flow problem: initial point violates constraint " << constraint->name() << " by " << r;
      throw DomainError(os.str());
    }
  }
}

namespace {

[[noreturn]] void throw_exit(const Potential& p, const Vector& w, Index bad, double t,
                             const char* where) {
  std::ostringstream os;
  os << where << ": state left the domain of " << p.name() << " at t = " << t << " (coordinate "
     << bad << " = " << w[bad] << ")";
  throw DomainExit(os.str(), t, bad);
}

void require_inside(const Potential& p, const Vector& w, double t, const char* where) {
  const Index bad = p.first_violation(w);
  if (bad >= 0) throw_exit(p, w, bad, t, where);
}

ode::Options make_options(const FlowProblem& p, const IntegrateOptions& opt) {
  ode::Options o;
  o.step = opt.step;
  o.horizon = p.horizon;
  o.scheme = opt.scheme;
  o.record_every = opt.record_every;
  return o;
}

}  // namespace

Trajectory integrate_cmd(const FlowProblem& p, const IntegrateOptions& opt) {
  p.validate();
  const Potential& pot = p.potential;
  const double eta = p.eta;
  ode::Rhs rhs = [&](double t, const Vector& w) -> Vector {
    require_inside(pot, w, t, "integrate_cmd");
    const Vector g = p.loss.gradient(w);
    if (p.constraint) return -eta * projected_natural_gradient(pot, *p.constraint, w, g);
    return -eta * pot.inv_hessian_diag(w).cwiseProduct(g);
  };
  ode::Options o = make_options(p, opt);
  o.after_step = [&](double t, Vector w) {
    require_inside(pot, w, t, "integrate_cmd");
    if (p.constraint) w = restore_feasibility(pot, *p.constraint, w);
    return w;
  };
  ode::Path path = ode::integrate(rhs, p.w0, o);
  return {std::move(path.times), std::move(path.states), {}};
}

Trajectory integrate_cmd(const FlowProblem& p, double step, Scheme scheme) {
  return integrate_cmd(p, IntegrateOptions{step, scheme, 1});
}

Trajectory integrate_dual(const FlowProblem& p, const IntegrateOptions& opt) {
  p.validate();
  const Potential& pot = p.potential;
  const double eta = p.eta;
  ode::Rhs rhs = [&](double t, const Vector& theta) -> Vector {
    const Vector w = pot.inv_link(theta);
    require_inside(pot, w, t, "integrate_dual");
    const Vector g = p.loss.gradient(w);
    if (p.constraint) return -eta * (projection_matrix(pot, *p.constraint, w) * g);
    return -eta * g;
  };
  ode::Options o = make_options(p, opt);
  o.after_step = [&](double t, Vector theta) {
    Vector w = pot.inv_link(theta);
    require_inside(pot, w, t, "integrate_dual");
    if (!p.constraint) return theta;
    return pot.link(restore_feasibility(pot, *p.constraint, w));
  };
  ode::Path path = ode::integrate(rhs, pot.link(p.w0), o);
  Trajectory traj;
  traj.times = std::move(path.times);
  traj.states.reserve(path.states.size());
  for (const Vector& theta : path.states) traj.states.push_back(pot.inv_link(theta));
  traj.dual_states = std::move(path.states);
  return traj;
}

Trajectory integrate_dual(const FlowProblem& p, double step, Scheme scheme) {
  return integrate_dual(p, IntegrateOptions{step, scheme, 1});
}

// --- discrete updates ----------------------------------------------------------

namespace {

void require_positive(const Vector& w, const char* where) {
  for (Index i = 0; i < w.size(); ++i) {
    if (!(w[i] > 0.0)) throw DomainError(std::string(where) + ": weights must be positive", i);
  }
}

void require_same(const Vector& a, const Vector& b, const char* where) {
  if (a.size() != b.size()) throw DomainError(std::string(where) + ": dimension mismatch");
}

}  // namespace

Vector step_md_explicit(const Potential& p, const Vector& w, const Vector& g, double eta) {
  require_same(w, g, "step_md_explicit");
  p.require_interior(w, "step_md_explicit");
  const Vector out = p.inv_link(p.link(w) - eta * g);
  const Index bad = p.first_violation(out);
  if (bad >= 0) {
    std::ostringstream os;
    os << "step_md_explicit: eta = " << eta << " pushes coordinate " << bad << " out of the domain of "
       << p.name();
    throw StepTooLarge(os.str());
  }
  return out;
}

Vector step_md_implicit(const Potential& p, const Vector& w,
                        const std::function<Vector(const Vector&)>& grad, double eta,
                        const ImplicitOptions& opt) {
  p.require_interior(w, "step_md_implicit");
  const Vector theta0 = p.link(w);
  Vector theta = theta0;
  double residual = 0.0;
  for (int it = 0; it < opt.max_iter; ++it) {
    const Vector w_plus = p.inv_link(theta);
    if (!p.is_interior(w_plus)) {
      throw StepTooLarge("step_md_implicit: iterate left the domain of " + p.name());
    }
    const Vector target = theta0 - eta * grad(w_plus);
    residual = (target - theta).cwiseAbs().maxCoeff();
    if (!std::isfinite(residual)) throw NumericalError("step_md_implicit: non-finite residual");
    if (residual <= opt.tol) return w_plus;
    theta = (1.0 - opt.damping) * theta + opt.damping * target;
  }
  std::ostringstream os;
  os << "step_md_implicit: no fixed point after " << opt.max_iter << " iterations (residual "
     << residual << ")";
  throw NoConvergence(os.str(), residual);
}

Vector step_prod(const Vector& w, const Vector& g, double eta) {
  require_same(w, g, "step_prod");
  require_positive(w, "step_prod");
  Vector out(w.size());
  for (Index i = 0; i < w.size(); ++i) {
    const double factor = 1.0 - eta * g[i];
    if (!(factor > 0.0)) {
      throw StepTooLarge("step_prod: eta * g_" + std::to_string(i) + " >= 1");
    }
    out[i] = w[i] * factor;
  }
  return out;
}

Vector step_eg_normalized(const Vector& w, const Vector& g, double eta) {
  require_same(w, g, "step_eg_normalized");
  require_positive(w, "step_eg_normalized");
  const Vector e = -eta * g;
  const double shift = e.maxCoeff();
  const Vector v = w.cwiseProduct((e.array() - shift).exp().matrix());
  return v / v.sum();
}

Vector step_eg_approximated(const Vector& w, const Vector& g, double eta) {
  require_same(w, g, "step_eg_approximated");
  require_positive(w, "step_eg_approximated");
  const double mean = w.dot(g);
  Vector out(w.size());
  for (Index i = 0; i < w.size(); ++i) {
    out[i] = w[i] * (1.0 - eta * (g[i] - mean));
    if (!(out[i] > 0.0)) {
      throw StepTooLarge("step_eg_approximated: coordinate " + std::to_string(i) +
                         " driven to a nonpositive value");
    }
  }
  return out;
}

Vector step_projected_then_bregman(const Potential& p, const Constraint& c, const Vector& w,
                                   const Vector& g, double eta) {
  require_same(w, g, "step_projected_then_bregman");
  const Vector pg = projection_matrix(p, c, w) * g;
  return restore_feasibility(p, c, step_md_explicit(p, w, pg, eta));
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const Index d = traj.states.empty() ? 0 : traj.states.front().size();
  os << 't';
  for (Index i = 1; i <= d; ++i) os << ",w_" << i;
  os << '\n';
  const auto old_precision = os.precision(17);
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    os << traj.times[k];
    for (Index i = 0; i < d; ++i) os << ',' << traj.states[k][i];
    os << '\n';
  }
  os.precision(old_precision);
}

}  // namespace mirrorflow
