#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mirrorflow/geometry.hpp"
#include "mirrorflow/losses.hpp"
#include "mirrorflow/ode.hpp"
#include "mirrorflow/potential.hpp"
#include "mirrorflow/types.hpp"

namespace mirrorflow {

using ode::Scheme;

struct FlowProblem {
  Loss loss;
  Vector w0;
  double eta = 1.0;
  double horizon = 1.0;
  Potential potential;
  std::optional<Constraint> constraint;

  /// Checks eta, horizon, w0 against the domain and psi(w0) = 0 within 1e-10.
  void validate() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  /// Link-space states f(w), filled by integrate_dual.
  std::vector<Vector> dual_states;

  const Vector& final_state() const { return states.back(); }
};

struct IntegrateOptions {
  double step = 1e-3;
  Scheme scheme = Scheme::rk4;
  int record_every = 1;
};

/// CMD in natural-gradient form w' = -eta H_F^{-1} grad L. With a constraint the
/// field is -eta P_psi^T H_F^{-1} grad L and every step is followed by a
/// feasibility restore. Throws DomainExit when a stage leaves the domain.
Trajectory integrate_cmd(const FlowProblem& p, const IntegrateOptions& opt);
Trajectory integrate_cmd(const FlowProblem& p, double step, Scheme scheme = Scheme::rk4);

/// Same flow integrated in link space, theta' = -eta grad L(f^{-1}(theta))
/// (projected by P_psi when a constraint is present).
Trajectory integrate_dual(const FlowProblem& p, const IntegrateOptions& opt);
Trajectory integrate_dual(const FlowProblem& p, double step, Scheme scheme = Scheme::rk4);

// --- discrete updates ----------------------------------------------------------

/// f^{-1}(f(w) - eta g); StepTooLarge when the result leaves the domain.
Vector step_md_explicit(const Potential& p, const Vector& w, const Vector& g, double eta);

struct ImplicitOptions {
  double damping = 0.5;
  double tol = 1e-10;
  int max_iter = 1000;
};

/// Fixed point of w+ = f^{-1}(f(w) - eta grad L(w+)) by damped iteration in link space.
Vector step_md_implicit(const Potential& p, const Vector& w,
                        const std::function<Vector(const Vector&)>& grad, double eta,
                        const ImplicitOptions& opt = {});

/// w * (1 - eta g); StepTooLarge when some eta g_i >= 1.
Vector step_prod(const Vector& w, const Vector& g, double eta);
/// w * exp(-eta g) / ||w * exp(-eta g)||_1, evaluated with a shifted exponent.
Vector step_eg_normalized(const Vector& w, const Vector& g, double eta);
/// w * (1 - eta (g - 1 w^T g)); sums to 1 when w does.
Vector step_eg_approximated(const Vector& w, const Vector& g, double eta);
/// f(w~) = f(w) - eta P_psi(w) g, then restore_feasibility.
Vector step_projected_then_bregman(const Potential& p, const Constraint& c, const Vector& w,
                                   const Vector& g, double eta);

/// Header t,w_1,...,w_d; 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace mirrorflow
