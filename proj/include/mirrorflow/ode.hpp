#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "mirrorflow/types.hpp"

namespace mirrorflow::ode {

enum class Scheme { euler, rk4 };

/// Parses "euler" or "rk4"; throws ConfigError otherwise.
Scheme parse_scheme(std::string_view name);
std::string_view scheme_name(Scheme s);

using Rhs = std::function<Vector(double t, const Vector& x)>;

struct Options {
  double step = 1e-3;
  double horizon = 1.0;
  Scheme scheme = Scheme::rk4;
  /// Keep every n-th state; the initial and final states are always kept.
  int record_every = 1;
  /// Applied to the state after every accepted step (e.g. feasibility restore).
  std::function<Vector(double t, Vector x)> after_step;
  /// Integration ends early once this returns true (checked after each step).
  std::function<bool(double t, const Vector& x)> stop;
};

struct Path {
  std::vector<double> times;
  std::vector<Vector> states;
};

/// Fixed-step integration on the grid t_k = min(k * step, horizon).
/// Throws NumericalError when a state or right-hand side becomes non-finite.
Path integrate(const Rhs& rhs, Vector x0, const Options& opt);

/// Number of steps on the grid above.
long step_count(double step, double horizon);

}  // namespace mirrorflow::ode
