#include "mirrorflow/ode.hpp"

#include <cmath>
#include <string>

#include "mirrorflow/errors.hpp"

namespace mirrorflow::ode {

Scheme parse_scheme(std::string_view name) {
  if (name == "euler") return Scheme::euler;
  if (name == "rk4") return Scheme::rk4;
  throw ConfigError("unknown scheme '" + std::string(name) + "'; valid: euler, rk4");
}

std::string_view scheme_name(Scheme s) { return s == Scheme::euler ? "euler" : "rk4"; }

long step_count(double step, double horizon) {
  if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("step must be positive and finite");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw ConfigError("horizon must be nonnegative and finite");
  }
  // Tolerate T/step landing a hair above an integer.
  return static_cast<long>(std::ceil(horizon / step - 1e-9));
}

namespace {

Vector checked(Vector v, double t, const char* what) {
  if (!v.allFinite()) {
    throw NumericalError(std::string("non-finite ") + what + " at t = " + std::to_string(t), t);
  }
  return v;
}

}  // namespace

Path integrate(const Rhs& rhs, Vector x0, const Options& opt) {
  const long n = step_count(opt.step, opt.horizon);
  const int every = opt.record_every < 1 ? 1 : opt.record_every;
  auto f = [&rhs](double t, const Vector& x) { return checked(rhs(t, x), t, "right-hand side"); };

  Path path;
  Vector x = checked(std::move(x0), 0.0, "initial state");
  path.times.push_back(0.0);
  path.states.push_back(x);

  double t = 0.0;
  for (long k = 1; k <= n; ++k) {
    const double t_next = k == n ? opt.horizon : std::min(k * opt.step, opt.horizon);
    const double h = t_next - t;
    if (opt.scheme == Scheme::euler) {
      x += h * f(t, x);
    } else {
      const Vector k1 = f(t, x);
      const Vector k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
      const Vector k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
      const Vector k4 = f(t_next, x + h * k3);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    t = t_next;
    if (opt.after_step) x = opt.after_step(t, std::move(x));
    x = checked(std::move(x), t, "state");
    const bool done = k == n || (opt.stop && opt.stop(t, x));
    if (done || k % every == 0) {
      path.times.push_back(t);
      path.states.push_back(x);
    }
    if (done) break;
  }
  return path;
}

}  // namespace mirrorflow::ode
