#include "mirrorflow/reparam.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "mirrorflow/egupm.hpp"
#include "mirrorflow/errors.hpp"
#include "mirrorflow/kernels.hpp"

namespace mirrorflow {

double condition_residual(const Potential& f, const Potential& g, const ReparamMap& q,
                          const Vector& u) {
  g.require_interior(u, "check_condition (u)");
  const Vector w = q.apply(u);
  f.require_interior(w, "check_condition (q(u))");
  const Matrix j = q.jacobian(u);
  Matrix diff = -(j * g.inv_hessian_diag(u).asDiagonal() * j.transpose());
  diff.diagonal() += f.inv_hessian_diag(w);
  return diff.cwiseAbs().rowwise().sum().maxCoeff();
}

ConditionReport check_condition(const Potential& f, const Potential& g, const ReparamMap& q,
                                const std::vector<Vector>& samples) {
  ConditionReport r;
  r.samples = samples.size();
  r.max_residual = kernels::max_over_samples(static_cast<Index>(samples.size()), [&](Index i) {
    return condition_residual(f, g, q, samples[static_cast<std::size_t>(i)]);
  });
  r.pass = r.max_residual <= kConditionTolerance;
  return r;
}

namespace {

void require_inside(const Potential& p, const Vector& x, double t, const char* what) {
  const Index bad = p.first_violation(x);
  if (bad >= 0) {
    std::ostringstream os;
    os << "reparam_flow: " << what << " left the domain of " << p.name() << " at t = " << t
       << " (coordinate " << bad << " = " << x[bad] << ")";
    throw DomainExit(os.str(), t, bad);
  }
}

}  // namespace

ReparamTrajectory reparam_flow(const Potential& f, const Potential& g, const ReparamMap& q,
                               const FlowProblem& p, const Vector& u0,
                               const ReparamOptions& opt) {
  p.validate();
  g.require_interior(u0, "reparam_flow initial u");
  const Vector pushed = q.apply(u0);
  if (pushed.size() != p.w0.size() || (pushed - p.w0).cwiseAbs().maxCoeff() > 1e-10) {
    throw DomainError("reparam_flow: q(u0) does not reproduce w0 within 1e-10");
  }
  const double residual = condition_residual(f, g, q, u0);
  if (residual > kConditionTolerance && !opt.allow_condition_failure) {
    std::ostringstream os;
    os << "reparam_flow: (" << f.name() << ", " << g.name() << ", " << q.name()
       << ") fails the reparameterization condition at u0 (residual " << residual << ")";
    throw ConditionFailure(os.str(), residual);
  }

  const double eta = p.eta;
  const std::optional<Constraint>& c = p.constraint;
  ode::Rhs rhs = [&](double t, const Vector& u) -> Vector {
    require_inside(g, u, t, "u");
    const Vector w = q.apply(u);
    require_inside(f, w, t, "q(u)");
    Vector v = q.jacobian(u).transpose() * p.loss.gradient(w);
    if (c) v = reparam_projection_matrix(g, *c, q, u) * v;
    return -eta * g.inv_hessian_diag(u).cwiseProduct(v);
  };
  ode::Options o;
  o.step = opt.integrate.step;
  o.horizon = p.horizon;
  o.scheme = opt.integrate.scheme;
  o.record_every = opt.integrate.record_every;
  o.after_step = [&](double t, Vector u) {
    require_inside(g, u, t, "u");
    if (!c) return u;
    return metric_feasibility_correction(
        [&](const Vector& x) { return c->value(q.apply(x)); },
        [&](const Vector& x) { return Matrix(c->jacobian(q.apply(x)) * q.jacobian(x)); },
        [&](const Vector& x) { return g.inv_hessian_diag(x); }, std::move(u));
  };
  ode::Path path = ode::integrate(rhs, u0, o);

  ReparamTrajectory out;
  out.w.times = path.times;
  out.w.states.reserve(path.states.size());
  for (const Vector& u : path.states) out.w.states.push_back(q.apply(u));
  out.u.times = std::move(path.times);
  out.u.states = std::move(path.states);
  return out;
}

ReparamTrajectory reparam_flow_constrained(const Potential& f, const Potential& g,
                                           const ReparamMap& q, const Constraint& c,
                                           const FlowProblem& p, const Vector& u0,
                                           const ReparamOptions& opt) {
  FlowProblem constrained = p;
  constrained.constraint = c;
  return reparam_flow(f, g, q, constrained, u0, opt);
}

EquivalenceReport equivalence_report(const Trajectory& a, const Trajectory& b) {
  if (a.times.size() != b.times.size()) {
    throw GridMismatch("equivalence_report: trajectories have " + std::to_string(a.times.size()) +
                       " and " + std::to_string(b.times.size()) + " samples");
  }
  EquivalenceReport r;
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    const double ta = a.times[k];
    const double tb = b.times[k];
    if (std::abs(ta - tb) > 1e-12 * std::max(1.0, std::abs(ta))) {
      std::ostringstream os;
      os << "equivalence_report: time grids differ at sample " << k << " (" << ta << " vs " << tb
         << ")";
      throw GridMismatch(os.str());
    }
    if (a.states[k].size() != b.states[k].size()) {
      throw GridMismatch("equivalence_report: state dimensions differ");
    }
    const double dev =
        a.states[k].size() ? (a.states[k] - b.states[k]).cwiseAbs().maxCoeff() : 0.0;
    r.times.push_back(ta);
    r.per_time_devs.push_back(dev);
    r.max_dev = std::max(r.max_dev, std::isnan(dev) ? HUGE_VAL : dev);
  }
  return r;
}

void write_json(std::ostream& os, const ConditionReport& r) {
  nlohmann::json j = {{"max_residual", r.max_residual}, {"pass", r.pass}, {"samples", r.samples}};
  os << j.dump(2) << '\n';
}

void write_json(std::ostream& os, const EquivalenceReport& r) {
  nlohmann::json j = {{"max_dev", r.max_dev}, {"times", r.times}, {"per_time_devs", r.per_time_devs}};
  os << j.dump(2) << '\n';
}

// --- registry ----------------------------------------------------------------------

namespace {

constexpr double kSingularBand = 1e-3;

/// Uniform on [-3, 3] with |x| >= kSingularBand.
double away_from_zero(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mag(kSingularBand, 3.0);
  std::bernoulli_distribution sign(0.5);
  const double m = mag(rng);
  return sign(rng) ? m : -m;
}

Vector vector_of(std::mt19937_64& rng, Index dim, const std::function<double(std::mt19937_64&)>& f) {
  Vector v(dim);
  for (Index i = 0; i < dim; ++i) v[i] = f(rng);
  return v;
}

Vector uniform_box(std::mt19937_64& rng, Index dim, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return vector_of(rng, dim, [&u](std::mt19937_64& r) { return u(r); });
}

Triple elementwise_triple(std::string name, Potential f, Potential g, ReparamMap q,
                          bool avoid_zero) {
  Triple t{std::move(name), std::move(f), std::move(g), std::move(q), std::nullopt, 0, {}, {}};
  if (avoid_zero) {
    t.sample_u = [](std::mt19937_64& rng, Index dim) { return vector_of(rng, dim, away_from_zero); };
  } else {
    t.sample_u = [](std::mt19937_64& rng, Index dim) { return uniform_box(rng, dim, -3.0, 3.0); };
  }
  t.sample_w = [](std::mt19937_64& rng, Index dim) { return uniform_box(rng, dim, 0.5, 2.0); };
  return t;
}

Triple reduced_eg2_triple() {
  Triple t{"reduced_eg2_as_gd", reduced_eg2_potential(), gd_potential(), half_sine_map(),
           std::nullopt, 1, {}, {}};
  // H_F^{-1} = w (1 - w) <= 1/4.
  t.curvature_scale = 16.0;
  t.sample_u = [](std::mt19937_64& rng, Index dim) {
    // cos u vanishes where w hits 0 or 1; skip a band around those points.
    return vector_of(rng, dim, [](std::mt19937_64& r) {
      std::uniform_real_distribution<double> u(-3.0, 3.0);
      double x = u(r);
      while (std::abs(std::cos(x)) < kSingularBand) x = u(r);
      return x;
    });
  };
  t.sample_w = [](std::mt19937_64& rng, Index dim) { return uniform_box(rng, dim, 0.2, 0.8); };
  return t;
}

Triple egu_as_burg_triple() {
  // Chain EGU = GD through w = u^2 / 4 with Burg = GD through v = exp(u):
  // w = (log v)^2 / 4, inverse branch v = exp(2 sqrt(w)) > 1.
  Triple t{"egu_as_burg", egu_potential(), burg_potential(),
           compose(quarter_square_map(), invert(exp_map())), std::nullopt, 0, {}, {}};
  t.sample_u = [](std::mt19937_64& rng, Index dim) {
    return vector_of(rng, dim, [](std::mt19937_64& r) { return std::exp(away_from_zero(r)); });
  };
  t.sample_w = [](std::mt19937_64& rng, Index dim) { return uniform_box(rng, dim, 0.5, 2.0); };
  return t;
}

Triple eg_projected_triple() {
  Triple t{"eg_as_gd_projected", egu_potential(), gd_potential(), quarter_square_map(),
           simplex_constraint(), 0, {}, {}};
  // Simplex weights are O(1/d), and so is H_F^{-1}.
  t.curvature_scale = 20.0;
  t.sample_u = [](std::mt19937_64& rng, Index dim) { return vector_of(rng, dim, away_from_zero); };
  t.sample_w = [](std::mt19937_64& rng, Index dim) {
    const Vector v = uniform_box(rng, dim, 0.5, 2.0);
    return Vector(v / v.sum());
  };
  return t;
}

std::string format_tau(double tau) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), tau);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<std::string> triple_names() {
  return {"egu_as_gd",          "burg_as_gd",           "reduced_eg2_as_gd",
          "egu_as_burg",        "tempered_as_gd:<tau>", "eg_as_gd_projected"};
}

Triple make_triple(std::string_view name) {
  if (name == "egu_as_gd") {
    return elementwise_triple("egu_as_gd", egu_potential(), gd_potential(), quarter_square_map(),
                              true);
  }
  if (name == "burg_as_gd") {
    return elementwise_triple("burg_as_gd", burg_potential(), gd_potential(), exp_map(), false);
  }
  if (name == "reduced_eg2_as_gd") return reduced_eg2_triple();
  if (name == "egu_as_burg") return egu_as_burg_triple();
  if (name == "eg_as_gd_projected") return eg_projected_triple();
  constexpr std::string_view prefix = "tempered_as_gd:";
  if (name.substr(0, prefix.size()) == prefix) {
    const std::string_view rest = name.substr(prefix.size());
    double tau = 0.0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), tau);
    if (rest.empty() || ec != std::errc() || ptr != rest.data() + rest.size()) {
      throw ConfigError("bad temperature in triple name '" + std::string(name) + "'");
    }
    if (tau == 2.0) throw UnsupportedTemperature("q_tau is undefined at tau = 2");
    return elementwise_triple("tempered_as_gd:" + format_tau(tau), tempered_potential(tau),
                              gd_potential(), q_tau_map(tau), true);
  }
  std::string valid;
  for (const auto& n : triple_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("unknown triple '" + std::string(name) + "'; valid: " + valid);
}

std::vector<Triple> registered_triples() {
  std::vector<Triple> out;
  for (const char* n : {"egu_as_gd", "burg_as_gd", "reduced_eg2_as_gd", "egu_as_burg"}) {
    out.push_back(make_triple(n));
  }
  for (double tau : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    out.push_back(make_triple("tempered_as_gd:" + format_tau(tau)));
  }
  out.push_back(make_triple("eg_as_gd_projected"));
  return out;
}

std::vector<Vector> sample_condition_points(const Triple& t, Index dim, int count,
                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(t.sample_u(rng, t.dimension(dim)));
  return out;
}

Loss seeded_convex_loss(const Triple& t, Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Index n = t.dimension(dim);
  const Vector a = uniform_box(rng, n, 2.0, 8.0) * t.curvature_scale;
  const Vector minimizer = t.sample_w(rng, n);
  return diag_quadratic_loss(-a.cwiseProduct(minimizer), a);
}

EquivalenceRun run_equivalence(const Triple& t, const Loss& loss, const Vector& w0, double eta,
                               double horizon, const ReparamOptions& opt,
                               const std::optional<Potential>& direct) {
  const Potential& f = direct ? *direct : t.direct;
  FlowProblem p{loss, w0, eta, horizon, f, t.constraint};
  EquivalenceRun run;
  run.direct = integrate_cmd(p, opt.integrate);
  run.reparam = reparam_flow(f, t.reparam, t.q, p, t.lift(w0), opt);
  run.report = equivalence_report(run.direct, run.reparam.w);
  return run;
}

}  // namespace mirrorflow
