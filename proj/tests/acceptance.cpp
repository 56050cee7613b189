// Acceptance runner: one PASS/FAIL line per criterion, exit status 0 iff all pass.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mirrorflow/egupm.hpp"
#include "mirrorflow/flow.hpp"
#include "mirrorflow/geometry.hpp"
#include "mirrorflow/losses.hpp"
#include "mirrorflow/potential.hpp"
#include "mirrorflow/reparam.hpp"

using namespace mirrorflow;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Vector uniform(std::mt19937_64& rng, Index d, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(d);
  for (Index i = 0; i < d; ++i) v[i] = u(rng);
  return v;
}

Vector on_simplex(std::mt19937_64& rng, Index d) {
  Vector w = uniform(rng, d, 0.2, 1.0);
  return w / w.sum();
}

double inf_norm(const Vector& v) { return v.cwiseAbs().maxCoeff(); }

// Largest increase of the loss between consecutive recorded states.
double worst_increase(const Loss& loss, const std::vector<Vector>& states) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < states.size(); ++i) {
    worst = std::max(worst, loss.value(states[i]) - loss.value(states[i - 1]));
  }
  return worst;
}

struct Descent {
  double worst = -std::numeric_limits<double>::infinity();
  long trajectories = 0;
  void add(const Loss& loss, const std::vector<Vector>& states) {
    worst = std::max(worst, worst_increase(loss, states));
    ++trajectories;
  }
};

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

FlowProblem problem(Loss loss, Vector w0, Potential p, double horizon,
                    std::optional<Constraint> c = std::nullopt) {
  return FlowProblem{std::move(loss), std::move(w0), 1.0, horizon, std::move(p), std::move(c)};
}

ReparamOptions at_step(double h) {
  ReparamOptions o;
  o.integrate.step = h;
  return o;
}

// --- 1 ---------------------------------------------------------------------------------

void condition_suite() {
  constexpr double kLimit = 5.0;
  const auto t0 = Clock::now();
  double worst = 0.0;
  bool pass = true;
  std::string worst_name;
  int count = 0;
  for (const Triple& t : registered_triples()) {
    const auto pts = sample_condition_points(t, t.dimension(10), 100, 2024);
    const ConditionReport r = check_condition(t.direct, t.reparam, t.q, pts);
    pass = pass && r.pass && r.samples == 100;
    if (r.max_residual >= worst) {
      worst = r.max_residual;
      worst_name = t.name;
    }
    ++count;
  }
  const double dt = seconds_since(t0);
  report(1, "condition suite", pass && dt < kLimit,
         fmt("%d triples x 100 points, max residual %.2e (%s) <= %.0e; %.2f s < %.0f s", count, worst,
             worst_name.c_str(), kConditionTolerance, dt, kLimit));
}

// --- 2 ---------------------------------------------------------------------------------

void equivalence_suite(Descent& descent) {
  constexpr double kTol = 1e-6, kShrink = 4.0, kLimit = 60.0;
  const auto t0 = Clock::now();
  double worst_dev = 0.0, worst_ratio = std::numeric_limits<double>::infinity();
  std::string worst_dev_name, worst_ratio_name;
  bool pass = true;
  int runs = 0;
  for (const Triple& t : registered_triples()) {
    const Index d = t.dimension(10);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const Loss loss = seeded_convex_loss(t, d, seed);
      std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
      const Vector w0 = t.sample_w(rng, d);
      const EquivalenceRun full = run_equivalence(t, loss, w0, 1.0, 5.0, at_step(1e-3));
      const EquivalenceRun half = run_equivalence(t, loss, w0, 1.0, 5.0, at_step(5e-4));
      descent.add(loss, full.direct.states);
      descent.add(loss, full.reparam.w.states);
      const double dev = full.report.max_dev, dev_half = half.report.max_dev;
      const bool shrinks = dev_half * kShrink <= dev;
      pass = pass && dev <= kTol && shrinks;
      if (dev >= worst_dev) {
        worst_dev = dev;
        worst_dev_name = t.name;
      }
      if (dev > 0.0 && dev / dev_half < worst_ratio) {
        worst_ratio = dev / dev_half;
        worst_ratio_name = t.name;
      }
      ++runs;
    }
  }
  const double dt = seconds_since(t0);
  report(2, "flow-equivalence suite", pass && dt < kLimit,
         fmt("%d runs (rk4, step 1e-3, T=5, d=10), max_dev %.2e (%s) <= %.0e; smallest halving ratio "
             "%.1f (%s) >= %.0f; %.1f s < %.0f s",
             runs, worst_dev, worst_dev_name.c_str(), kTol, worst_ratio, worst_ratio_name.c_str(),
             kShrink, dt, kLimit));
}

// --- 3 ---------------------------------------------------------------------------------

struct Sampled {
  Potential p;
  double lo, hi;
};

std::vector<Sampled> registry() {
  return {{gd_potential(), -2.0, 2.0},         {egu_potential(), 0.3, 3.0},
          {burg_potential(), 0.3, 3.0},        {reduced_eg2_potential(), 0.2, 0.8},
          {tempered_potential(0.0), 0.3, 3.0}, {tempered_potential(0.5), 0.3, 3.0},
          {tempered_potential(1.0), 0.3, 3.0}, {tempered_potential(1.5), 0.3, 3.0}};
}

void identity_suite() {
  constexpr double kFlowTol = 1e-6, kMomTol = 1e-10;
  std::mt19937_64 rng(3);
  double flow_dev = 0.0;
  std::string flow_name;
  for (const Sampled& s : registry()) {
    const Vector w0 = uniform(rng, 5, s.lo, s.hi);
    const Vector center = uniform(rng, 5, s.lo, s.hi);
    const FlowProblem p = problem(diag_quadratic_loss(-center, Vector::Ones(5)), w0, s.p, 2.0);
    const double dev = equivalence_report(integrate_cmd(p, 1e-3), integrate_dual(p, 1e-3)).max_dev;
    if (dev >= flow_dev) {
      flow_dev = dev;
      flow_name = s.p.name();
    }
  }
  double mom_dev = 0.0;
  int evals = 0;
  const auto pots = registry();
  for (int k = 0; k < 1000; ++k) {
    const Sampled& s = pots[static_cast<std::size_t>(k) % pots.size()];
    const Vector w = uniform(rng, 4, s.lo, s.hi), w0 = uniform(rng, 4, s.lo, s.hi);
    const Vector wd = uniform(rng, 4, -2.0, 2.0);
    const double a = bregman_momentum(s.p, w, wd, w0);
    const double b = dual_momentum(s.p, w, wd, w0);
    mom_dev = std::max(mom_dev, std::abs(a - b) / std::max(1.0, std::abs(a)));
    ++evals;
  }
  report(3, "primal-dual and momentum identities", flow_dev <= kFlowTol && mom_dev <= kMomTol,
         fmt("dual vs primal flow max_dev %.2e (%s) <= %.0e over %zu potentials; momentum gap %.2e <= "
             "%.0e over %d evaluations",
             flow_dev, flow_name.c_str(), kFlowTol, pots.size(), mom_dev, kMomTol, evals));
}

// --- 4 ---------------------------------------------------------------------------------

void projection_suite(Descent& descent) {
  constexpr double kIdem = 1e-10, kSimplex = 1e-8, kMatch = 1e-6;
  std::mt19937_64 rng(4);
  double idem = 0.0;
  const Constraint simplex = simplex_constraint();
  for (const Potential& p : {gd_potential(), egu_potential(), burg_potential(), tempered_potential(0.5)}) {
    for (int k = 0; k < 100; ++k) {
      const Matrix pr = projection_matrix(p, simplex, uniform(rng, 8, 0.1, 2.0));
      idem = std::max(idem, (pr * pr - pr).cwiseAbs().maxCoeff());
    }
  }
  const ReparamMap q = quarter_square_map();
  for (const Potential& g : {gd_potential(), burg_potential()}) {
    for (int k = 0; k < 100; ++k) {
      const Matrix pr = reparam_projection_matrix(g, simplex, q, uniform(rng, 8, 0.1, 3.0));
      idem = std::max(idem, (pr * pr - pr).cwiseAbs().maxCoeff());
    }
  }

  const Triple t = make_triple("eg_as_gd_projected");
  double drift = 0.0, match = 0.0;
  for (int k = 0; k < 5; ++k) {
    const Vector w0 = on_simplex(rng, 10);
    const Loss loss = k % 2 ? linear_loss(uniform(rng, 10, -1, 1))
                            : diag_quadratic_loss(uniform(rng, 10, -1, 1), uniform(rng, 10, 1, 4));
    const EquivalenceRun run = run_equivalence(t, loss, w0, 1.0, 5.0, at_step(1e-3));
    for (const Vector& w : run.direct.states) drift = std::max(drift, std::abs(w.sum() - 1.0));
    for (const Vector& w : run.reparam.w.states) drift = std::max(drift, std::abs(w.sum() - 1.0));
    match = std::max(match, run.report.max_dev);
    descent.add(loss, run.direct.states);
    descent.add(loss, run.reparam.w.states);
  }
  report(4, "projection suite", idem <= kIdem && drift <= kSimplex && match <= kMatch,
         fmt("idempotence error %.2e <= %.0e; simplex drift over T=5 %.2e <= %.0e; constrained "
             "reparameterized vs projected EG %.2e <= %.0e",
             idem, kIdem, drift, kSimplex, match, kMatch));
}

// --- 5 ---------------------------------------------------------------------------------

void discretization_suite() {
  constexpr double kLo = 1.7, kHi = 2.3, kSum = 1e-14;
  const std::vector<double> etas = {1e-2, 5e-3, 2.5e-3};
  std::mt19937_64 rng(5);
  const Index d = 6;
  const Loss loss = diag_quadratic_loss(uniform(rng, d, -1, 1), uniform(rng, d, 1, 3));
  const Vector w0_free = uniform(rng, d, 0.5, 1.5);
  const Vector w0_simplex = on_simplex(rng, d);
  const Vector free_ref = integrate_cmd(problem(loss, w0_free, egu_potential(), 1.0), 1e-4).final_state();
  const Vector simplex_ref =
      integrate_cmd(problem(loss, w0_simplex, egu_potential(), 1.0, simplex_constraint()), 1e-4).final_state();

  using Update = std::function<Vector(const Vector&, const Vector&, double)>;
  struct Rule {
    const char* name;
    Update step;
    bool on_simplex;
  };
  const Constraint simplex = simplex_constraint();
  const std::vector<Rule> rules = {
      {"prod", step_prod, false},
      {"eg_approximated", step_eg_approximated, true},
      {"eg_normalized", step_eg_normalized, true},
      {"projected_then_bregman",
       [&](const Vector& w, const Vector& g, double eta) {
         return step_projected_then_bregman(egu_potential(), simplex, w, g, eta);
       },
       true}};

  bool pass = true;
  std::string detail;
  for (const Rule& r : rules) {
    std::vector<double> errs;
    for (double eta : etas) {
      Vector w = r.on_simplex ? w0_simplex : w0_free;
      for (long k = 0; k < std::lround(1.0 / eta); ++k) w = r.step(w, loss.gradient(w), eta);
      errs.push_back(inf_norm(w - (r.on_simplex ? simplex_ref : free_ref)));
    }
    const double r1 = errs[0] / errs[1], r2 = errs[1] / errs[2];
    pass = pass && r1 >= kLo && r1 <= kHi && r2 >= kLo && r2 <= kHi;
    detail += fmt("%s %.3f/%.3f, ", r.name, r1, r2);
  }
  double sum_err = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Vector w = on_simplex(rng, 8);
    sum_err = std::max(sum_err, std::abs(step_eg_approximated(w, uniform(rng, 8, -1, 1), 0.5).sum() - 1.0));
  }
  pass = pass && sum_err <= kSum;
  report(5, "discretization suite", pass,
         fmt("endpoint error ratios over eta 1e-2/5e-3/2.5e-3 in [%.1f, %.1f]: %sapproximated EG sum "
             "error %.1e <= %.0e",
             kLo, kHi, detail.c_str(), sum_err, kSum));
}

// --- 6 ---------------------------------------------------------------------------------

void min_norm_suite(Descent& descent) {
  constexpr double kResidual = 1e-4, kGap0 = 1e-3, kGap1 = 1e-2, kKkt = 1e-3, kAgree = 1e-4,
                   kLimit = 120.0;
  const auto t0 = Clock::now();
  const RegressionInstance inst = RegressionInstance::generate(10, 40, 0);
  SweepOptions opt;
  opt.alpha = 1e-5;
  opt.flow.eta = 0.05;
  const std::vector<double> taus = {0.0, 0.5, 1.0};
  const std::vector<SweepRow> rows = norm_sweep(inst, taus, opt);
  const double dt = seconds_since(t0);

  bool residual_ok = true, errors_ok = true, descent_ok = true;
  double worst_residual = 0.0;
  for (const SweepRow& r : rows) {
    errors_ok = errors_ok && r.error.empty() && r.converged;
    residual_ok = residual_ok && r.relative_residual <= kResidual;
    worst_residual = std::max(worst_residual, r.relative_residual);
    descent_ok = descent_ok && r.loss_monotone;
  }
  const auto row = [&](double tau, const char* method) -> const SweepRow& {
    for (const SweepRow& r : rows) {
      if (r.tau == tau && r.method == method) return r;
    }
    throw std::logic_error("missing sweep row");
  };
  const auto gap = [](const SweepRow& r) { return std::abs(r.norm - r.oracle_norm) / r.oracle_norm; };
  const double gap0 = gap(row(0.0, "direct"));
  const double gap1 = gap(row(1.0, "direct"));
  const auto kkt_of = [](const SweepRow& r) { return std::max({r.feasibility, r.stationarity, r.slackness}); };
  const double kkt_direct = kkt_of(row(0.5, "direct"));
  const double kkt_reparam = kkt_of(row(0.5, "reparam"));
  const double kkt = std::max(kkt_direct, kkt_reparam);
  double agree = 0.0;
  for (double tau : taus) {
    const SweepRow& a = row(tau, "direct");
    const SweepRow& b = row(tau, "reparam");
    agree = std::max(agree, std::abs(a.norm - b.norm) / a.norm);
  }
  const bool pass = errors_ok && residual_ok && gap0 <= kGap0 && gap1 <= kGap1 && kkt <= kKkt &&
                    agree <= kAgree && dt < kLimit;
  report(6, "minimum-norm suite", pass,
         fmt("alpha 1e-5, eta 0.05: rows converged %s; residual %.1e <= %.0e |y| %s; tau=0 gap %.2e <= "
             "%.0e %s; tau=1 L1 gap %.2e <= %.0e %s; tau=0.5 KKT direct %.2e, reparam %.2e <= %.0e %s; direct vs reparam "
             "norm %.2e <= %.0e %s; %.1f s < %.0f s",
             errors_ok ? "yes" : "NO", worst_residual, kResidual, residual_ok ? "ok" : "FAIL", gap0,
             kGap0, gap0 <= kGap0 ? "ok" : "FAIL", gap1, kGap1, gap1 <= kGap1 ? "ok" : "FAIL", kkt_direct, kkt_reparam, kKkt,
             kkt <= kKkt ? "ok" : "FAIL", agree, kAgree, agree <= kAgree ? "ok" : "FAIL", dt, kLimit));
  if (!descent_ok) descent.worst = std::max(descent.worst, 1.0);
  descent.trajectories += static_cast<long>(rows.size());
}

void alpha_sensitivity() {
  const RegressionInstance inst = RegressionInstance::generate(10, 40, 0);
  std::printf("  alpha sensitivity (direct flow, eta 0.05): alpha, tau=0 gap, tau=0.5 KKT, tau=1 L1 gap\n");
  const double oracle0 = min_norm_oracle(inst, 0.0).norm();
  const double oracle1 = min_norm_oracle(inst, 1.0).lpNorm<1>();
  for (double alpha : {1e-3, 1e-5, 1e-7}) {
    const PmTrajectory t0 = tempered_egu_pm_flow(inst, 0.0, alpha);
    const PmTrajectory th = tempered_egu_pm_flow(inst, 0.5, alpha);
    const PmTrajectory t1 = tempered_egu_pm_flow(inst, 1.0, alpha);
    const KktReport k = kkt_residuals(inst, 0.5, th.final_state(), alpha);
    std::printf("    %.0e  %.2e  %.2e  %.2e\n", alpha,
                std::abs(t0.final_state().w().norm() - oracle0) / oracle0,
                std::max({k.feasibility, k.stationarity, k.slackness}),
                std::abs(t1.final_state().w().lpNorm<1>() - oracle1) / oracle1);
  }
}

}  // namespace

int main(int argc, char** argv) {
  const bool sensitivity = argc > 1 && std::string(argv[1]) == "--alpha-sensitivity";
  Descent descent;
  try {
    condition_suite();
    equivalence_suite(descent);
    identity_suite();
    projection_suite(descent);
    discretization_suite();
    min_norm_suite(descent);
    constexpr double kSlack = 1e-9;
    report(7, "loss descent", descent.worst <= kSlack,
           fmt("%ld trajectories from criteria 2, 4, 6; largest loss increase %.2e <= %.0e",
               descent.trajectories, std::max(descent.worst, 0.0), kSlack));
    if (sensitivity) alpha_sensitivity();
  } catch (const std::exception& e) {
    std::printf("[FAIL] acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d of 7 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
