#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mirrorflow/errors.hpp"
#include "mirrorflow/flow.hpp"
#include "mirrorflow/losses.hpp"
#include "mirrorflow/numdiff.hpp"
#include "test_util.hpp"

using namespace mirrorflow;
using mirrorflow::testing::max_abs;
using mirrorflow::testing::uniform_vector;
using mirrorflow::testing::vec;

namespace {

struct Sampled {
  Potential p;
  double lo, hi;
};

std::vector<Sampled> registry() {
  return {{gd_potential(), -2.0, 2.0},          {egu_potential(), 0.3, 3.0},
          {burg_potential(), 0.3, 3.0},         {reduced_eg2_potential(), 0.2, 0.8},
          {tempered_potential(0.5), 0.3, 3.0},  {tempered_potential(1.5), 0.3, 3.0}};
}

FlowProblem problem(Loss loss, Vector w0, Potential p, double eta = 1.0, double horizon = 1.0,
                    std::optional<Constraint> c = std::nullopt) {
  return FlowProblem{std::move(loss), std::move(w0), eta, horizon, std::move(p), std::move(c)};
}

// Scalar root of h on [lo, hi] by bisection; h(lo) and h(hi) must differ in sign.
double bisect(const std::function<double(double)>& h, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if ((h(mid) > 0) == (h(lo) > 0)) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double max_dev(const Trajectory& a, const Trajectory& b) {
  REQUIRE(a.states.size() == b.states.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.states.size(); ++i) m = std::max(m, max_abs(Vector(a.states[i] - b.states[i])));
  return m;
}

}  // namespace

TEST_CASE("closed-form CMD endpoints") {
  const Trajectory gd = integrate_cmd(problem(quadratic_loss(vec({0})), vec({1}), gd_potential()), 1e-3);
  CHECK(std::abs(gd.final_state()[0] - std::exp(-1.0)) < 1e-6);
  CHECK(gd.times.back() == 1.0);
  const Trajectory egu = integrate_cmd(problem(linear_loss(vec({1})), vec({2}), egu_potential()), 1e-3);
  CHECK(std::abs(egu.final_state()[0] - 2 * std::exp(-1.0)) < 1e-6);
}

TEST_CASE("trajectory times strictly increase and respect record_every") {
  const FlowProblem p = problem(linear_loss(vec({1, -1})), vec({1, 1}), egu_potential(), 1.0, 0.55);
  const Trajectory t = integrate_cmd(p, IntegrateOptions{0.1, Scheme::rk4, 2});
  for (std::size_t i = 1; i < t.times.size(); ++i) CHECK(t.times[i] > t.times[i - 1]);
  CHECK(t.times.front() == 0.0);
  CHECK(t.times.back() == doctest::Approx(0.55));
}

TEST_CASE("projected EG conserves the simplex") {
  std::mt19937_64 rng(1);
  Vector w0 = uniform_vector(rng, 6, 0.1, 1);
  w0 /= w0.sum();
  const FlowProblem p = problem(linear_loss(uniform_vector(rng, 6, -1, 1)), w0, egu_potential(), 1.0,
                                5.0, simplex_constraint());
  const Trajectory t = integrate_cmd(p, 1e-3);
  for (const Vector& w : t.states) CHECK(std::abs(w.sum() - 1.0) <= 1e-8);
  // Closed form: w_i(t) proportional to w0_i exp(-g_i t).
  const Vector g = p.loss.gradient(w0);
  Vector ref = w0.array() * (-g.array() * 5.0).exp();
  ref /= ref.sum();
  CHECK(max_abs(Vector(t.final_state() - ref)) < 1e-9);
}

TEST_CASE("dual flow matches primal flow") {
  SUBCASE("EGU linear loss") {
    const FlowProblem p = problem(linear_loss(vec({1, -0.5})), vec({2, 1}), egu_potential());
    CHECK(max_dev(integrate_cmd(p, 1e-3), integrate_dual(p, 1e-3)) < 1e-8);
  }
  SUBCASE("GD is identical") {
    const FlowProblem p = problem(quadratic_loss(vec({1, 2})), vec({0, 0}), gd_potential());
    const Trajectory d = integrate_dual(p, 1e-3);
    CHECK(max_dev(integrate_cmd(p, 1e-3), d) < 1e-15);
    CHECK(max_abs(Vector(d.dual_states.back() - d.states.back())) == 0.0);
  }
  SUBCASE("every registry potential, random quadratic") {
    std::mt19937_64 rng(2);
    for (const auto& s : registry()) {
      CAPTURE(s.p.name());
      const Vector w0 = uniform_vector(rng, 4, s.lo, s.hi);
      const Vector center = uniform_vector(rng, 4, s.lo, s.hi);
      const FlowProblem p = problem(diag_quadratic_loss(-center, Vector::Ones(4)), w0, s.p);
      CHECK(max_dev(integrate_cmd(p, 1e-3), integrate_dual(p, 1e-3)) < 1e-6);
    }
  }
}

TEST_CASE("loss is non-increasing along CMD flows") {
  std::mt19937_64 rng(3);
  for (const auto& s : registry()) {
    const Vector w0 = uniform_vector(rng, 5, s.lo, s.hi);
    const Vector center = uniform_vector(rng, 5, s.lo, s.hi);
    const FlowProblem p = problem(quadratic_loss(center), w0, s.p, 1.0, 3.0);
    const Trajectory t = integrate_cmd(p, 1e-2);
    for (std::size_t i = 1; i < t.states.size(); ++i) {
      CHECK(p.loss.value(t.states[i]) <= p.loss.value(t.states[i - 1]) + 1e-9);
    }
  }
}

TEST_CASE("step refinement orders") {
  const FlowProblem p = problem(quadratic_loss(vec({0.2, 1.5})), vec({2.0, 0.5}), egu_potential(), 1.0, 1.0);
  for (Scheme scheme : {Scheme::euler, Scheme::rk4}) {
    const double h = scheme == Scheme::euler ? 1e-2 : 1e-1;
    const Vector ref = integrate_cmd(p, h / 8, scheme).final_state();
    const double e1 = max_abs(Vector(integrate_cmd(p, h, scheme).final_state() - ref));
    const double e2 = max_abs(Vector(integrate_cmd(p, h / 2, scheme).final_state() - ref));
    // Against an h/8 reference the ratio is (1 - 8^-p) / (2^-p - 8^-p) for order p.
    const double expected = scheme == Scheme::euler ? (1 - 0.125) / (0.5 - 0.125)
                                                    : (1 - std::pow(8.0, -4)) / (std::pow(2.0, -4) - std::pow(8.0, -4));
    CAPTURE(ode::scheme_name(scheme));
    CHECK(e1 / e2 == doctest::Approx(expected).epsilon(0.1));
  }
}

TEST_CASE("discrete explicit MD tracks the continuous flow at first order") {
  std::mt19937_64 rng(4);
  for (const auto& s : registry()) {
    CAPTURE(s.p.name());
    const Vector w0 = uniform_vector(rng, 3, s.lo, s.hi);
    const Vector center = uniform_vector(rng, 3, s.lo, s.hi);
    const Loss loss = diag_quadratic_loss(-0.5 * center, Vector::Constant(3, 0.5));
    const FlowProblem p = problem(loss, w0, s.p, 1.0, 1.0);
    const Vector exact = integrate_cmd(p, 1e-3).final_state();
    std::vector<double> errs;
    for (double h : {0.02, 0.01, 0.005}) {
      Vector w = w0;
      for (int k = 0; k < static_cast<int>(std::lround(1.0 / h)); ++k) w = step_md_explicit(s.p, w, loss.gradient(w), h);
      errs.push_back(max_abs(Vector(w - exact)));
    }
    CHECK(errs[0] / errs[1] == doctest::Approx(2.0).epsilon(0.15));
    CHECK(errs[1] / errs[2] == doctest::Approx(2.0).epsilon(0.15));
  }
}

TEST_CASE("domain exit is reported with time and coordinate") {
  const FlowProblem p = problem(linear_loss(vec({0.1, 1.0})), vec({1, 1}), egu_potential(), 1.0, 5.0);
  try {
    integrate_cmd(p, 2.0, Scheme::euler);
    FAIL("expected a domain exit");
  } catch (const DomainExit& e) {
    CHECK(e.coordinate() == 1);
    CHECK(e.time() == doctest::Approx(2.0));
  }
  const FlowProblem blowup = problem(linear_loss(vec({-1.0})), vec({1}), burg_potential(), 1.0, 5.0);
  CHECK_THROWS_AS(integrate_cmd(blowup, 1e-2), Error);
}

TEST_CASE("flow problem validation") {
  CHECK_THROWS_AS(integrate_cmd(problem(linear_loss(vec({1})), vec({-1}), egu_potential()), 1e-2), DomainError);
  CHECK_THROWS_AS(integrate_cmd(problem(linear_loss(vec({1, 1})), vec({0.5, 0.6}), egu_potential(), 1, 1,
                                        simplex_constraint()), 1e-2),
                  DomainError);
  CHECK_THROWS_AS(integrate_cmd(problem(linear_loss(vec({1})), vec({1}), egu_potential(), -1.0), 1e-2), ConfigError);
  CHECK_THROWS_AS(integrate_cmd(problem(linear_loss(vec({1})), vec({1}), egu_potential()), 0.0), ConfigError);
}

TEST_CASE("explicit MD step examples") {
  CHECK(max_abs(Vector(step_md_explicit(gd_potential(), vec({1, 2}), vec({1, 1}), 0.5) - vec({0.5, 1.5}))) < 1e-15);
  CHECK(step_md_explicit(egu_potential(), vec({1}), vec({1}), std::log(2.0))[0] == doctest::Approx(0.5));
  CHECK(step_md_explicit(tempered_potential(0.5), vec({1}), vec({1}), 1.0)[0] == doctest::Approx(0.25));
  // exp_0.5 clips: log_0.5(1) - 3 = -3 lies below the range -2 of the link
  CHECK_THROWS_AS(step_md_explicit(tempered_potential(0.5), vec({1}), vec({3}), 1.0), StepTooLarge);
  CHECK_THROWS_AS(step_md_explicit(burg_potential(), vec({1}), vec({-2}), 1.0), StepTooLarge);
}

TEST_CASE("implicit MD step") {
  const Loss shifted = quadratic_loss(vec({2}));
  CHECK(step_md_implicit(gd_potential(), vec({0}), shifted.gradient, 1.0)[0] == doctest::Approx(1.0).epsilon(1e-9));
  const auto zero = [](const Vector& w) { return Vector(Vector::Zero(w.size())); };
  CHECK(max_abs(Vector(step_md_implicit(egu_potential(), vec({0.3, 2}), zero, 1.0) - vec({0.3, 2}))) == 0.0);
  const Loss l = quadratic_loss(vec({1}));
  const double w = step_md_implicit(egu_potential(), vec({2}), l.gradient, 0.1)[0];
  const double oracle = bisect([](double x) { return std::log(x) - std::log(2.0) + 0.1 * (x - 1); }, 0.5, 2.0);
  CHECK(std::abs(w - oracle) < 1e-10);
  ImplicitOptions tight;
  tight.max_iter = 2;
  tight.tol = 1e-15;
  CHECK_THROWS_AS(step_md_implicit(egu_potential(), vec({2}), l.gradient, 0.1, tight), NoConvergence);
}

TEST_CASE("prod update") {
  CHECK(max_abs(Vector(step_prod(vec({1, 2}), vec({0.1, 0.2}), 1.0) - vec({0.9, 1.6}))) < 1e-15);
  CHECK(max_abs(Vector(step_prod(vec({1, 2}), vec({0, 0}), 1.0) - vec({1, 2}))) == 0.0);
  CHECK_THROWS_AS(step_prod(vec({1}), vec({2}), 0.5), StepTooLarge);
  const Vector w = vec({0.5, 1.5, 2}), g = vec({0.3, -0.7, 1.1});
  const auto gap = [&](double eta) {
    return max_abs(Vector(step_prod(w, g, eta) - step_md_explicit(egu_potential(), w, g, eta)));
  };
  CHECK(gap(1e-2) / gap(5e-3) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("normalized EG update") {
  const Vector half = vec({0.5, 0.5});
  CHECK(max_abs(Vector(step_eg_normalized(half, vec({1, 0}), std::log(2.0)) - vec({1.0 / 3, 2.0 / 3}))) < 1e-15);
  const Vector w = vec({0.2, 0.3, 0.5});
  CHECK(max_abs(Vector(step_eg_normalized(w, vec({4, 4, 4}), 0.7) - w)) < 1e-15);
  const Vector sym = step_eg_normalized(vec({0.25, 0.25, 0.25, 0.25}), vec({1, -1, -1, 1}), 0.3);
  CHECK(sym[0] == sym[3]);
  CHECK(sym[1] == sym[2]);
  // large exponents stay finite
  const Vector big = step_eg_normalized(half, vec({-1000, 0}), 1.0);
  CHECK(big.allFinite());
  CHECK(big[0] == doctest::Approx(1.0));
}

TEST_CASE("approximated EG update") {
  const Vector half = vec({0.5, 0.5});
  CHECK(max_abs(Vector(step_eg_approximated(half, vec({1, 0}), 1.0) - vec({0.25, 0.75}))) < 1e-15);
  CHECK(max_abs(Vector(step_eg_approximated(half, vec({0, 0}), 1.0) - half)) == 0.0);
  std::mt19937_64 rng(5);
  for (int k = 0; k < 200; ++k) {
    Vector w = uniform_vector(rng, 8, 0.1, 1);
    w /= w.sum();
    const Vector out = step_eg_approximated(w, uniform_vector(rng, 8, -1, 1), 0.3);
    CHECK(std::abs(out.sum() - 1.0) <= 1e-14);
  }
  CHECK_THROWS_AS(step_eg_approximated(half, vec({5, 0}), 1.0), StepTooLarge);
}

TEST_CASE("projected step then bregman projection") {
  const Vector half = vec({0.5, 0.5});
  const Vector g = vec({1, 0});
  const double eta = 0.4;
  Vector manual = half.array() * (-eta * vec({0.5, -0.5}).array()).exp();
  manual /= manual.sum();
  const Vector out = step_projected_then_bregman(egu_potential(), simplex_constraint(), half, g, eta);
  CHECK(max_abs(Vector(out - manual)) < 1e-15);
  CHECK(max_abs(Vector(step_projected_then_bregman(egu_potential(), simplex_constraint(), half, vec({0, 0}), eta) - half)) == 0.0);
  // For EGU on the simplex the projected gradient differs from g by a multiple of 1, which
  // the normalization removes, so it coincides with normalized EG.
  std::mt19937_64 rng(6);
  Vector w = uniform_vector(rng, 5, 0.1, 1);
  w /= w.sum();
  const Vector gr = uniform_vector(rng, 5, -1, 1);
  for (double e : {1e-2, 5e-3}) {
    CHECK(max_abs(Vector(step_projected_then_bregman(egu_potential(), simplex_constraint(), w, gr, e) -
                         step_eg_normalized(w, gr, e))) < 1e-15);
  }
  const Vector burg = step_projected_then_bregman(burg_potential(), simplex_constraint(), w, gr, 1e-2);
  CHECK(std::abs(burg.sum() - 1.0) < 1e-14);
}

TEST_CASE("trajectory CSV") {
  const FlowProblem p = problem(linear_loss(vec({1, 1})), vec({1, 2}), egu_potential(), 1.0, 0.2);
  const Trajectory t = integrate_cmd(p, 0.1);
  std::ostringstream os;
  write_trajectory_csv(os, t);
  std::istringstream is(os.str());
  std::string header, row;
  std::getline(is, header);
  CHECK(header == "t,w_1,w_2");
  int rows = 0;
  std::vector<std::string> second;
  while (std::getline(is, row)) {
    if (rows == 1) {
      std::stringstream cells(row);
      for (std::string c; std::getline(cells, c, ',');) second.push_back(c);
    }
    ++rows;
  }
  CHECK(rows == 3);
  REQUIRE(second.size() == 3);
  // 17 significant digits round-trip exactly
  CHECK(std::stod(second[1]) == t.states[1][0]);
  CHECK(std::stod(second[2]) == t.states[1][1]);
}
