#include "mirrorflow/egupm.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/QR>

#include "mirrorflow/errors.hpp"
#include "mirrorflow/kernels.hpp"
#include "mirrorflow/linalg.hpp"
#include "mirrorflow/lp_simplex.hpp"
#include "mirrorflow/potential.hpp"

namespace mirrorflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_tau(double tau) {
  if (tau == 2.0) throw UnsupportedTemperature("q_tau is undefined at tau = 2");
  if (!std::isfinite(tau)) throw UnsupportedTemperature("q_tau: non-finite tau");
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace

// --- q_tau ------------------------------------------------------------------------

Vector q_tau(const Vector& u, double tau) {
  require_tau(tau);
  const double e = 2.0 / (2.0 - tau);
  const double c = std::pow((2.0 - tau) / 2.0, e);
  return (c * u.array().abs().pow(e)).matrix();
}

Vector q_tau_jacobian_diag(const Vector& u, double tau) {
  require_tau(tau);
  const double e = tau / (2.0 - tau);
  const double c = std::pow((2.0 - tau) / 2.0, e);
  Vector out(u.size());
  for (Index i = 0; i < u.size(); ++i) out[i] = c * sign(u[i]) * std::pow(std::abs(u[i]), e);
  return out;
}

Vector q_tau_inverse(const Vector& w, double tau) {
  require_tau(tau);
  for (Index i = 0; i < w.size(); ++i) {
    if (!(w[i] >= 0.0)) throw DomainError("q_tau_inverse: negative weight", i);
  }
  return ((2.0 / (2.0 - tau)) * w.array().pow((2.0 - tau) / 2.0)).matrix();
}

ReparamMap q_tau_map(double tau) {
  require_tau(tau);
  const double e = 2.0 / (2.0 - tau);
  const double c = std::pow((2.0 - tau) / 2.0, e);
  const double je = tau / (2.0 - tau);
  const double jc = std::pow((2.0 - tau) / 2.0, je);
  const double ie = (2.0 - tau) / 2.0;
  const double ic = 2.0 / (2.0 - tau);
  return elementwise_map(
      "q_tau:" + format_double(tau), [c, e](double u) { return c * std::pow(std::abs(u), e); },
      [jc, je](double u) { return jc * sign(u) * std::pow(std::abs(u), je); },
      [ic, ie](double w) { return ic * std::pow(w, ie); });
}

// --- regression instance ----------------------------------------------------------

RegressionInstance RegressionInstance::from_data(Matrix x, Vector y, std::uint64_t seed,
                                                 Index sparsity) {
  if (x.rows() != y.size()) throw InstanceError("instance: X and y differ in rows");
  if (!(x.rows() < x.cols())) {
    throw InstanceError("instance: need N < d for an underdetermined problem");
  }
  if (!x.allFinite() || !y.allFinite()) throw InstanceError("instance: non-finite data");
  if (linalg::row_rank(x) != x.rows()) throw InstanceError("instance: X is not full row rank");
  RegressionInstance inst;
  inst.x = std::move(x);
  inst.y = std::move(y);
  inst.seed = seed;
  inst.sparsity = sparsity;
  return inst;
}

RegressionInstance RegressionInstance::generate(Index n, Index d, std::uint64_t seed,
                                                Index sparsity) {
  if (n <= 0 || d <= 0) throw InstanceError("instance: N and d must be positive");
  const Index k = sparsity > 0 ? sparsity : std::max<Index>(1, d / 10);
  if (k > d) throw InstanceError("instance: sparsity exceeds d");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) x(i, j) = normal(rng);
  }
  std::vector<Index> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  Vector w_star = Vector::Zero(d);
  for (Index i = 0; i < k; ++i) w_star[idx[static_cast<std::size_t>(i)]] = 1.0;
  Vector y = x * w_star;
  RegressionInstance inst = from_data(std::move(x), std::move(y), seed, k);
  inst.w_star = std::move(w_star);
  return inst;
}

// --- EGU+- dynamics ------------------------------------------------------------------

namespace {

void validate_pm(const RegressionInstance& inst, double tau, double alpha, const PmOptions& opt) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("EGU+- flow: need 0 <= tau <= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("EGU+- flow: alpha must be > 0");
  if (!(opt.eta > 0.0) || !std::isfinite(opt.eta)) throw ConfigError("EGU+- flow: eta must be > 0");
  if (inst.x.rows() != inst.y.size()) throw InstanceError("EGU+- flow: malformed instance");
}

ode::Options pm_ode_options(const RegressionInstance& inst, const PmOptions& opt,
                            std::function<Vector(const Vector&)> weights) {
  ode::Options o;
  o.step = opt.step;
  o.horizon = opt.horizon;
  o.scheme = opt.scheme;
  o.record_every = opt.record_every;
  if (opt.stop_rel_residual > 0.0) {
    const double target = opt.stop_rel_residual * inst.y.norm();
    o.stop = [&inst, target, weights](double, const Vector& s) {
      return (inst.x * weights(s) - inst.y).norm() <= target;
    };
  }
  return o;
}

}  // namespace

PmTrajectory tempered_egu_pm_flow(const RegressionInstance& inst, double tau, double alpha,
                                  const PmOptions& opt) {
  validate_pm(inst, tau, alpha, opt);
  const Index d = inst.d();
  const double eta = opt.eta;
  auto weights = [d, tau](const Vector& s) {
    return Vector(exp_tau(Vector(s.head(d)), tau) - exp_tau(Vector(s.segment(d, d)), tau));
  };
  ode::Rhs rhs = [&](double, const Vector& s) {
    const Vector g = kernels::lsq_gradient(inst.x, inst.y, weights(s));
    Vector out(3 * d);
    out.head(d) = -eta * g;
    out.segment(d, d) = eta * g;
    out.tail(d) = eta * g;
    return out;
  };
  Vector s0(3 * d);
  s0.head(2 * d).setConstant(log_tau(alpha, tau));
  s0.tail(d).setZero();
  const ode::Path path = ode::integrate(rhs, s0, pm_ode_options(inst, opt, weights));

  PmTrajectory traj;
  traj.states.reserve(path.states.size());
  for (std::size_t k = 0; k < path.states.size(); ++k) {
    const Vector& s = path.states[k];
    PmState st;
    st.t = path.times[k];
    st.w_plus = exp_tau(Vector(s.head(d)), tau);
    st.w_minus = exp_tau(Vector(s.segment(d, d)), tau);
    st.accumulated_integral = s.tail(d);
    traj.states.push_back(std::move(st));
  }
  const Vector w_final = traj.final_state().w();
  traj.converged = opt.stop_rel_residual <= 0.0 ||
                   (inst.x * w_final - inst.y).norm() <= opt.stop_rel_residual * inst.y.norm();
  return traj;
}

ReparamPmTrajectory tempered_reparam_pm_flow(const RegressionInstance& inst, double tau,
                                             double alpha, const PmOptions& opt) {
  validate_pm(inst, tau, alpha, opt);
  const Index d = inst.d();
  const double eta = opt.eta;
  auto weights = [d, tau](const Vector& s) {
    return Vector(q_tau(Vector(s.head(d)), tau) - q_tau(Vector(s.tail(d)), tau));
  };
  ode::Rhs rhs = [&](double, const Vector& s) {
    const Vector g = kernels::lsq_gradient(inst.x, inst.y, weights(s));
    Vector out(2 * d);
    out.head(d) = -eta * q_tau_jacobian_diag(Vector(s.head(d)), tau).cwiseProduct(g);
    out.tail(d) = eta * q_tau_jacobian_diag(Vector(s.tail(d)), tau).cwiseProduct(g);
    return out;
  };
  const double u_start = q_tau_inverse(Vector::Constant(1, alpha), tau)[0];
  const Vector s0 = Vector::Constant(2 * d, u_start);
  const ode::Path path = ode::integrate(rhs, s0, pm_ode_options(inst, opt, weights));

  ReparamPmTrajectory traj;
  traj.tau = tau;
  traj.states.reserve(path.states.size());
  for (std::size_t k = 0; k < path.states.size(); ++k) {
    const Vector& s = path.states[k];
    traj.states.push_back({path.times[k], s.head(d), s.tail(d), weights(s)});
  }
  traj.converged = opt.stop_rel_residual <= 0.0 ||
                   (inst.x * traj.final_state().w - inst.y).norm() <=
                       opt.stop_rel_residual * inst.y.norm();
  return traj;
}

// --- oracles -----------------------------------------------------------------------

double lp_norm(const Vector& w, double p) {
  if (!(p >= 1.0)) throw ConfigError("lp_norm: need p >= 1");
  if (p == 1.0) return w.lpNorm<1>();
  if (p == 2.0) return w.norm();
  return std::pow(w.array().abs().pow(p).sum(), 1.0 / p);
}

namespace {

Vector pseudoinverse_solution(const RegressionInstance& inst) {
  const Matrix gram = inst.x * inst.x.transpose();
  return inst.x.transpose() * linalg::solve(gram, inst.y);
}

Vector basis_pursuit(const RegressionInstance& inst) {
  const Index d = inst.d();
  Matrix a(inst.n(), 2 * d);
  a << inst.x, -inst.x;
  const lp::Result r = lp::solve_standard_form(Vector::Ones(2 * d), a, inst.y);
  if (r.status != lp::Status::optimal) {
    throw InstanceError("basis pursuit LP did not reach an optimum");
  }
  return r.x.head(d) - r.x.tail(d);
}

/// Minimizes sum |w|^p / p over {X w = y} by gradient steps projected onto the
/// null space of X, Barzilai-Borwein step lengths with Armijo backtracking.
Vector projected_gradient_oracle(const RegressionInstance& inst, double p,
                                 const OracleOptions& opt) {
  const Index d = inst.d();
  const Matrix gram = inst.x * inst.x.transpose();
  const Matrix null_proj = Matrix::Identity(d, d) - inst.x.transpose() * linalg::solve(gram, inst.x);
  const Vector w_ls = pseudoinverse_solution(inst);
  auto objective = [p](const Vector& w) { return w.array().abs().pow(p).sum() / p; };
  auto gradient = [p](const Vector& w) {
    Vector g(w.size());
    for (Index i = 0; i < w.size(); ++i) g[i] = sign(w[i]) * std::pow(std::abs(w[i]), p - 1.0);
    return g;
  };

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector best;
  double best_value = std::numeric_limits<double>::infinity();
  double best_stat = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, opt.restarts); ++r) {
    Vector w = w_ls;
    if (r > 0) {
      Vector z(d);
      for (Index i = 0; i < d; ++i) z[i] = normal(rng);
      w += null_proj * z;
    }
    Vector dir = null_proj * gradient(w);
    double stat = dir.cwiseAbs().maxCoeff();
    double f = objective(w);
    double step = 1.0;
    for (long it = 0; it < opt.max_iter && stat > opt.stationarity_tol; ++it) {
      const double dir_sq = dir.squaredNorm();
      double s = step;
      Vector trial = w - s * dir;
      double f_trial = objective(trial);
      for (int bt = 0; bt < 60 && f_trial > f - 1e-4 * s * dir_sq; ++bt) {
        s *= 0.5;
        trial = w - s * dir;
        f_trial = objective(trial);
      }
      // Re-project to keep X w = y from drifting.
      trial = null_proj * trial + w_ls;
      const Vector new_dir = null_proj * gradient(trial);
      const Vector dw = trial - w;
      const double curv = dw.dot(new_dir - dir);
      step = curv > 0.0 ? dw.squaredNorm() / curv : 1.0;
      w = std::move(trial);
      dir = new_dir;
      f = objective(w);
      stat = dir.cwiseAbs().maxCoeff();
    }
    if (f < best_value) {
      best_value = f;
      best_stat = stat;
      best = w;
    }
  }
  if (!(best_stat <= opt.stationarity_tol)) {
    std::ostringstream os;
    os << "min_norm_oracle: projected gradient stalled at stationarity " << best_stat;
    throw NoConvergence(os.str(), best_stat);
  }
  return best;
}

}  // namespace

Vector min_norm_oracle(const RegressionInstance& inst, double tau, const OracleOptions& opt) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("min_norm_oracle: need 0 <= tau <= 1");
  if (tau == 0.0) return pseudoinverse_solution(inst);
  if (tau == 1.0) return basis_pursuit(inst);
  return projected_gradient_oracle(inst, 2.0 - tau, opt);
}

// --- KKT ---------------------------------------------------------------------------

namespace {

std::vector<Index> support_of(const Vector& w) {
  const double cut = 1e-9 * std::max(1.0, w.cwiseAbs().maxCoeff());
  std::vector<Index> s;
  for (Index i = 0; i < w.size(); ++i) {
    if (std::abs(w[i]) > cut) s.push_back(i);
  }
  return s;
}

/// Least-squares lambda for X_S^T lambda = target_S (minimum norm when underdetermined).
Vector fit_multiplier(const Matrix& x, const Vector& target, const std::vector<Index>& rows) {
  if (rows.empty()) return Vector::Zero(x.rows());
  Matrix a(static_cast<Index>(rows.size()), x.rows());
  Vector b(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    a.row(static_cast<Index>(k)) = x.col(rows[k]).transpose();
    b[static_cast<Index>(k)] = target[rows[k]];
  }
  return a.completeOrthogonalDecomposition().solve(b);
}

bool l1_form(double tau, double alpha) { return is_log_limit(tau) && alpha == 0.0; }

/// Per-coordinate stationarity target v with X^T lambda = v at optimality.
Vector stationarity_target(double tau, const Vector& w, double alpha) {
  if (is_log_limit(tau)) {
    if (alpha > 0.0) return (w.array() / (2.0 * alpha)).asinh().matrix();
    Vector v(w.size());
    for (Index i = 0; i < w.size(); ++i) v[i] = sign(w[i]);
    return v;
  }
  Vector v(w.size());
  for (Index i = 0; i < w.size(); ++i) v[i] = sign(w[i]) * std::pow(std::abs(w[i]), 1.0 - tau);
  return v;
}

struct Residuals {
  double stationarity = 0.0;
  double slackness = 0.0;
};

Residuals residuals_for(double tau, double alpha, const Vector& w, const Vector& w_plus,
                        const Vector& w_minus, const Vector& v, const Vector& xt_lambda) {
  Residuals r;
  const std::vector<Index> supp = support_of(w);
  std::vector<char> on(static_cast<std::size_t>(w.size()), 0);
  for (Index i : supp) on[static_cast<std::size_t>(i)] = 1;
  for (Index i = 0; i < w.size(); ++i) {
    double s = v[i] - xt_lambda[i];
    if (l1_form(tau, alpha) && !on[static_cast<std::size_t>(i)]) {
      // Off the support the subgradient only needs |X^T lambda| <= 1.
      s = std::max(0.0, std::abs(xt_lambda[i]) - 1.0);
    }
    r.stationarity = std::max(r.stationarity, std::abs(s));
    r.slackness = std::max(r.slackness, std::abs(s) * std::max(w_plus[i], w_minus[i]));
  }
  return r;
}

}  // namespace

KktReport kkt_residuals_with_multiplier(const RegressionInstance& inst, double tau,
                                        const Vector& w_plus, const Vector& w_minus,
                                        double alpha, const Vector& lambda) {
  const Vector w = w_plus - w_minus;
  KktReport rep;
  rep.feasibility = (inst.x * w - inst.y).cwiseAbs().maxCoeff();
  const Vector v = stationarity_target(tau, w, alpha);
  const Residuals r = residuals_for(tau, alpha, w, w_plus, w_minus, v, inst.x.transpose() * lambda);
  rep.stationarity = r.stationarity;
  rep.slackness = r.slackness;
  rep.stationarity_from_integral = kNaN;
  rep.multiplier = lambda;
  return rep;
}

KktReport kkt_residuals(const RegressionInstance& inst, double tau, const Vector& w_plus,
                        const Vector& w_minus, double alpha,
                        const std::optional<Vector>& accumulated_integral) {
  const Vector w = w_plus - w_minus;
  const Vector v = stationarity_target(tau, w, alpha);
  // Exact log-scale and power forms hold on every coordinate; the L1 form only
  // pins X^T lambda on the support.
  std::vector<Index> rows;
  if (l1_form(tau, alpha)) {
    rows = support_of(w);
  } else {
    rows.resize(static_cast<std::size_t>(w.size()));
    std::iota(rows.begin(), rows.end(), Index{0});
  }
  const Vector lambda = fit_multiplier(inst.x, v, rows);
  KktReport rep = kkt_residuals_with_multiplier(inst, tau, w_plus, w_minus, alpha, lambda);
  if (accumulated_integral) {
    const double scale = is_log_limit(tau) ? 1.0 : 1.0 - tau;
    rep.stationarity_from_integral = (v + scale * *accumulated_integral).cwiseAbs().maxCoeff();
  }
  return rep;
}

KktReport kkt_residuals(const RegressionInstance& inst, double tau, const PmState& state,
                        double alpha) {
  return kkt_residuals(inst, tau, state.w_plus, state.w_minus, alpha, state.accumulated_integral);
}

// --- sweep -------------------------------------------------------------------------

namespace {

template <typename States, typename WeightsOf>
bool residual_monotone(const RegressionInstance& inst, const States& states, WeightsOf weights_of) {
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& st : states) {
    const double loss = 0.5 * (inst.x * weights_of(st) - inst.y).squaredNorm();
    if (loss > prev + 1e-9) return false;
    prev = loss;
  }
  return true;
}

}  // namespace

std::vector<SweepRow> norm_sweep(const RegressionInstance& inst, const std::vector<double>& taus,
                                 const SweepOptions& opt) {
  std::vector<double> oracle_norms(taus.size(), kNaN);
  std::vector<std::string> oracle_errors(taus.size());
  for (std::size_t i = 0; i < taus.size(); ++i) {
    try {
      oracle_norms[i] = lp_norm(min_norm_oracle(inst, taus[i], opt.oracle), 2.0 - taus[i]);
    } catch (const std::exception& e) {
      oracle_errors[i] = std::string("oracle: ") + e.what();
    }
  }

  std::vector<SweepRow> rows(2 * taus.size());
  const long count = static_cast<long>(rows.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long k = 0; k < count; ++k) {
    SweepRow& row = rows[static_cast<std::size_t>(k)];
    const std::size_t ti = static_cast<std::size_t>(k / 2);
    const double tau = taus[ti];
    row.tau = tau;
    row.method = k % 2 == 0 ? "direct" : "reparam";
    row.oracle_norm = oracle_norms[ti];
    row.error = oracle_errors[ti];
    const auto start = std::chrono::steady_clock::now();
    try {
      KktReport kkt;
      if (k % 2 == 0) {
        const PmTrajectory traj = tempered_egu_pm_flow(inst, tau, opt.alpha, opt.flow);
        row.w = traj.final_state().w();
        row.converged = traj.converged;
        row.loss_monotone =
            residual_monotone(inst, traj.states, [](const PmState& s) { return s.w(); });
        kkt = kkt_residuals(inst, tau, traj.final_state(), opt.alpha);
      } else {
        const ReparamPmTrajectory traj = tempered_reparam_pm_flow(inst, tau, opt.alpha, opt.flow);
        const ReparamPmState& fin = traj.final_state();
        row.w = fin.w;
        row.converged = traj.converged;
        row.loss_monotone =
            residual_monotone(inst, traj.states, [](const ReparamPmState& s) { return s.w; });
        kkt = kkt_residuals(inst, tau, q_tau(fin.u_plus, tau), q_tau(fin.u_minus, tau), opt.alpha);
      }
      row.norm = lp_norm(row.w, 2.0 - tau);
      row.feasibility = kkt.feasibility;
      row.stationarity = kkt.stationarity;
      row.slackness = kkt.slackness;
      row.relative_residual = (inst.x * row.w - inst.y).norm() / inst.y.norm();
    } catch (const std::exception& e) {
      row.error += (row.error.empty() ? "" : "; ") + std::string(e.what());
      row.norm = row.feasibility = row.stationarity = row.slackness = kNaN;
    }
    row.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "tau,method,norm,oracle_norm,feasibility,stationarity,slackness,runtime_s\n";
  const auto old_precision = os.precision(17);
  for (const SweepRow& r : rows) {
    os << format_double(r.tau) << ',' << r.method << ',' << r.norm << ',' << r.oracle_norm << ','
       << r.feasibility << ',' << r.stationarity << ',' << r.slackness << ',' << r.runtime_s
       << '\n';
  }
  os.precision(old_precision);
}

}  // namespace mirrorflow
