#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mirrorflow/ode.hpp"
#include "mirrorflow/reparam_map.hpp"
#include "mirrorflow/types.hpp"

namespace mirrorflow {

// --- q_tau ------------------------------------------------------------------------

/// ((2 - tau) / 2)^{2/(2-tau)} |u|^{2/(2-tau)} elementwise.
Vector q_tau(const Vector& u, double tau);
/// Diagonal of the Jacobian: ((2-tau)/2)^{tau/(2-tau)} sign(u) |u|^{tau/(2-tau)}.
Vector q_tau_jacobian_diag(const Vector& u, double tau);
/// Nonnegative branch u = (2 / (2 - tau)) w^{(2-tau)/2}.
Vector q_tau_inverse(const Vector& w, double tau);
ReparamMap q_tau_map(double tau);

// --- regression instance ----------------------------------------------------------

struct RegressionInstance {
  Matrix x;
  Vector y;
  std::uint64_t seed = 0;
  Index sparsity = 0;
  /// The planted target, when generated.
  Vector w_star;

  Index n() const { return x.rows(); }
  Index d() const { return x.cols(); }

  /// Standard-normal X (N x d), y = X w_star with w_star having `sparsity`
  /// unit entries (0 means d / 10). Throws InstanceError unless N < d and X
  /// has full row rank.
  static RegressionInstance generate(Index n = 10, Index d = 40, std::uint64_t seed = 0,
                                     Index sparsity = 0);
  /// Validates an externally supplied instance.
  static RegressionInstance from_data(Matrix x, Vector y, std::uint64_t seed = 0,
                                      Index sparsity = 0);
};

/// CSV with header x_1,...,x_d,y, one row per sample.
void write_instance_csv(std::ostream& os, const RegressionInstance& inst);
RegressionInstance read_instance_csv(std::istream& is);
/// {"N", "d", "seed", "sparsity", "csv"} manifest.
void write_instance_manifest(std::ostream& os, const RegressionInstance& inst,
                             const std::string& csv_name);
/// Reads a manifest and the CSV it names (relative to the manifest's directory),
/// or a bare CSV.
RegressionInstance load_instance(const std::string& path);

// --- EGU+- dynamics ------------------------------------------------------------------

struct PmState {
  double t = 0.0;
  Vector w_plus;
  Vector w_minus;
  /// eta * int_0^t X^T (X w - y) dz.
  Vector accumulated_integral;

  Vector w() const { return w_plus - w_minus; }
};

struct PmOptions {
  double eta = 0.05;
  double step = 1e-2;
  double horizon = 20000.0;
  ode::Scheme scheme = ode::Scheme::rk4;
  /// Keep every n-th state (initial and final always kept).
  int record_every = 1000;
  /// Stop once ||X w - y|| <= stop_rel_residual * ||y||; 0 disables.
  double stop_rel_residual = 1e-6;
};

struct PmTrajectory {
  std::vector<PmState> states;
  bool converged = false;

  const PmState& final_state() const { return states.back(); }
};

/// Tempered EGU+- flow in link space: theta+' = -eta g, theta-' = +eta g with
/// g = X^T (X w - y), w+- = exp_tau(theta+-), theta+-(0) = log_tau(alpha).
/// Requires 0 <= tau <= 1 and alpha > 0.
PmTrajectory tempered_egu_pm_flow(const RegressionInstance& inst, double tau, double alpha,
                                  const PmOptions& opt = {});

struct ReparamPmState {
  double t = 0.0;
  Vector u_plus;
  Vector u_minus;
  Vector w;
};

struct ReparamPmTrajectory {
  std::vector<ReparamPmState> states;
  bool converged = false;
  double tau = 1.0;

  const ReparamPmState& final_state() const { return states.back(); }
};

/// Gradient flow on (u+, u-) for L(q_tau(u+) - q_tau(u-)), u+-(0) = q_tau^{-1}(alpha).
ReparamPmTrajectory tempered_reparam_pm_flow(const RegressionInstance& inst, double tau,
                                             double alpha, const PmOptions& opt = {});

// --- oracles and optimality checks ---------------------------------------------------

/// ||w||_p for p >= 1.
double lp_norm(const Vector& w, double p);

struct OracleOptions {
  double stationarity_tol = 1e-6;
  int restarts = 5;
  long max_iter = 200000;
  std::uint64_t seed = 12345;
};

/// Independent minimum-||w||_{2-tau} interpolant: pseudoinverse (tau = 0), basis
/// pursuit by simplex (tau = 1), projected gradient with exact affine projection
/// in between (not certifying; best of several restarts).
Vector min_norm_oracle(const RegressionInstance& inst, double tau, const OracleOptions& opt = {});

struct KktReport {
  double feasibility = 0.0;
  double stationarity = 0.0;
  double slackness = 0.0;
  /// Stationarity with X^T lambda rebuilt from the accumulated integral; NaN
  /// when no integral was supplied.
  double stationarity_from_integral = 0.0;
  Vector multiplier;
};

/// KKT residuals of min ||w+ - w-||_{2-tau}^{2-tau} s.t. X(w+ - w-) = y, w+- >= 0.
/// tau < 1: s = sign(w)|w|^{1-tau} - X^T lambda. tau = 1 with alpha > 0: the
/// log-scale form s = asinh(w / (2 alpha)) - X^T lambda. tau = 1 with alpha = 0:
/// L1 subgradient conditions. lambda is fitted by least squares on the support.
/// With the accumulated integral A, X^T lambda = -(1 - tau) A (or -A at tau = 1)
/// is also checked and reported as stationarity_from_integral.
KktReport kkt_residuals(const RegressionInstance& inst, double tau, const Vector& w_plus,
                        const Vector& w_minus, double alpha,
                        const std::optional<Vector>& accumulated_integral = std::nullopt);
KktReport kkt_residuals(const RegressionInstance& inst, double tau, const PmState& state,
                        double alpha);
/// Residuals for an explicit multiplier (e.g. the LP dual).
KktReport kkt_residuals_with_multiplier(const RegressionInstance& inst, double tau,
                                        const Vector& w_plus, const Vector& w_minus,
                                        double alpha, const Vector& lambda);

// --- sweep -------------------------------------------------------------------------

struct SweepRow {
  double tau = 0.0;
  std::string method;  // "direct" or "reparam"
  double norm = 0.0;
  double oracle_norm = 0.0;
  double feasibility = 0.0;
  double stationarity = 0.0;
  double slackness = 0.0;
  double runtime_s = 0.0;
  // Not part of the CSV.
  double relative_residual = 0.0;
  bool converged = false;
  bool loss_monotone = true;
  std::string error;
  Vector w;
};

struct SweepOptions {
  PmOptions flow;
  double alpha = 1e-5;
  OracleOptions oracle;
};

/// One row per tau per method; rows run concurrently and a failing row records
/// its error instead of aborting the sweep.
std::vector<SweepRow> norm_sweep(const RegressionInstance& inst, const std::vector<double>& taus,
                                 const SweepOptions& opt = {});

/// Header tau,method,norm,oracle_norm,feasibility,stationarity,slackness,runtime_s.
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace mirrorflow
