#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mirrorflow/flow.hpp"
#include "mirrorflow/geometry.hpp"
#include "mirrorflow/potential.hpp"
#include "mirrorflow/reparam_map.hpp"

namespace mirrorflow {

inline constexpr double kConditionTolerance = 1e-9;

struct ConditionReport {
  double max_residual = 0.0;
  bool pass = true;
  std::size_t samples = 0;
};

/// ||H_F^{-1}(q(u)) - J_q(u) H_G^{-1}(u) J_q(u)^T||_inf at one point.
double condition_residual(const Potential& f, const Potential& g, const ReparamMap& q,
                          const Vector& u);

/// Maximum residual over the samples; pass iff <= kConditionTolerance.
ConditionReport check_condition(const Potential& f, const Potential& g, const ReparamMap& q,
                                const std::vector<Vector>& samples);

struct ReparamTrajectory {
  Trajectory u;
  /// Pushed-forward weights q(u(t)) on the same time grid.
  Trajectory w;
};

struct ReparamOptions {
  IntegrateOptions integrate;
  /// Run even when the condition fails at u0 (exploratory use).
  bool allow_condition_failure = false;
};

/// CMD on u for G and the composite loss L o q, in natural-gradient form
/// u' = -eta H_G^{-1} J_q^T grad L(q(u)). Requires q(u0) = p.w0 within 1e-10.
/// If p carries a constraint, the field is projected by P_{psi o q}.
ReparamTrajectory reparam_flow(const Potential& f, const Potential& g, const ReparamMap& q,
                               const FlowProblem& p, const Vector& u0,
                               const ReparamOptions& opt = {});

/// Same as reparam_flow with an explicit constraint; psi(q(u(t))) is restored
/// after every step by metric Gauss-Newton in u.
ReparamTrajectory reparam_flow_constrained(const Potential& f, const Potential& g,
                                           const ReparamMap& q, const Constraint& c,
                                           const FlowProblem& p, const Vector& u0,
                                           const ReparamOptions& opt = {});

struct EquivalenceReport {
  double max_dev = 0.0;
  std::vector<double> times;
  std::vector<double> per_time_devs;
};

/// max_t ||w_A(t) - w_B(t)||_inf; throws GridMismatch unless the grids agree.
EquivalenceReport equivalence_report(const Trajectory& a, const Trajectory& b);

void write_json(std::ostream& os, const ConditionReport& r);
void write_json(std::ostream& os, const EquivalenceReport& r);

// --- registered triples ----------------------------------------------------------

/// A potential F, a potential G, and a map q with w = q(u) such that CMD on F
/// equals CMD on G through q.
struct Triple {
  std::string name;
  Potential direct;
  Potential reparam;
  ReparamMap q;
  std::optional<Constraint> constraint;
  /// Required dimension, or 0 for any.
  Index fixed_dim = 0;
  /// Random point in u-space away from Jacobian singularities.
  std::function<Vector(std::mt19937_64&, Index dim)> sample_u;
  /// Random interior (and feasible) point in w-space.
  std::function<Vector(std::mt19937_64&, Index dim)> sample_w;
  /// Multiplies the curvature of seeded_convex_loss so that eta a H_F^{-1} is
  /// of order one to ten for this triple's typical weights.
  double curvature_scale = 1.0;

  Index dimension(Index requested) const { return fixed_dim ? fixed_dim : requested; }
  /// u0 on the declared inverse branch.
  Vector lift(const Vector& w0) const { return q.inverse(w0); }
};

/// Resolves "egu_as_gd", "burg_as_gd", "reduced_eg2_as_gd", "egu_as_burg",
/// "tempered_as_gd:<tau>", "eg_as_gd_projected".
Triple make_triple(std::string_view name);
std::vector<std::string> triple_names();
/// Every registered triple, with tempered_as_gd at tau in {0, 0.25, 0.5, 0.75, 1}.
std::vector<Triple> registered_triples();

std::vector<Vector> sample_condition_points(const Triple& t, Index dim, int count,
                                            std::uint64_t seed);

/// Seeded convex loss g^T w + 1/2 sum a_i w_i^2 with a_i uniform in
/// [2, 8] * curvature_scale and the unconstrained minimizer drawn from
/// triple.sample_w.
Loss seeded_convex_loss(const Triple& t, Index dim, std::uint64_t seed);

struct EquivalenceRun {
  Trajectory direct;
  ReparamTrajectory reparam;
  EquivalenceReport report;
};

/// Integrates the direct CMD flow of `direct` (defaults to t.direct) and the
/// reparameterized flow from u0 = lift(w0) with the same scheme and step.
EquivalenceRun run_equivalence(const Triple& t, const Loss& loss, const Vector& w0, double eta,
                               double horizon, const ReparamOptions& opt,
                               const std::optional<Potential>& direct = std::nullopt);

}  // namespace mirrorflow
