#include "mirrorflow/cli.hpp"

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mirrorflow/egupm.hpp"
#include "mirrorflow/errors.hpp"
#include "mirrorflow/flow.hpp"
#include "mirrorflow/potential.hpp"

namespace mirrorflow::cli {

using nlohmann::json;

// --- parsing helpers -----------------------------------------------------------------

namespace {

double parse_double(std::string_view s, const std::string& context) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("bad number '" + std::string(s) + "' in " + context);
  }
  return v;
}

long parse_long(std::string_view s, const std::string& context) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("bad integer '" + std::string(s) + "' in " + context);
  }
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

Vector broadcast(const Vector& v, Index dim, const std::string& what) {
  if (dim <= 0 || v.size() == dim) return v;
  if (v.size() == 1) return Vector::Constant(dim, v[0]);
  throw ConfigError(what + " has dimension " + std::to_string(v.size()) + ", expected " +
                    std::to_string(dim));
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

Vector parse_vector_spec(const std::string& spec) {
  if (spec.rfind("rand:", 0) == 0) {
    const auto parts = split(spec.substr(5), ':');
    if (parts.size() != 2) throw ConfigError("random spec must be rand:<dim>:<seed>, got '" + spec + "'");
    const long dim = parse_long(parts[0], spec);
    const long seed = parse_long(parts[1], spec);
    if (dim <= 0) throw ConfigError("random spec dimension must be positive");
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector v(dim);
    for (Index i = 0; i < dim; ++i) v[i] = u(rng);
    return v;
  }
  const auto parts = split(spec, ',');
  if (parts.empty()) throw ConfigError("empty vector spec");
  Vector v(static_cast<Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) v[static_cast<Index>(i)] = parse_double(parts[i], "'" + spec + "'");
  return v;
}

ParsedLoss parse_loss(const std::string& spec, Index dim) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("loss must look like linear:<spec>, quadratic:<spec> or lsq:<file>, got '" +
                      spec + "'");
  }
  const std::string kind = spec.substr(0, colon);
  const std::string arg = spec.substr(colon + 1);
  if (kind == "linear" || kind == "quadratic") {
    const Vector v = broadcast(parse_vector_spec(arg), dim, "loss '" + spec + "'");
    return {kind == "linear" ? linear_loss(v) : quadratic_loss(v), v.size()};
  }
  if (kind == "lsq") {
    RegressionInstance inst = load_instance(arg);
    const Index d = inst.d();
    return {least_squares_loss(std::move(inst.x), std::move(inst.y)), d};
  }
  throw ConfigError("unknown loss kind '" + kind + "'; valid: linear, quadratic, lsq");
}

std::vector<CheckEntry> run_checks(const std::vector<Triple>& triples, Index dim, int samples,
                                   std::uint64_t seed) {
  std::vector<CheckEntry> out;
  for (const Triple& t : triples) {
    const auto points = sample_condition_points(t, dim, samples, seed);
    out.push_back({t.name, check_condition(t.direct, t.reparam, t.q, points)});
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot write '" + tmp.string() + "'");
    os << content;
    os.flush();
    if (!os) throw ConfigError("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

// --- subcommands --------------------------------------------------------------------

namespace {

struct FlowArgs {
  std::string potential;
  std::string loss;
  std::string w0;
  std::string constraint;
  std::string scheme = "rk4";
  std::string out = "trajectory.csv";
  double eta = 1.0;
  double horizon = 1.0;
  double step = 1e-3;
  int record_every = 1;
};

struct EquivArgs {
  std::string triple;
  std::string potential_override;
  std::string scheme = "rk4";
  std::string out = "equiv.json";
  std::uint64_t seed = 0;
  long dim = 10;
  double eta = 1.0;
  double horizon = 5.0;
  double step = 1e-3;
  double tol = 1e-6;
  bool allow_condition_failure = false;
};

struct MinnormArgs {
  std::string taus = "0,0.5,1";
  std::string instance;
  std::string save_instance;
  std::string scheme = "rk4";
  std::string out = "minnorm.csv";
  std::uint64_t seed = 0;
  long n = 10;
  long d = 40;
  long sparsity = 0;
  double alpha = 1e-5;
  double eta = 0.05;
  double step = 1e-2;
  double horizon = 20000.0;
  bool timing = false;
};

struct CheckArgs {
  std::vector<std::string> triples;
  std::string out = "check.json";
  std::uint64_t seed = 0;
  long dim = 10;
  int samples = 100;
};

std::string to_text(const json& j) { return j.dump(2) + "\n"; }

std::string csv_of(const Trajectory& traj) {
  std::ostringstream os;
  write_trajectory_csv(os, traj);
  return os.str();
}

int cmd_flow(const FlowArgs& a, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  Potential pot = make_potential(a.potential);
  Vector w0 = parse_vector_spec(a.w0);
  ParsedLoss pl = parse_loss(a.loss, w0.size() > 1 ? w0.size() : 0);
  w0 = broadcast(w0, pl.dim, "w0");
  std::optional<Constraint> constraint;
  if (!a.constraint.empty()) constraint = make_constraint(a.constraint);
  FlowProblem p{pl.loss, w0, a.eta, a.horizon, pot, constraint};
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  const Trajectory traj =
      integrate_cmd(p, IntegrateOptions{a.step, ode::parse_scheme(a.scheme), a.record_every});
  const Vector& fin = traj.final_state();
  const double final_loss = p.loss.value(fin);

  json manifest = {{"command", "flow"},
                   {"config",
                    {{"potential", pot.name()},
                     {"loss", a.loss},
                     {"w0", vector_json(w0)},
                     {"constraint", a.constraint},
                     {"eta", a.eta},
                     {"T", a.horizon},
                     {"step", a.step},
                     {"scheme", a.scheme},
                     {"record_every", a.record_every},
                     {"out", a.out}}},
                   {"final_state", vector_json(fin)},
                   {"final_loss", final_loss}};
  if (constraint) manifest["constraint_residual"] = constraint->value(fin).cwiseAbs().maxCoeff();
  write_file_atomic(a.out, csv_of(traj));
  write_file_atomic(a.out + ".json", to_text(manifest));

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out << std::setprecision(17) << "final w: " << fin.transpose() << '\n'
      << "final loss: " << final_loss << '\n';
  if (constraint) out << "constraint residual: " << manifest["constraint_residual"].get<double>() << '\n';
  out << std::setprecision(3) << "wall time: " << wall << " s\n";
  return kOk;
}

int cmd_equiv(const EquivArgs& a, std::ostream& out) {
  const Triple t = make_triple(a.triple);
  const Index dim = t.dimension(a.dim);
  const Loss loss = seeded_convex_loss(t, dim, a.seed);
  std::mt19937_64 rng(a.seed ^ 0x9e3779b97f4a7c15ULL);
  const Vector w0 = t.sample_w(rng, dim);
  std::optional<Potential> direct;
  if (!a.potential_override.empty()) direct = make_potential(a.potential_override);

  json config = {{"triple", t.name},       {"seed", a.seed},   {"d", dim},
                 {"eta", a.eta},           {"T", a.horizon},   {"step", a.step},
                 {"scheme", a.scheme},     {"tol", a.tol},     {"out", a.out},
                 {"potential_override", a.potential_override},
                 {"allow_condition_failure", a.allow_condition_failure}};
  json report = {{"command", "equiv"}, {"config", config}, {"w0", vector_json(w0)}};

  ReparamOptions opt;
  opt.integrate = IntegrateOptions{a.step, ode::parse_scheme(a.scheme), 1};
  opt.allow_condition_failure = a.allow_condition_failure;
  const Potential& f = direct ? *direct : t.direct;
  report["condition_residual_u0"] = condition_residual(f, t.reparam, t.q, t.lift(w0));
  try {
    const EquivalenceRun run = run_equivalence(t, loss, w0, a.eta, a.horizon, opt, direct);
    const bool pass = run.report.max_dev <= a.tol;
    report["max_dev"] = run.report.max_dev;
    report["pass"] = pass;
    report["times"] = run.report.times;
    report["per_time_devs"] = run.report.per_time_devs;
    write_file_atomic(a.out, to_text(report));
    out << t.name << ": max_dev " << std::setprecision(6) << run.report.max_dev << " (tol " << a.tol
        << ") " << (pass ? "pass" : "FAIL") << '\n';
    return pass ? kOk : kTolerance;
  } catch (const ConditionFailure& e) {
    report["pass"] = false;
    report["condition_failure"] = {{"message", e.what()}, {"residual", e.residual()}};
    write_file_atomic(a.out, to_text(report));
    out << t.name << ": condition check failed (residual " << e.residual() << ")\n";
    return kTolerance;
  }
}

double oracle_tolerance(double tau) { return tau == 0.0 ? 1e-3 : 1e-2; }

int cmd_minnorm(const MinnormArgs& a, std::ostream& out, std::ostream& err) {
  RegressionInstance inst =
      a.instance.empty() ? RegressionInstance::generate(a.n, a.d, a.seed, a.sparsity)
                         : load_instance(a.instance);
  std::vector<double> taus;
  for (const auto& s : split(a.taus, ',')) {
    const double tau = parse_double(s, "--taus");
    if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("--taus entries must lie in [0, 1]");
    taus.push_back(tau);
  }
  if (!a.save_instance.empty()) {
    std::ostringstream csv, manifest;
    write_instance_csv(csv, inst);
    const std::string csv_name = std::filesystem::path(a.save_instance + ".csv").filename().string();
    write_instance_manifest(manifest, inst, csv_name);
    write_file_atomic(a.save_instance + ".csv", csv.str());
    write_file_atomic(a.save_instance + ".json", manifest.str());
  }

  SweepOptions opt;
  opt.alpha = a.alpha;
  opt.flow.eta = a.eta;
  opt.flow.step = a.step;
  opt.flow.horizon = a.horizon;
  opt.flow.scheme = ode::parse_scheme(a.scheme);
  std::vector<SweepRow> rows = norm_sweep(inst, taus, opt);
  if (!a.timing) {
    for (SweepRow& r : rows) r.runtime_s = 0.0;
  }

  bool any_error = false;
  bool all_pass = true;
  json row_reports = json::array();
  for (const SweepRow& r : rows) {
    const double gap = std::abs(r.norm - r.oracle_norm) / r.oracle_norm;
    std::vector<std::string> why;
    if (!r.error.empty()) why.push_back(r.error);
    if (r.error.empty() && !r.converged) why.push_back("residual did not converge before T");
    if (!(r.relative_residual <= 1e-4)) why.push_back("residual above 1e-4 ||y||");
    if (!(gap <= oracle_tolerance(r.tau))) why.push_back("norm gap above tolerance");
    const bool pass = why.empty();
    any_error = any_error || !r.error.empty();
    all_pass = all_pass && pass;
    row_reports.push_back({{"tau", r.tau},
                           {"method", r.method},
                           {"relative_gap", gap},
                           {"relative_residual", r.relative_residual},
                           {"converged", r.converged},
                           {"pass", pass},
                           {"failures", why}});
    out << "tau " << r.tau << ' ' << std::setw(7) << r.method << std::setprecision(8) << "  norm "
        << r.norm << "  oracle " << r.oracle_norm << "  gap " << std::setprecision(3) << gap
        << (pass ? "  pass" : "  FAIL") << '\n';
    for (const auto& w : why) err << "  tau " << r.tau << ' ' << r.method << ": " << w << '\n';
  }

  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  json manifest = {{"command", "minnorm"},
                   {"config",
                    {{"taus", taus},
                     {"alpha", a.alpha},
                     {"eta", a.eta},
                     {"step", a.step},
                     {"T", a.horizon},
                     {"scheme", a.scheme},
                     {"timing", a.timing},
                     {"out", a.out},
                     {"instance", a.instance}}},
                   {"instance",
                    {{"N", inst.n()}, {"d", inst.d()}, {"seed", inst.seed}, {"sparsity", inst.sparsity}}},
                   {"rows", row_reports},
                   {"pass", all_pass}};
  write_file_atomic(a.out, csv.str());
  write_file_atomic(a.out + ".json", to_text(manifest));
  if (any_error) return kNumerical;
  return all_pass ? kOk : kTolerance;
}

int cmd_check(const CheckArgs& a, std::ostream& out) {
  std::vector<Triple> triples;
  if (a.triples.empty()) {
    triples = registered_triples();
  } else {
    for (const auto& n : a.triples) triples.push_back(make_triple(n));
  }
  const auto entries = run_checks(triples, a.dim, a.samples, a.seed);
  bool all = true;
  json list = json::array();
  for (const auto& e : entries) {
    all = all && e.report.pass;
    list.push_back({{"triple", e.name},
                    {"max_residual", e.report.max_residual},
                    {"pass", e.report.pass},
                    {"samples", e.report.samples}});
    out << e.name << ": max residual " << std::setprecision(3) << e.report.max_residual
        << (e.report.pass ? "  pass" : "  FAIL") << '\n';
  }
  json report = {{"command", "check"},
                 {"config",
                  {{"triples", a.triples},
                   {"samples", a.samples},
                   {"seed", a.seed},
                   {"d", a.dim},
                   {"tolerance", kConditionTolerance},
                   {"out", a.out}}},
                 {"triples", list},
                 {"pass", all}};
  write_file_atomic(a.out, to_text(report));
  return all ? kOk : kTolerance;
}

std::uint64_t env_seed() {
  const char* s = std::getenv("MIRRORFLOW_SEED");
  if (!s || !*s) return 0;
  const long v = parse_long(s, "MIRRORFLOW_SEED");
  if (v < 0) throw ConfigError("MIRRORFLOW_SEED must be nonnegative");
  return static_cast<std::uint64_t>(v);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuous mirror descent flows, reparameterization checks and min-norm sweeps"};
  app.name("mirrorflow");
  app.require_subcommand(1);
  app.set_config("--config", "", "Key/value config file; command-line flags take precedence");

  const auto positive = CLI::PositiveNumber;

  FlowArgs fa;
  CLI::App* flow = app.add_subcommand("flow", "Integrate a (projected) CMD flow and write its trajectory");
  flow->add_option("--potential", fa.potential, "gd, egu, burg, reduced_eg2, tempered:<tau>")->required();
  flow->add_option("--loss", fa.loss, "linear:<spec>, quadratic:<spec> or lsq:<instance>")->required();
  flow->add_option("--w0", fa.w0, "Initial point: comma floats or rand:<dim>:<seed>")->required();
  flow->add_option("--constraint", fa.constraint, "Optional constraint (simplex)");
  flow->add_option("--eta", fa.eta, "Learning rate")->check(positive)->capture_default_str();
  flow->add_option("--T", fa.horizon, "Horizon")->check(CLI::NonNegativeNumber)->capture_default_str();
  flow->add_option("--step", fa.step, "Integrator step")->check(positive)->capture_default_str();
  flow->add_option("--scheme", fa.scheme, "euler or rk4")->check(CLI::IsMember({"euler", "rk4"}))->capture_default_str();
  flow->add_option("--record-every", fa.record_every, "Keep every n-th state")->check(CLI::PositiveNumber)->capture_default_str();
  flow->add_option("--out", fa.out, "Trajectory CSV (manifest goes to <out>.json)")->capture_default_str();

  EquivArgs ea;
  CLI::Option* equiv_seed = nullptr;
  CLI::App* equiv = app.add_subcommand("equiv", "Compare a direct flow with its reparameterized flow");
  equiv->add_option("--triple", ea.triple, "Registered triple name")->required();
  equiv_seed = equiv->add_option("--seed", ea.seed, "Seed for the loss and start (default MIRRORFLOW_SEED or 0)");
  equiv->add_option("--d", ea.dim, "Dimension")->check(positive)->capture_default_str();
  equiv->add_option("--eta", ea.eta, "Learning rate")->check(positive)->capture_default_str();
  equiv->add_option("--T", ea.horizon, "Horizon")->check(CLI::NonNegativeNumber)->capture_default_str();
  equiv->add_option("--step", ea.step, "Integrator step")->check(positive)->capture_default_str();
  equiv->add_option("--scheme", ea.scheme, "euler or rk4")->check(CLI::IsMember({"euler", "rk4"}))->capture_default_str();
  equiv->add_option("--tol", ea.tol, "Pass threshold on max_dev")->check(positive)->capture_default_str();
  equiv->add_option("--potential-override", ea.potential_override, "Replace the direct potential (anti-test)");
  equiv->add_flag("--allow-condition-failure", ea.allow_condition_failure, "Run even if the condition fails");
  equiv->add_option("--out", ea.out, "JSON report path")->capture_default_str();

  MinnormArgs ma;
  CLI::Option* minnorm_seed = nullptr;
  CLI::App* minnorm = app.add_subcommand("minnorm", "Tempered EGU+- minimum-norm sweep");
  minnorm->add_option("--taus", ma.taus, "Comma-separated temperatures in [0, 1]")->capture_default_str();
  minnorm->add_option("--N", ma.n, "Samples")->check(positive)->capture_default_str();
  minnorm->add_option("--d", ma.d, "Features")->check(positive)->capture_default_str();
  minnorm_seed = minnorm->add_option("--seed", ma.seed, "Instance seed (default MIRRORFLOW_SEED or 0)");
  minnorm->add_option("--sparsity", ma.sparsity, "Planted nonzeros (0: d / 10)")->check(CLI::NonNegativeNumber)->capture_default_str();
  minnorm->add_option("--instance", ma.instance, "Load the instance from a CSV or JSON manifest");
  minnorm->add_option("--save-instance", ma.save_instance, "Write <prefix>.csv and <prefix>.json");
  minnorm->add_option("--alpha", ma.alpha, "Initial scale w0 = alpha 1")->check(positive)->capture_default_str();
  minnorm->add_option("--eta", ma.eta, "Learning rate")->check(positive)->capture_default_str();
  minnorm->add_option("--step", ma.step, "Integrator step")->check(positive)->capture_default_str();
  minnorm->add_option("--T", ma.horizon, "Horizon")->check(positive)->capture_default_str();
  minnorm->add_option("--scheme", ma.scheme, "euler or rk4")->check(CLI::IsMember({"euler", "rk4"}))->capture_default_str();
  minnorm->add_flag("--timing", ma.timing, "Record wall-clock runtime_s (otherwise 0 for reproducible files)");
  minnorm->add_option("--out", ma.out, "Sweep CSV (manifest goes to <out>.json)")->capture_default_str();

  CheckArgs ca;
  CLI::Option* check_seed = nullptr;
  CLI::App* check = app.add_subcommand("check", "Reparameterization condition checks over the registry");
  check->add_option("--triple", ca.triples, "Restrict to these triples (repeatable)");
  check->add_option("--samples", ca.samples, "Random points per triple")->check(positive)->capture_default_str();
  check_seed = check->add_option("--seed", ca.seed, "Sample seed (default MIRRORFLOW_SEED or 0)");
  check->add_option("--d", ca.dim, "Dimension")->check(positive)->capture_default_str();
  check->add_option("--out", ca.out, "JSON report path")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfig;
  }

  try {
    if (*flow) return cmd_flow(fa, out);
    if (*equiv) {
      if (equiv_seed->count() == 0) ea.seed = env_seed();
      return cmd_equiv(ea, out);
    }
    if (*minnorm) {
      if (minnorm_seed->count() == 0) ma.seed = env_seed();
      return cmd_minnorm(ma, out, err);
    }
    if (*check) {
      if (check_seed->count() == 0) ca.seed = env_seed();
      return cmd_check(ca, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const UnsupportedTemperature& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const InstanceError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ConditionFailure& e) {
    err << "condition failure: " << e.what() << '\n';
    return kTolerance;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const DomainExit& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const Error& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumerical;
  }
  return kConfig;
}

}  // namespace mirrorflow::cli
