#include "mirrorflow/potential.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "mirrorflow/errors.hpp"

namespace mirrorflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

template <typename F>
Vector map(const Vector& v, const F& fn) {
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) out[i] = fn(v[i]);
  return out;
}

void require_same_size(const Vector& a, const Vector& b, std::string_view context) {
  if (a.size() != b.size()) {
    throw DomainError(std::string(context) + ": dimension mismatch (" + std::to_string(a.size()) +
                      " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace

// --- Potential ---------------------------------------------------------------

Potential::Potential(std::string name, ScalarPotential scalar)
    : name_(std::move(name)), s_(std::make_shared<const ScalarPotential>(std::move(scalar))) {}

double Potential::value(const Vector& w) const {
  double total = 0.0;
  for (Index i = 0; i < w.size(); ++i) total += s_->value(w[i]);
  return total;
}

Vector Potential::link(const Vector& w) const { return map(w, s_->link); }
Vector Potential::inv_link(const Vector& theta) const { return map(theta, s_->inv_link); }
Vector Potential::hessian_diag(const Vector& w) const { return map(w, s_->hessian); }

Vector Potential::inv_hessian_diag(const Vector& w) const {
  return map(w, [this](double x) { return 1.0 / s_->hessian(x); });
}

Vector Potential::dual_hessian_diag(const Vector& theta) const {
  return map(theta, s_->dual_hessian);
}

Index Potential::first_violation(const Vector& w) const {
  for (Index i = 0; i < w.size(); ++i) {
    if (!s_->domain.contains(w[i])) return i;
  }
  return -1;
}

bool Potential::is_interior(const Vector& w) const { return first_violation(w) < 0; }

void Potential::require_interior(const Vector& w, std::string_view context) const {
  const Index bad = first_violation(w);
  if (bad >= 0) {
    std::ostringstream os;
    os << context << ": coordinate " << bad << " = " << w[bad] << " outside the domain of "
       << name_ << " (" << s_->domain.lower << ", " << s_->domain.upper << ")";
    throw DomainError(os.str(), bad);
  }
}

// --- tempered logarithm --------------------------------------------------------

double log_tau(double x, double tau) {
  if (!(x >= 0.0)) throw DomainError("log_tau: negative input " + format_double(x));
  if (is_log_limit(tau)) {
    if (x == 0.0) throw DomainError("log_tau: zero input on the natural-log branch");
    return std::log(x);
  }
  if (x == 0.0) {
    if (tau > 1.0) throw DomainError("log_tau: zero input with tau > 1");
    return -1.0 / (1.0 - tau);
  }
  const double a = 1.0 - tau;
  return std::expm1(a * std::log(x)) / a;
}

double exp_tau(double x, double tau) {
  if (is_log_limit(tau)) return std::exp(x);
  const double a = 1.0 - tau;
  const double base = a * x;  // bracket is 1 + base
  if (base <= -1.0) return a > 0.0 ? 0.0 : kInf;
  return std::exp(std::log1p(base) / a);
}

Vector log_tau(const Vector& x, double tau) {
  return map(x, [tau](double v) { return log_tau(v, tau); });
}

Vector exp_tau(const Vector& x, double tau) {
  return map(x, [tau](double v) { return exp_tau(v, tau); });
}

namespace {

double tempered_term_beta(double wt, double w, double tau) {
  if (is_log_limit(tau)) {
    const double ent = wt == 0.0 ? 0.0 : wt * std::log(wt / w);
    return ent - wt + w;
  }
  const double b = 2.0 - tau;
  const double a = 1.0 - tau;
  return ((std::pow(wt, b) - std::pow(w, b)) / b - (wt - w) * std::pow(w, a)) / a;
}

}  // namespace

double tempered_divergence_entropy_form(const Vector& w_tilde, const Vector& w, double tau) {
  require_same_size(w_tilde, w, "tempered divergence");
  double total = 0.0;
  for (Index i = 0; i < w.size(); ++i) {
    const double wt = w_tilde[i];
    const double b = 2.0 - tau;
    const double wt_log = wt == 0.0 ? 0.0 : wt * log_tau(wt, tau);
    const double power_gap =
        is_log_limit(tau) ? wt - w[i] : (std::pow(wt, b) - std::pow(w[i], b)) / b;
    total += wt_log - wt * log_tau(w[i], tau) - power_gap;
  }
  return total;
}

double tempered_divergence_beta_form(const Vector& w_tilde, const Vector& w, double tau) {
  require_same_size(w_tilde, w, "tempered divergence");
  double total = 0.0;
  for (Index i = 0; i < w.size(); ++i) total += tempered_term_beta(w_tilde[i], w[i], tau);
  return total;
}

// --- registry ------------------------------------------------------------------

Potential gd_potential() {
  ScalarPotential s;
  s.value = [](double w) { return 0.5 * w * w; };
  s.link = [](double w) { return w; };
  s.inv_link = [](double t) { return t; };
  s.hessian = [](double) { return 1.0; };
  s.dual_hessian = [](double) { return 1.0; };
  return Potential("gd", std::move(s));
}

Potential egu_potential() {
  ScalarPotential s;
  s.value = [](double w) { return w * std::log(w) - w; };
  s.link = [](double w) { return std::log(w); };
  s.inv_link = [](double t) { return std::exp(t); };
  s.hessian = [](double w) { return 1.0 / w; };
  s.dual_hessian = [](double t) { return std::exp(t); };
  s.domain = {0.0, kInf};
  s.relative_entropy = true;
  return Potential("egu", std::move(s));
}

Potential burg_potential() {
  ScalarPotential s;
  s.value = [](double w) { return -std::log(w); };
  s.link = [](double w) { return -1.0 / w; };
  s.inv_link = [](double t) { return t < 0.0 ? -1.0 / t : kNaN; };
  s.hessian = [](double w) { return 1.0 / (w * w); };
  s.dual_hessian = [](double t) { return 1.0 / (t * t); };
  s.domain = {0.0, kInf};
  s.dual_domain = {-kInf, 0.0};
  return Potential("burg", std::move(s));
}

Potential reduced_eg2_potential() {
  ScalarPotential s;
  // Binary negative entropy; its derivative is the reduced EG link.
  s.value = [](double w) { return w * std::log(w) + (1.0 - w) * std::log1p(-w); };
  s.link = [](double w) { return std::log(w) - std::log1p(-w); };
  s.inv_link = [](double t) {
    return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
  };
  s.hessian = [](double w) { return 1.0 / (w * (1.0 - w)); };
  s.dual_hessian = [](double t) {
    const double e = std::exp(-std::abs(t));
    return e / ((1.0 + e) * (1.0 + e));
  };
  s.domain = {0.0, 1.0};
  return Potential("reduced_eg2", std::move(s));
}

Potential tempered_potential(double tau) {
  if (tau == 2.0) {
    throw UnsupportedTemperature("tempered potential: tau = 2 is the Burg potential; use \"burg\"");
  }
  if (!std::isfinite(tau)) throw UnsupportedTemperature("tempered potential: non-finite tau");
  ScalarPotential s;
  s.value = [tau](double w) {
    if (is_log_limit(tau)) return w * std::log(w) + 1.0 - w;
    const double b = 2.0 - tau;
    return w * log_tau(w, tau) + (1.0 - std::pow(w, b)) / b;
  };
  s.link = [tau](double w) { return log_tau(w, tau); };
  s.inv_link = [tau](double t) { return exp_tau(t, tau); };
  s.hessian = [tau](double w) { return std::pow(w, -tau); };
  s.dual_hessian = [tau](double t) { return std::pow(exp_tau(t, tau), tau); };
  s.divergence = [tau](double wt, double w) { return tempered_term_beta(wt, w, tau); };
  s.domain = {0.0, kInf};
  if (!is_log_limit(tau)) {
    if (tau < 1.0) s.dual_domain.lower = -1.0 / (1.0 - tau);
    if (tau > 1.0) s.dual_domain.upper = 1.0 / (tau - 1.0);
  }
  s.divergence_accepts_lower = tau < 1.0 && !is_log_limit(tau);
  s.relative_entropy = is_log_limit(tau);
  return Potential("tempered:" + format_double(tau), std::move(s));
}

Potential fenchel_dual_potential(const Potential& p) {
  const ScalarPotential& src = p.scalar();
  ScalarPotential s;
  s.value = [src](double t) {
    const double w = src.inv_link(t);
    return t * w - src.value(w);
  };
  s.link = src.inv_link;
  s.inv_link = src.link;
  s.hessian = src.dual_hessian;
  s.dual_hessian = src.hessian;
  s.domain = src.dual_domain;
  s.dual_domain = src.domain;
  return Potential("dual_" + p.name(), std::move(s));
}

std::vector<std::string> potential_names() {
  return {"gd", "egu", "burg", "reduced_eg2", "tempered:<tau>"};
}

namespace {

std::string registry_listing() {
  std::string out;
  for (const auto& n : potential_names()) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

}  // namespace

Potential make_potential(std::string_view name) {
  if (name == "gd") return gd_potential();
  if (name == "egu") return egu_potential();
  if (name == "burg") return burg_potential();
  if (name == "reduced_eg2") return reduced_eg2_potential();
  constexpr std::string_view prefix = "tempered:";
  if (name.substr(0, prefix.size()) == prefix) {
    const std::string_view rest = name.substr(prefix.size());
    double tau = 0.0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), tau);
    if (ec != std::errc() || ptr != rest.data() + rest.size() || rest.empty()) {
      throw ConfigError("bad temperature in potential name '" + std::string(name) + "'");
    }
    return tempered_potential(tau);
  }
  throw ConfigError("unknown potential '" + std::string(name) + "'; valid: " + registry_listing());
}

// --- divergences ------------------------------------------------------------------

double bregman_divergence(const Potential& p, const Vector& w_tilde, const Vector& w) {
  require_same_size(w_tilde, w, "bregman_divergence");
  p.require_interior(w, "bregman_divergence");
  const ScalarPotential& s = p.scalar();
  for (Index i = 0; i < w_tilde.size(); ++i) {
    const bool on_lower = s.divergence_accepts_lower && w_tilde[i] == s.domain.lower;
    if (!on_lower && !s.domain.contains(w_tilde[i])) {
      std::ostringstream os;
      os << "bregman_divergence: coordinate " << i << " of the first argument (" << w_tilde[i]
         << ") is outside the domain of " << p.name();
      throw DomainError(os.str(), i);
    }
  }
  double total = 0.0;
  for (Index i = 0; i < w.size(); ++i) {
    if (s.divergence) {
      total += s.divergence(w_tilde[i], w[i]);
    } else {
      total += s.value(w_tilde[i]) - s.value(w[i]) - s.link(w[i]) * (w_tilde[i] - w[i]);
    }
  }
  return total;
}

double bregman_momentum(const Potential& p, const Vector& w, const Vector& w_dot, const Vector& w0) {
  require_same_size(w, w0, "bregman_momentum");
  require_same_size(w, w_dot, "bregman_momentum");
  p.require_interior(w, "bregman_momentum");
  p.require_interior(w0, "bregman_momentum");
  return (p.link(w) - p.link(w0)).dot(w_dot);
}

double dual_momentum(const Potential& p, const Vector& w, const Vector& w_dot, const Vector& w0) {
  require_same_size(w, w0, "dual_momentum");
  require_same_size(w, w_dot, "dual_momentum");
  p.require_interior(w, "dual_momentum");
  p.require_interior(w0, "dual_momentum");
  const DualPotential dual(p);
  const Vector theta = p.link(w);
  const Vector theta0 = p.link(w0);
  const Vector theta_dot = p.hessian_diag(w).cwiseProduct(w_dot);
  return (theta - theta0).dot(dual.hessian_diag(theta).cwiseProduct(theta_dot));
}

}  // namespace mirrorflow
