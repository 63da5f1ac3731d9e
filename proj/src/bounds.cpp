#include "fedsim/bounds.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fedsim {

double Bound::total() const {
  double t = 0.0;
  for (const auto& term : terms) t += term.value;
  return t;
}

const BoundTerm& Bound::dominant() const {
  if (terms.empty()) throw std::logic_error("bound has no terms");
  const BoundTerm* best = &terms.front();
  for (const auto& term : terms)
    if (term.value > best->value) best = &term;
  return *best;
}

double Bound::dominant_share() const {
  const double t = total();
  return t > 0.0 ? dominant().value / t : 1.0;
}

double max_eta_tilde(const BoundParams& p, BoundCase c) {
  if (c == BoundCase::non_convex)
    return 1.0 / (6.0 * p.L * (std::sqrt(p.beta_sq) + 1.0));
  return 1.0 / (6.0 * p.L);
}

void check_constraints(const BoundParams& p, BoundCase c) {
  if (p.L <= 0.0) throw std::domain_error("bound: L must be positive");
  if (p.eta_tilde <= 0.0) throw std::domain_error("bound: eta_tilde must be positive");
  if (p.participants() > p.M || p.participants() < 1)
    throw std::domain_error("bound: need 1 <= S <= M");
  const double slack = 1e-12;
  if (p.eta_tilde > max_eta_tilde(p, c) * (1.0 + slack))
    throw std::domain_error("bound: eta_tilde exceeds the admissible stepsize");
  if (c == BoundCase::strongly_convex) {
    if (p.mu <= 0.0) throw std::domain_error("bound: strongly convex case needs mu > 0");
    if (p.eta_tilde < 1.0 / (p.mu * p.R) * (1.0 - slack))
      throw std::domain_error("bound: strongly convex case needs eta_tilde >= 1/(mu R)");
  }
}

namespace {

// Both algorithms share the optimization and statistical terms; they differ
// in the eta_tilde^2 drift scalings and, under partial participation, in
// which divisor the drift terms carry. The sampling term (without-replacement
// participation noise) is identical for the two.
double sampling_term(const BoundParams& p) {
  const int s = p.participants();
  if (s == p.M) return 0.0;
  return 12.0 * p.eta_tilde * static_cast<double>(p.M - s) * p.zeta_star_sq /
         (static_cast<double>(s) * (p.M - 1));
}

Bound convex_common(const BoundParams& p, BoundCase c, double opt) {
  const int s = p.participants();
  Bound b;
  b.terms.push_back({"optimization", opt});
  b.terms.push_back({"noise", 12.0 * p.eta_tilde * p.sigma * p.sigma / (s * p.K)});
  b.terms.push_back({"sampling", sampling_term(p)});
  (void)c;
  return b;
}

double convex_opt_term(const BoundParams& p, BoundCase c) {
  if (c == BoundCase::strongly_convex)
    return 4.5 * p.mu * p.D * p.D * std::exp(-p.mu * p.eta_tilde * p.R / 2.0);
  return 3.0 * p.D * p.D / (p.eta_tilde * p.R);
}

}  // namespace

Bound sfl_bound(const BoundParams& p, BoundCase c) {
  check_constraints(p, c);
  const int s = p.participants();
  const double e2 = p.eta_tilde * p.eta_tilde;
  if (c == BoundCase::non_convex) {
    Bound b;
    b.terms.push_back({"optimization", 3.0 * p.A / (p.eta_tilde * p.R)});
    b.terms.push_back({"noise", 3.0 * p.L * p.eta_tilde * p.sigma * p.sigma / (s * p.K)});
    b.terms.push_back(
        {"noise_drift", 27.0 * p.L * p.L * e2 * p.sigma * p.sigma / (8.0 * s * p.K)});
    b.terms.push_back({"het_drift", 27.0 * p.L * p.L * e2 * p.zeta_sq / (8.0 * s)});
    return b;
  }
  Bound b = convex_common(p, c, convex_opt_term(p, c));
  b.terms.push_back(
      {"noise_drift", 18.0 * p.L * e2 * p.sigma * p.sigma / (s * p.K)});
  b.terms.push_back({"het_drift", 18.0 * p.L * e2 * p.zeta_star_sq / s});
  return b;
}

Bound pfl_bound(const BoundParams& p, BoundCase c) {
  check_constraints(p, c);
  const int s = p.participants();
  const double e2 = p.eta_tilde * p.eta_tilde;
  if (c == BoundCase::non_convex) {
    Bound b;
    b.terms.push_back({"optimization", 3.0 * p.A / (p.eta_tilde * p.R)});
    b.terms.push_back({"noise", 3.0 * p.L * p.eta_tilde * p.sigma * p.sigma / (s * p.K)});
    b.terms.push_back(
        {"noise_drift", 27.0 * p.L * p.L * e2 * p.sigma * p.sigma / (8.0 * p.K)});
    b.terms.push_back({"het_drift", 2.25 * p.L * p.L * e2 * p.zeta_sq});
    return b;
  }
  Bound b = convex_common(p, c, convex_opt_term(p, c));
  b.terms.push_back({"noise_drift", 18.0 * p.L * e2 * p.sigma * p.sigma / p.K});
  b.terms.push_back({"het_drift", 12.0 * p.L * e2 * p.zeta_star_sq});
  return b;
}

namespace {

double polylog_factor(const BoundParams& p, bool enabled) {
  if (!enabled || p.sigma <= 0.0) return 1.0;
  return std::log(std::max(
      2.0, p.mu * p.mu * p.D * p.D * p.M * p.K * p.R / (p.sigma * p.sigma)));
}

double cbrt_pos(double v) { return std::cbrt(v); }

}  // namespace

Bound sfl_tuned_rate(const BoundParams& p, BoundCase c, bool polylog) {
  const double MK = static_cast<double>(p.M) * p.K;
  const double R = p.R;
  Bound b;
  if (c == BoundCase::strongly_convex) {
    const double ell = polylog_factor(p, polylog);
    b.terms.push_back({"statistical", ell * p.sigma * p.sigma / (p.mu * MK * R)});
    b.terms.push_back(
        {"stat_drift", p.L * p.sigma * p.sigma / (p.mu * p.mu * MK * R * R)});
    b.terms.push_back(
        {"het_drift", p.L * p.zeta_star_sq / (p.mu * p.mu * p.M * R * R)});
    b.terms.push_back({"optimization",
                       p.mu * p.D * p.D * std::exp(-p.mu * R / (12.0 * p.L))});
    return b;
  }
  if (c == BoundCase::general_convex) {
    const double D4 = std::pow(p.D, 4);
    b.terms.push_back({"statistical", p.sigma * p.D / std::sqrt(MK * R)});
    b.terms.push_back({"stat_drift", cbrt_pos(p.L * p.sigma * p.sigma * D4) /
                                         (cbrt_pos(MK) * std::pow(R, 2.0 / 3.0))});
    b.terms.push_back({"het_drift",
                       cbrt_pos(p.L * p.zeta_star_sq * D4) /
                           (cbrt_pos(static_cast<double>(p.M)) * std::pow(R, 2.0 / 3.0))});
    b.terms.push_back({"optimization", p.L * p.D * p.D / R});
    return b;
  }
  const double A2 = p.A * p.A;
  b.terms.push_back(
      {"statistical", std::sqrt(p.L * p.sigma * p.sigma * p.A) / std::sqrt(MK * R)});
  b.terms.push_back({"stat_drift", cbrt_pos(p.L * p.L * p.sigma * p.sigma * A2) /
                                       (cbrt_pos(MK) * std::pow(R, 2.0 / 3.0))});
  b.terms.push_back({"het_drift",
                     cbrt_pos(p.L * p.L * p.zeta_sq * A2) /
                         (cbrt_pos(static_cast<double>(p.M)) * std::pow(R, 2.0 / 3.0))});
  b.terms.push_back({"optimization", p.L * std::sqrt(p.beta_sq) * p.A / R});
  return b;
}

Bound pfl_tuned_rate(const BoundParams& p, BoundCase c, bool polylog) {
  const double MK = static_cast<double>(p.M) * p.K;
  const double K = p.K;
  const double R = p.R;
  Bound b;
  if (c == BoundCase::strongly_convex) {
    const double ell = polylog_factor(p, polylog);
    b.terms.push_back({"statistical", ell * p.sigma * p.sigma / (p.mu * MK * R)});
    b.terms.push_back(
        {"stat_drift", p.L * p.sigma * p.sigma / (p.mu * p.mu * K * R * R)});
    b.terms.push_back({"het_drift", p.L * p.zeta_star_sq / (p.mu * p.mu * R * R)});
    b.terms.push_back({"optimization",
                       p.mu * p.D * p.D * std::exp(-p.mu * R / (12.0 * p.L))});
    return b;
  }
  if (c == BoundCase::general_convex) {
    const double D4 = std::pow(p.D, 4);
    b.terms.push_back({"statistical", p.sigma * p.D / std::sqrt(MK * R)});
    b.terms.push_back({"stat_drift", cbrt_pos(p.L * p.sigma * p.sigma * D4) /
                                         (cbrt_pos(K) * std::pow(R, 2.0 / 3.0))});
    b.terms.push_back({"het_drift", cbrt_pos(p.L * p.zeta_star_sq * D4) /
                                        std::pow(R, 2.0 / 3.0)});
    b.terms.push_back({"optimization", p.L * p.D * p.D / R});
    return b;
  }
  const double A2 = p.A * p.A;
  b.terms.push_back(
      {"statistical", std::sqrt(p.L * p.sigma * p.sigma * p.A) / std::sqrt(MK * R)});
  b.terms.push_back({"stat_drift", cbrt_pos(p.L * p.L * p.sigma * p.sigma * A2) /
                                       (cbrt_pos(K) * std::pow(R, 2.0 / 3.0))});
  b.terms.push_back(
      {"het_drift", cbrt_pos(p.L * p.L * p.zeta_sq * A2) / std::pow(R, 2.0 / 3.0)});
  b.terms.push_back({"optimization", p.L * std::sqrt(p.beta_sq) * p.A / R});
  return b;
}

double k_saturation(const BoundParams& p) {
  if (p.zeta_star_sq <= 0.0) return std::numeric_limits<double>::infinity();
  return p.sigma * p.sigma * p.mu * p.R / (p.L * p.zeta_star_sq);
}

}  // namespace fedsim
