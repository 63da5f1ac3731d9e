#pragma once

#include <string>
#include <vector>

namespace fedsim {

enum class BoundCase { strongly_convex, general_convex, non_convex };

struct BoundParams {
  double mu = 0.0;
  double L = 1.0;
  double sigma = 0.0;
  double zeta_star_sq = 0.0;  // gradient diversity at the optimum (convex cases)
  double beta_sq = 0.0;       // gradient diversity everywhere (non-convex case)
  double zeta_sq = 0.0;
  int M = 1;
  int S = -1;  // -1 = full participation
  int K = 1;
  int R = 1;
  double eta_tilde = 0.0;  // per-round aggregate stepsize
  double D = 1.0;          // ||x0 - x*||
  double A = 1.0;          // F(x0) - F*

  int participants() const { return S < 0 ? M : S; }
};

struct BoundTerm {
  std::string id;
  double value;
};

struct Bound {
  std::vector<BoundTerm> terms;
  double total() const;
  const BoundTerm& dominant() const;  // largest term
  double dominant_share() const;      // its fraction of the total
};

// Largest stepsize each case admits (strongly/general convex: 1/(6L);
// non-convex: 1/(6L(beta+1))).
double max_eta_tilde(const BoundParams& p, BoundCase c);

// Throws when the stated stepsize window for the case is violated
// (strongly convex additionally needs eta_tilde >= 1/(mu R)).
void check_constraints(const BoundParams& p, BoundCase c);

// Per-round upper bound value for the weighted-average iterate (convex cases)
// or the min gradient norm (non-convex). Term ids:
//   optimization, noise, sampling, noise_drift, het_drift
// The sampling term is exactly zero at full participation.
Bound sfl_bound(const BoundParams& p, BoundCase c);
Bound pfl_bound(const BoundParams& p, BoundCase c);

// Order-level tuned rates over the whole horizon, all absolute constants 1,
// labeled "order-level" by construction. When polylog is true the strongly
// convex statistical term carries the stepsize-tuning log factor
// ln(max(2, mu^2 D^2 M K R / sigma^2)); otherwise every polylog factor is 1.
// Term ids: statistical, stat_drift, het_drift, optimization.
Bound sfl_tuned_rate(const BoundParams& p, BoundCase c, bool polylog = false);
Bound pfl_tuned_rate(const BoundParams& p, BoundCase c, bool polylog = false);

// Local steps stop helping the dominant strongly convex term beyond
// K* = sigma^2 mu R / (L zeta*^2); infinity when zeta* = 0.
double k_saturation(const BoundParams& p);

}  // namespace fedsim
