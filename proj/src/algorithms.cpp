#include "fedsim/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fedsim/rng.hpp"
#include "fedsim/sampling.hpp"

namespace fedsim {

namespace {

constexpr double kDivergenceNorm = 1e12;

bool blown_up(const Eigen::VectorXd& x) {
  return !x.allFinite() || x.norm() > kDivergenceNorm;
}

void note_applied(RoundStatus* status, const Eigen::VectorXd& g) {
  if (status) status->max_applied_grad_norm =
      std::max(status->max_applied_grad_norm, g.norm());
}

// K SGD steps of one client, in place. sigma_eff is the per-draw noise level
// (callers pass cfg.sigma, or sigma/sqrt(MK) for the minibatch baseline).
// Returns false when the iterate blows past the divergence guard.
bool local_steps(const Quadraticd& client, Eigen::VectorXd& x,
                 const RunConfig& cfg, double sigma_eff, Rng& noise_rng,
                 RoundStatus* status) {
  if (cfg.clip_mode == ClipMode::per_update_sum && cfg.clip_max_norm > 0.0) {
    // clip the summed local gradient, i.e. the whole local update
    const Eigen::VectorXd start = x;
    for (int k = 0; k < cfg.K; ++k) {
      x -= cfg.eta * stochastic_grad(client, x, sigma_eff, noise_rng);
      if (blown_up(x)) return false;
    }
    Eigen::VectorXd summed = (start - x) / cfg.eta;
    summed = clip(std::move(summed), cfg.clip_max_norm);
    note_applied(status, summed);
    x = start - cfg.eta * summed;
    return !blown_up(x);
  }
  for (int k = 0; k < cfg.K; ++k) {
    Eigen::VectorXd g = stochastic_grad(client, x, sigma_eff, noise_rng);
    if (cfg.clip_max_norm > 0.0) g = clip(std::move(g), cfg.clip_max_norm);
    note_applied(status, g);
    x -= cfg.eta * g;
    if (blown_up(x)) return false;
  }
  return true;
}

void mark_diverged(RoundStatus* status) {
  if (status) status->diverged = true;
}

}  // namespace

double effective_lr(const RunConfig& cfg, int fed_size) {
  const int s = cfg.participants(fed_size);
  return cfg.algorithm == Algorithm::sfl ? s * cfg.K * cfg.eta : cfg.K * cfg.eta;
}

Eigen::VectorXd clip(Eigen::VectorXd g, double max_norm) {
  const double n = g.norm();
  if (n > max_norm) {
    g /= n;  // normalize first: rescaling (100) to 10 then lands exactly on 10
    g *= max_norm;
  }
  return g;
}

Eigen::VectorXd stochastic_grad(const Quadraticd& client,
                                const Eigen::VectorXd& x, double sigma,
                                Rng& rng) {
  Eigen::VectorXd g = grad(client, x);
  if (sigma <= 0.0) return g;
  const double per_coord = sigma / std::sqrt(static_cast<double>(g.size()));
  for (Eigen::Index j = 0; j < g.size(); ++j) g[j] += per_coord * rng.gaussian();
  return g;
}

Eigen::VectorXd sfl_round(const Federationd& fed, Eigen::VectorXd x,
                          const RunConfig& cfg, std::uint64_t round,
                          RoundStatus* status) {
  Rng perm_rng(derive_stream(cfg.seed, round, StreamPurpose::permutation, 0));
  std::vector<int> order = sample_permutation(fed.size(), perm_rng);
  order.resize(cfg.participants(fed.size()));
  return sfl_round_ordered(fed, std::move(x), cfg, order, round, status);
}

Eigen::VectorXd sfl_round_ordered(const Federationd& fed, Eigen::VectorXd x,
                                  const RunConfig& cfg,
                                  const std::vector<int>& order,
                                  std::uint64_t round, RoundStatus* status) {
  for (int m : order) {
    Rng noise(derive_stream(cfg.seed, round, StreamPurpose::noise,
                            static_cast<std::uint64_t>(m)));
    if (!local_steps(fed.clients.at(m), x, cfg, cfg.sigma, noise, status)) {
      mark_diverged(status);
      return x;
    }
  }
  return x;
}

Eigen::VectorXd pfl_round(const Federationd& fed, const Eigen::VectorXd& x,
                          const RunConfig& cfg, std::uint64_t round,
                          RoundStatus* status) {
  const int s = cfg.participants(fed.size());
  std::vector<int> selected;
  if (s == fed.size()) {
    // full participation consumes no permutation randomness
    selected.resize(s);
    for (int m = 0; m < s; ++m) selected[m] = m;
  } else {
    Rng perm_rng(derive_stream(cfg.seed, round, StreamPurpose::permutation, 0));
    selected = sample_without_replacement(fed.size(), s, perm_rng);
    std::sort(selected.begin(), selected.end());
  }
  std::vector<Eigen::VectorXd> locals;
  locals.reserve(selected.size());
  for (int m : selected) {
    Eigen::VectorXd xm = x;
    Rng noise(derive_stream(cfg.seed, round, StreamPurpose::noise,
                            static_cast<std::uint64_t>(m)));
    if (!local_steps(fed.clients.at(m), xm, cfg, cfg.sigma, noise, status)) {
      mark_diverged(status);
      return x;
    }
    locals.push_back(std::move(xm));
  }
  return exact_mean(locals);
}

Eigen::VectorXd minibatch_sgd_round(const Federationd& fed, Eigen::VectorXd x,
                                    const RunConfig& cfg, std::uint64_t round,
                                    RoundStatus* status) {
  const Quadraticd g = global_objective(fed);
  const double denom = std::sqrt(static_cast<double>(fed.size()) * cfg.K);
  Rng noise(derive_stream(cfg.seed, round, StreamPurpose::noise, 0));
  if (!local_steps(g, x, cfg, cfg.sigma / denom, noise, status))
    mark_diverged(status);
  return x;
}

namespace {

struct TwoSum {
  double s, err;
};

TwoSum two_sum(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  return {s, (a - (s - bb)) + (b - bb)};
}

// Shewchuk grow-expansion: e (nonoverlapping) + b, exactly.
void expansion_add(std::vector<double>& e, double b) {
  std::vector<double> h;
  h.reserve(e.size() + 1);
  double q = b;
  for (double comp : e) {
    const TwoSum t = two_sum(q, comp);
    if (t.err != 0.0) h.push_back(t.err);
    q = t.s;
  }
  h.push_back(q);
  e = std::move(h);
}

// Correctly-rounded-in-practice quotient of an exact expansion by n: one
// residual correction via fma. Exact whenever the true quotient is
// representable (the averaging-identical-iterates case).
double expansion_div(const std::vector<double>& e, double n) {
  double approx = 0.0;
  for (double comp : e) approx += comp;  // ascending magnitude
  const double q0 = approx / n;
  std::vector<double> resid = e;
  const double p = q0 * n;
  expansion_add(resid, -p);
  expansion_add(resid, -std::fma(q0, n, -p));
  double r = 0.0;
  for (double comp : resid) r += comp;
  return q0 + r / n;
}

}  // namespace

Eigen::VectorXd exact_mean(const std::vector<Eigen::VectorXd>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty set");
  const Eigen::Index d = xs.front().size();
  Eigen::VectorXd out(d);
  const double n = static_cast<double>(xs.size());
  std::vector<double> e;
  for (Eigen::Index j = 0; j < d; ++j) {
    e.clear();
    for (const auto& x : xs) expansion_add(e, x[j]);
    out[j] = expansion_div(e, n);
  }
  return out;
}

RunResult run(const Federationd& fed, const RunConfig& cfg) {
  if (cfg.R < 0) throw std::invalid_argument("run: R must be >= 0");
  if (cfg.K < 1) throw std::invalid_argument("run: K must be >= 1");
  const int s = cfg.participants(fed.size());
  if (s < 1 || s > fed.size())
    throw std::invalid_argument("run: S must be in [1, M]");

  const Quadraticd g = global_objective(fed);
  const Eigen::VectorXd xstar = global_minimizer(fed);
  const double fstar = value(g, xstar);

  Eigen::VectorXd x =
      cfg.x0.size() ? cfg.x0 : Eigen::VectorXd::Ones(fed.dim());
  if (x.size() != fed.dim()) throw std::invalid_argument("run: x0 dimension mismatch");

  double mu = cfg.weight_mu;
  if (mu < 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g.A);
    mu = std::max(0.0, es.eigenvalues().minCoeff());
  }
  // relative weight of round r+1 vs round r is 1/(1-q)
  const double q = cfg.averaging == Averaging::strongly_convex
                       ? mu * effective_lr(cfg, fed.size()) / 2.0
                       : 0.0;

  RunResult res;
  res.f_star = fstar;
  res.trace.reserve(cfg.R + 1);
  auto record = [&](int r) {
    res.trace.push_back({r, x, (x - xstar).squaredNorm(),
                         value(g, x) - fstar, grad(g, x).squaredNorm()});
  };
  record(0);

  Eigen::VectorXd xbar = x;
  double weight_total = 1.0;

  RoundStatus status;
  for (int r = 0; r < cfg.R; ++r) {
    switch (cfg.algorithm) {
      case Algorithm::sfl:
        x = sfl_round(fed, std::move(x), cfg, r, &status);
        break;
      case Algorithm::pfl:
        x = pfl_round(fed, x, cfg, r, &status);
        break;
      case Algorithm::minibatch_sgd:
        x = minibatch_sgd_round(fed, std::move(x), cfg, r, &status);
        break;
    }
    if (status.diverged) {
      res.diverged = true;
      res.diverged_round = r;
      break;
    }
    record(r + 1);
    weight_total = weight_total * (1.0 - q) + 1.0;
    xbar += (x - xbar) / weight_total;
  }

  res.max_applied_grad_norm = status.max_applied_grad_norm;
  res.x_final = res.trace.back().x;
  res.x_avg = cfg.averaging == Averaging::last_iterate ? res.x_final : xbar;
  res.avg_gap = value(g, res.x_avg) - fstar;
  return res;
}

}  // namespace fedsim
