#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "fedsim/quadratic.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

enum class Algorithm { sfl, pfl, minibatch_sgd };
enum class Averaging { last_iterate, uniform, strongly_convex };
enum class ClipMode { per_step, per_update_sum };

struct RunConfig {
  Algorithm algorithm = Algorithm::sfl;
  int S = -1;  // participating clients per round; -1 = all
  int K = 1;   // local steps per client per round
  int R = 1;   // rounds
  double eta = 0.1;
  double clip_max_norm = 0.0;  // <= 0 disables clipping
  ClipMode clip_mode = ClipMode::per_step;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  Averaging averaging = Averaging::strongly_convex;
  double weight_mu = -1.0;   // < 0: use the federation's mu
  Eigen::VectorXd x0;        // empty: all-ones

  int participants(int fed_size) const { return S < 0 ? fed_size : S; }
};

// eta_tilde: the per-round aggregate stepsize the bounds are stated in.
// SFL advances S*K steps per round, PFL and minibatch SGD K.
double effective_lr(const RunConfig& cfg, int fed_size);

struct TraceRecord {
  int round;
  Eigen::VectorXd x;
  double dist_sq;
  double gap;
  double grad_norm_sq;
};

struct RunResult {
  std::vector<TraceRecord> trace;  // rounds 0..R, truncated if diverged
  bool diverged = false;
  int diverged_round = -1;  // round whose update blew up
  Eigen::VectorXd x_final;
  Eigen::VectorXd x_avg;  // per cfg.averaging, over all recorded rounds
  double avg_gap = 0.0;   // F(x_avg) - F*
  double f_star = 0.0;
  double max_applied_grad_norm = 0.0;
};

struct RoundStatus {
  bool diverged = false;
  double max_applied_grad_norm = 0.0;
};

Eigen::VectorXd clip(Eigen::VectorXd g, double max_norm);

// One noisy gradient oracle call: grad(client, x) plus isotropic Gaussian
// noise of total second moment sigma^2, split evenly across coordinates.
// sigma <= 0 consumes no randomness and returns the exact gradient.
Eigen::VectorXd stochastic_grad(const Quadraticd& client,
                                const Eigen::VectorXd& x, double sigma,
                                Rng& rng);

// One round of each algorithm. `round` indexes the randomness streams; the
// same (seed, round) always yields the same permutation and noise draws, for
// either algorithm.
Eigen::VectorXd sfl_round(const Federationd& fed, Eigen::VectorXd x,
                          const RunConfig& cfg, std::uint64_t round,
                          RoundStatus* status = nullptr);

// sfl_round with a caller-supplied client order (no permutation draw).
Eigen::VectorXd sfl_round_ordered(const Federationd& fed, Eigen::VectorXd x,
                                  const RunConfig& cfg,
                                  const std::vector<int>& order,
                                  std::uint64_t round,
                                  RoundStatus* status = nullptr);

Eigen::VectorXd pfl_round(const Federationd& fed, const Eigen::VectorXd& x,
                          const RunConfig& cfg, std::uint64_t round,
                          RoundStatus* status = nullptr);

Eigen::VectorXd minibatch_sgd_round(const Federationd& fed, Eigen::VectorXd x,
                                    const RunConfig& cfg, std::uint64_t round,
                                    RoundStatus* status = nullptr);

// Full trajectory with per-round metrics and the weighted iterate average
// (weights (1-mu*eta_tilde/2)^-(r+1) in strongly convex mode, 1 in uniform).
RunResult run(const Federationd& fed, const RunConfig& cfg);

// Exactly-rounded mean over rows (client iterates), reduced in ascending
// client order: averaging identical vectors returns that vector bit-exactly.
Eigen::VectorXd exact_mean(const std::vector<Eigen::VectorXd>& xs);

}  // namespace fedsim
