#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "fedsim/algorithms.hpp"
#include "fedsim/csv.hpp"
#include "fedsim/presets.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/sampling.hpp"

using namespace fedsim;

namespace {

Eigen::VectorXd vec1(double v) { return Eigen::VectorXd::Constant(1, v); }

Quadraticd scalar_client(double a, double b) {
  Quadraticd q;
  q.A = Eigen::MatrixXd::Constant(1, 1, a);
  q.b = Eigen::VectorXd::Constant(1, b);
  return q;
}

Federationd single_fed(double a, double b) {
  Federationd fed;
  fed.clients = {scalar_client(a, b)};
  return fed;
}

bool bit_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a(i) != b(i)) return false;
  return true;
}

}  // namespace

TEST_CASE("clipping matches the worked examples exactly") {
  // under the threshold: untouched, bit for bit
  Eigen::VectorXd g(2);
  g << 3.0, 4.0;  // norm 5
  CHECK(bit_equal(clip(g, 10.0), g));

  // (3,4) at 2.5: direction kept, norm 2.5
  const Eigen::VectorXd c = clip(g, 2.5);
  CHECK(c(0) == 1.5);
  CHECK(c(1) == 2.0);

  // scalar: 100 at 10 lands exactly on 10
  CHECK(clip(vec1(100.0), 10.0)(0) == 10.0);
  CHECK(clip(vec1(-100.0), 10.0)(0) == -10.0);
}

TEST_CASE("noisy oracle: exact at sigma 0, right moments otherwise") {
  const auto cl = scalar_client(1.0, 0.3);
  Rng rng(derive_stream(3, 0, StreamPurpose::noise, 0));
  const Eigen::VectorXd x = vec1(2.0);
  CHECK(stochastic_grad(cl, x, 0.0, rng)(0) == grad(cl, x)(0));

  // total second moment sigma^2 split across coordinates
  Quadraticd flat;
  flat.A = Eigen::MatrixXd::Zero(3, 3);
  flat.b = Eigen::VectorXd::Zero(3);
  const double sigma = 0.7;
  double sq = 0.0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  const int n = 30000;
  Rng noise(derive_stream(3, 1, StreamPurpose::noise, 0));
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd e = stochastic_grad(flat, Eigen::VectorXd::Zero(3), sigma, noise);
    mean += e;
    sq += e.squaredNorm();
  }
  CHECK(sq / n == doctest::Approx(sigma * sigma).epsilon(0.05));
  CHECK((mean / n).norm() < 0.02);

  // same stream coordinates, same draw
  Rng r1(derive_stream(9, 5, StreamPurpose::noise, 1));
  Rng r2(derive_stream(9, 5, StreamPurpose::noise, 1));
  CHECK(bit_equal(stochastic_grad(cl, x, 0.4, r1), stochastic_grad(cl, x, 0.4, r2)));
}

TEST_CASE("one gradient step on x^2/2") {
  RunConfig cfg;
  cfg.K = 1;
  cfg.eta = 0.1;
  const auto x = sfl_round(single_fed(1.0, 0.0), vec1(1.0), cfg, 0);
  CHECK(x(0) == 0.9);
}

TEST_CASE("sequential round, hand-traced on the opposing pair") {
  // clients x^2/2 + x and x^2/2 - x from 0, one step each at eta = 0.1:
  // order (0,1): 0 -> -0.1 -> -0.1 - 0.1*(-1.1) = 0.01 (+ the fp residue)
  const auto fed = preset("group2");
  RunConfig cfg;
  cfg.K = 1;
  cfg.eta = 0.1;
  const auto fwd = sfl_round_ordered(fed, vec1(0.0), cfg, {0, 1}, 0);
  CHECK(fwd(0) == 0.010000000000000009);
  const auto rev = sfl_round_ordered(fed, vec1(0.0), cfg, {1, 0}, 0);
  CHECK(rev(0) == -0.010000000000000009);
}

TEST_CASE("parallel round averages the two local runs exactly") {
  const auto fed = preset("group2");
  RunConfig cfg;
  cfg.algorithm = Algorithm::pfl;
  cfg.K = 1;
  cfg.eta = 0.1;
  // locals land on -0.1 and +0.1; their exact mean is 0
  CHECK(pfl_round(fed, vec1(0.0), cfg, 0)(0) == 0.0);
}

TEST_CASE("single-client runs coincide bit for bit across algorithms") {
  const auto fed = single_fed(1.0, 0.3);

  RunConfig base;
  base.K = 1;
  base.R = 30;
  base.eta = 0.05;
  base.sigma = 0.3;
  base.seed = 77;
  base.x0 = vec1(2.0);

  auto sfl_cfg = base;
  sfl_cfg.algorithm = Algorithm::sfl;
  auto pfl_cfg = base;
  pfl_cfg.algorithm = Algorithm::pfl;
  auto mb_cfg = base;
  mb_cfg.algorithm = Algorithm::minibatch_sgd;

  const auto rs = run(fed, sfl_cfg);
  const auto rp = run(fed, pfl_cfg);
  const auto rm = run(fed, mb_cfg);

  // independent reference: plain SGD consuming the same noise stream
  Eigen::VectorXd x = vec1(2.0);
  for (int r = 0; r < base.R; ++r) {
    Rng noise(derive_stream(base.seed, r, StreamPurpose::noise, 0));
    x -= base.eta * stochastic_grad(fed.clients[0], x, base.sigma, noise);
    CHECK(bit_equal(rs.trace[r + 1].x, x));
    CHECK(bit_equal(rp.trace[r + 1].x, x));
    CHECK(bit_equal(rm.trace[r + 1].x, x));
  }

  // multiple local steps: sequential and parallel still agree at M=1
  auto sfl_k = sfl_cfg;
  sfl_k.K = 4;
  auto pfl_k = pfl_cfg;
  pfl_k.K = 4;
  const auto rsk = run(fed, sfl_k);
  const auto rpk = run(fed, pfl_k);
  for (std::size_t i = 0; i < rsk.trace.size(); ++i)
    CHECK(bit_equal(rsk.trace[i].x, rpk.trace[i].x));
}

TEST_CASE("sequential rounds reduce to a plain reshuffling loop") {
  const auto fed = preset("group3");
  RunConfig cfg;
  cfg.algorithm = Algorithm::sfl;
  cfg.K = 1;
  cfg.R = 100;
  cfg.eta = 0.05;
  cfg.seed = 12345;
  const auto res = run(fed, cfg);
  REQUIRE(res.trace.size() == 101);

  // the same recursion, written independently: one pass over a fresh
  // permutation per round, one exact gradient step per client
  Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
  for (int r = 0; r < cfg.R; ++r) {
    Rng perm(derive_stream(cfg.seed, r, StreamPurpose::permutation, 0));
    for (int m : sample_permutation(fed.size(), perm))
      x -= cfg.eta * grad(fed.clients[m], x);
    CHECK(bit_equal(res.trace[r + 1].x, x));
  }
}

TEST_CASE("identical clients collapse parallel rounds to one local run") {
  Quadraticd cl;
  cl.A = (Eigen::MatrixXd(2, 2) << 2.0, 0.3, 0.3, 1.0).finished();
  cl.b = (Eigen::VectorXd(2) << 1.0, -2.0).finished();
  Federationd fed;
  fed.clients = {cl, cl, cl};

  RunConfig cfg;
  cfg.algorithm = Algorithm::pfl;
  cfg.K = 7;
  cfg.eta = 0.04;
  Eigen::VectorXd x0(2);
  x0 << 3.0, -1.0;

  const auto out = pfl_round(fed, x0, cfg, 0);
  Eigen::VectorXd x = x0;
  for (int k = 0; k < cfg.K; ++k) x -= cfg.eta * grad(cl, x);
  CHECK(bit_equal(out, x));  // exact mean of identical iterates
}

TEST_CASE("homogeneous sequential rounds are MK plain steps") {
  const auto fed = preset("group1");
  RunConfig cfg;
  cfg.K = 3;
  cfg.eta = 0.02;
  cfg.seed = 5;
  Eigen::VectorXd x = vec1(1.0);
  const auto out = sfl_round(fed, x, cfg, 0);
  for (int k = 0; k < fed.size() * cfg.K; ++k)
    x -= cfg.eta * grad(fed.clients[0], x);
  CHECK(bit_equal(out, x));
}

TEST_CASE("minibatch baseline steps on the mean objective") {
  const auto fed = preset("group2");
  RunConfig cfg;
  cfg.algorithm = Algorithm::minibatch_sgd;
  cfg.K = 1;
  cfg.eta = 0.1;
  // mean objective is x^2/2: one step from 1 lands on 0.9
  CHECK(minibatch_sgd_round(fed, vec1(1.0), cfg, 0)(0) == 0.9);
}

TEST_CASE("exactly rounded means") {
  // identical vectors come back bit-identical
  Rng rng(derive_stream(50, 0, StreamPurpose::init, 0));
  Eigen::VectorXd v =
      Eigen::VectorXd::NullaryExpr(4, [&](Eigen::Index) { return rng.unit() * 3.0 - 1.5; });
  CHECK(bit_equal(exact_mean({v, v, v}), v));
  CHECK(bit_equal(exact_mean({v}), v));

  // small integer cases are exact; 7/3 rounds correctly
  CHECK(exact_mean({vec1(1.0), vec1(3.0)})(0) == 2.0);
  CHECK(exact_mean({vec1(1.0), vec1(2.0), vec1(4.0)})(0) == 7.0 / 3.0);
  CHECK(exact_mean({vec1(0.1), vec1(-0.1)})(0) == 0.0);

  CHECK_THROWS_AS((void)exact_mean({}), std::invalid_argument);
}

TEST_CASE("per-step clipping bounds every applied gradient") {
  const auto fed = preset("group4");
  RunConfig cfg;
  cfg.algorithm = Algorithm::sfl;
  cfg.K = 10;
  cfg.R = 50;
  cfg.eta = 0.6;
  cfg.sigma = 0.5;
  cfg.clip_max_norm = 5.0;
  cfg.seed = 21;
  const auto res = run(fed, cfg);
  CHECK_FALSE(res.diverged);
  CHECK(res.max_applied_grad_norm <= 5.0 * (1.0 + 1e-12));
  CHECK(res.max_applied_grad_norm > 0.0);
}

TEST_CASE("update-sum clipping bounds the whole local move instead") {
  const auto fed = single_fed(1.0, 0.0);
  RunConfig per_step;
  per_step.K = 2;
  per_step.eta = 0.1;
  per_step.clip_max_norm = 0.5;
  per_step.x0 = vec1(10.0);
  per_step.R = 1;

  auto per_sum = per_step;
  per_sum.clip_mode = ClipMode::per_update_sum;

  // per step: two clipped moves of 0.05 each
  const auto rs = run(fed, per_step);
  CHECK(rs.trace.back().x(0) == doctest::Approx(9.9).epsilon(1e-12));

  // per update: the summed gradient (19 unclipped) is rescaled to 0.5
  const auto ru = run(fed, per_sum);
  CHECK(ru.trace.back().x(0) == doctest::Approx(9.95).epsilon(1e-12));
  CHECK(ru.max_applied_grad_norm == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(ru.trace.back().x(0) - 10.0) <=
        per_sum.eta * per_sum.clip_max_norm * (1.0 + 1e-12));
}

TEST_CASE("divergence truncates the trace and never records non-finite values") {
  const auto fed = preset("group4");
  RunConfig cfg;
  cfg.algorithm = Algorithm::sfl;
  cfg.K = 10;
  cfg.R = 200;
  cfg.eta = 3.0;  // way past stability for the steep client
  cfg.seed = 2;
  const auto res = run(fed, cfg);
  CHECK(res.diverged);
  CHECK(res.diverged_round >= 0);
  CHECK(res.trace.size() == static_cast<std::size_t>(res.diverged_round) + 1);
  for (const auto& rec : res.trace) {
    CHECK(std::isfinite(rec.dist_sq));
    CHECK(std::isfinite(rec.gap));
    CHECK(std::isfinite(rec.grad_norm_sq));
    CHECK(rec.x.allFinite());
  }
  // the rendered trace flags the final row instead of printing NaN
  const std::string csv = trace_csv(res);
  CHECK(csv.find("nan") == std::string::npos);
  CHECK(csv.find("inf") == std::string::npos);
}

TEST_CASE("zero rounds still record the starting point") {
  const auto fed = preset("group2");
  RunConfig cfg;
  cfg.R = 0;
  const auto res = run(fed, cfg);
  REQUIRE(res.trace.size() == 1);
  CHECK(res.trace[0].round == 0);
  CHECK(res.trace[0].dist_sq == 1.0);   // x0 = 1, x* = 0
  CHECK(res.trace[0].gap == 0.5);       // mean objective x^2/2 at 1
  CHECK(res.x_avg(0) == 1.0);
  CHECK(res.avg_gap == 0.5);
}

TEST_CASE("trace metrics are the recomputed exact quantities") {
  const auto fed = preset("group3");
  RunConfig cfg;
  cfg.algorithm = Algorithm::pfl;
  cfg.K = 2;
  cfg.R = 10;
  cfg.eta = 0.05;
  cfg.sigma = 0.1;
  cfg.seed = 3;
  const auto res = run(fed, cfg);
  const auto g = global_objective(fed);
  const auto xstar = global_minimizer(fed);
  const double fstar = value(g, xstar);
  for (const auto& rec : res.trace) {
    CHECK(rec.dist_sq == (rec.x - xstar).squaredNorm());
    CHECK(rec.gap == value(g, rec.x) - fstar);
    CHECK(rec.grad_norm_sq == grad(g, rec.x).squaredNorm());
  }
}

TEST_CASE("uniform averaging returns the running arithmetic mean") {
  const auto fed = preset("group2");
  RunConfig cfg;
  cfg.averaging = Averaging::uniform;
  cfg.K = 2;
  cfg.R = 13;
  cfg.eta = 0.05;
  cfg.sigma = 0.2;
  cfg.seed = 9;
  const auto res = run(fed, cfg);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(1);
  for (const auto& rec : res.trace) mean += rec.x;
  mean /= static_cast<double>(res.trace.size());
  CHECK(res.x_avg(0) == doctest::Approx(mean(0)).epsilon(1e-12));

  auto last = cfg;
  last.averaging = Averaging::last_iterate;
  const auto rl = run(fed, last);
  CHECK(bit_equal(rl.x_avg, rl.trace.back().x));
  CHECK(rl.avg_gap == rl.trace.back().gap);
}

TEST_CASE("decaying-weight averaging matches the explicit weighted sum") {
  const auto fed = preset("group2");
  RunConfig cfg;
  cfg.averaging = Averaging::strongly_convex;
  cfg.K = 1;
  cfg.R = 20;
  cfg.eta = 0.1;
  cfg.sigma = 0.2;
  cfg.seed = 31;
  const auto res = run(fed, cfg);

  // mu = 1 for this family, eta_tilde = 2 * 1 * 0.1, so q = 0.1;
  // weights (1-q)^-(r+1) normalized over rounds 0..R
  const double q = 0.1;
  double wsum = 0.0;
  double xbar = 0.0;
  for (const auto& rec : res.trace) {
    const double w = std::pow(1.0 - q, -(rec.round + 1.0));
    wsum += w;
    xbar += w * rec.x(0);
  }
  xbar /= wsum;
  CHECK(res.x_avg(0) == doctest::Approx(xbar).epsilon(1e-10));

  // explicit weight override changes the profile
  auto flat = cfg;
  flat.weight_mu = 0.0;  // q = 0: uniform
  const auto rf = run(fed, flat);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(1);
  for (const auto& rec : rf.trace) mean += rec.x;
  mean /= static_cast<double>(rf.trace.size());
  CHECK(rf.x_avg(0) == doctest::Approx(mean(0)).epsilon(1e-12));
}

TEST_CASE("effective stepsize per round") {
  RunConfig cfg;
  cfg.K = 3;
  cfg.eta = 0.1;
  cfg.algorithm = Algorithm::sfl;
  CHECK(effective_lr(cfg, 2) == 2 * 3 * 0.1);
  cfg.S = 1;
  CHECK(effective_lr(cfg, 2) == 1 * 3 * 0.1);
  cfg.algorithm = Algorithm::pfl;
  CHECK(effective_lr(cfg, 2) == 3 * 0.1);
  cfg.algorithm = Algorithm::minibatch_sgd;
  CHECK(effective_lr(cfg, 2) == 3 * 0.1);
}

TEST_CASE("partial participation draws a sorted subset and shared noise streams") {
  Federationd fed;
  fed.clients = {scalar_client(1.0, 1.0), scalar_client(1.0, -1.0),
                 scalar_client(1.0, 0.5)};
  RunConfig cfg;
  cfg.algorithm = Algorithm::pfl;
  cfg.S = 2;
  cfg.K = 1;
  cfg.eta = 0.1;
  cfg.sigma = 0.2;
  cfg.seed = 101;

  // independent replay of the same round
  const std::uint64_t round = 4;
  Rng perm(derive_stream(cfg.seed, round, StreamPurpose::permutation, 0));
  auto sel = sample_without_replacement(3, 2, perm);
  std::sort(sel.begin(), sel.end());
  std::vector<Eigen::VectorXd> locals;
  for (int m : sel) {
    Rng noise(derive_stream(cfg.seed, round, StreamPurpose::noise,
                            static_cast<std::uint64_t>(m)));
    locals.push_back(vec1(0.5) -
                     cfg.eta * stochastic_grad(fed.clients[m], vec1(0.5),
                                               cfg.sigma, noise));
  }
  CHECK(bit_equal(pfl_round(fed, vec1(0.5), cfg, round), exact_mean(locals)));

  // sequential partial participation visits exactly S clients
  auto scfg = cfg;
  scfg.algorithm = Algorithm::sfl;
  Rng perm2(derive_stream(scfg.seed, round, StreamPurpose::permutation, 0));
  auto order = sample_permutation(3, perm2);
  order.resize(2);
  CHECK(bit_equal(sfl_round(fed, vec1(0.5), scfg, round),
                  sfl_round_ordered(fed, vec1(0.5), scfg, order, round)));
}

TEST_CASE("stable homogeneous runs contract monotonically") {
  const auto fed = preset("group1");
  RunConfig cfg;
  cfg.K = 5;
  cfg.R = 100;
  cfg.eta = 1.0 / 60.0;  // eta_tilde = 1/6
  const auto res = run(fed, cfg);
  CHECK_FALSE(res.diverged);
  for (std::size_t i = 1; i < res.trace.size(); ++i)
    CHECK(res.trace[i].dist_sq <= res.trace[i - 1].dist_sq);
  CHECK(res.trace.back().dist_sq <= 1e-12);
}

TEST_CASE("identical configurations replay identical trajectories") {
  const auto fed = preset("group3");
  RunConfig cfg;
  cfg.algorithm = Algorithm::pfl;
  cfg.K = 4;
  cfg.R = 40;
  cfg.eta = 0.03;
  cfg.sigma = 0.3;
  cfg.seed = 555;
  const auto a = run(fed, cfg);
  const auto b = run(fed, cfg);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i)
    CHECK(bit_equal(a.trace[i].x, b.trace[i].x));
  CHECK(trace_csv(a) == trace_csv(b));

  auto other = cfg;
  other.seed = 556;
  CHECK_FALSE(bit_equal(run(fed, other).trace.back().x, a.trace.back().x));
}

TEST_CASE("configuration validation") {
  const auto fed = preset("group2");
  RunConfig cfg;
  cfg.K = 0;
  CHECK_THROWS_AS((void)run(fed, cfg), std::invalid_argument);
  cfg.K = 1;
  cfg.R = -1;
  CHECK_THROWS_AS((void)run(fed, cfg), std::invalid_argument);
  cfg.R = 1;
  cfg.S = 3;
  CHECK_THROWS_AS((void)run(fed, cfg), std::invalid_argument);
  cfg.S = 0;
  CHECK_THROWS_AS((void)run(fed, cfg), std::invalid_argument);
  cfg.S = -1;
  cfg.x0 = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS((void)run(fed, cfg), std::invalid_argument);
}
