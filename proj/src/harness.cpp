#include "fedsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>

#include "fedsim/rng.hpp"

namespace fedsim {

std::vector<double> default_grid() {
  return {0.003, 0.006, 0.01, 0.03, 0.06, 0.1, 0.3, 0.6};
}

double final_window_mean_gap(const RunResult& res) {
  if (res.diverged) return std::numeric_limits<double>::infinity();
  const int total = static_cast<int>(res.trace.size()) - 1;  // rounds completed
  const int window = std::max(1, total / 10);
  double sum = 0.0;
  for (std::size_t i = res.trace.size() - window; i < res.trace.size(); ++i)
    sum += res.trace[i].gap;
  return sum / window;
}

std::vector<std::uint64_t> derive_run_seeds(std::uint64_t master, int count) {
  std::vector<std::uint64_t> seeds(count);
  for (int i = 0; i < count; ++i)
    seeds[i] = derive_stream(master, 0, StreamPurpose::seeds,
                             static_cast<std::uint64_t>(i));
  return seeds;
}

namespace {

// Each job fills its own slot; the result is schedule-independent.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& job) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(hw, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        job(i);
      }
    });
  for (auto& t : pool) t.join();
}

double median_sorted_copy(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<RunResult> run_seeds(const Federationd& fed, RunConfig cfg,
                                 const std::vector<std::uint64_t>& seeds) {
  std::vector<RunResult> out(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    RunConfig c = cfg;
    c.seed = seeds[i];
    out[i] = run(fed, c);
  });
  return out;
}

GridResult grid_search(const Federationd& fed, RunConfig cfg,
                       const std::vector<double>& grid,
                       const std::vector<std::uint64_t>& seeds) {
  if (grid.empty()) throw std::invalid_argument("grid search: empty grid");
  if (seeds.empty()) throw std::invalid_argument("grid search: no seeds");
  GridResult res;
  res.cells.resize(grid.size());

  std::vector<RunResult> flat(grid.size() * seeds.size());
  parallel_for(flat.size(), [&](std::size_t i) {
    RunConfig c = cfg;
    c.eta = grid[i / seeds.size()];
    c.seed = seeds[i % seeds.size()];
    flat[i] = run(fed, c);
  });

  for (std::size_t g = 0; g < grid.size(); ++g) {
    GridCell& cell = res.cells[g];
    cell.eta = grid[g];
    cell.any_diverged = false;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const RunResult& r = flat[g * seeds.size() + s];
      cell.per_seed_metric.push_back(final_window_mean_gap(r));
      cell.any_diverged = cell.any_diverged || r.diverged;
    }
    cell.median_metric = cell.any_diverged
                             ? std::numeric_limits<double>::infinity()
                             : median_sorted_copy(cell.per_seed_metric);
  }

  for (std::size_t g = 0; g < res.cells.size(); ++g) {
    if (std::isinf(res.cells[g].median_metric)) continue;
    if (!res.best_index ||
        res.cells[g].median_metric < res.cells[*res.best_index].median_metric) {
      res.best_index = g;  // strict <: ties keep the smaller eta
    }
  }
  if (res.best_index) res.best_eta = res.cells[*res.best_index].eta;
  return res;
}

CompareOutcome compare_algorithms(const Federationd& fed, RunConfig base,
                                  const std::vector<double>& grid,
                                  const std::vector<std::uint64_t>& seeds) {
  CompareOutcome out;
  RunConfig scfg = base;
  scfg.algorithm = Algorithm::sfl;
  out.sfl = grid_search(fed, scfg, grid, seeds);
  RunConfig pcfg = base;
  pcfg.algorithm = Algorithm::pfl;
  out.pfl = grid_search(fed, pcfg, grid, seeds);

  const double inf = std::numeric_limits<double>::infinity();
  out.sfl_best_metric = out.sfl.best_index ? out.sfl.cells[*out.sfl.best_index].median_metric : inf;
  out.pfl_best_metric = out.pfl.best_index ? out.pfl.cells[*out.pfl.best_index].median_metric : inf;

  if (out.sfl.best_eta) {
    scfg.eta = *out.sfl.best_eta;
    out.sfl_best_agg = aggregate(run_seeds(fed, scfg, seeds));
  }
  if (out.pfl.best_eta) {
    pcfg.eta = *out.pfl.best_eta;
    out.pfl_best_agg = aggregate(run_seeds(fed, pcfg, seeds));
  }
  return out;
}

BoundParams bound_params_from(const Federationd& fed, const RunConfig& cfg) {
  const auto rep = heterogeneity(fed);
  const Quadraticd g = global_objective(fed);
  const Eigen::VectorXd xstar = global_minimizer(fed);
  const Eigen::VectorXd x0 =
      cfg.x0.size() ? cfg.x0 : Eigen::VectorXd::Ones(fed.dim());

  BoundParams p;
  p.mu = rep.mu;
  p.L = rep.L;
  p.sigma = cfg.sigma;
  p.zeta_star_sq = rep.zeta_star_sq;
  p.beta_sq = rep.beta_sq_fit;
  p.zeta_sq = rep.zeta_sq_fit;
  p.M = fed.size();
  p.S = cfg.participants(fed.size());
  p.K = cfg.K;
  p.R = cfg.R;
  p.eta_tilde = effective_lr(cfg, fed.size());
  p.D = (x0 - xstar).norm();
  p.A = value(g, x0) - value(g, xstar);
  return p;
}

std::vector<OverlayRow> bound_overlay(const Federationd& fed, RunConfig cfg,
                                      BoundCase c) {
  const auto rep = heterogeneity(fed);
  if (c != BoundCase::non_convex && !rep.all_clients_convex)
    throw std::domain_error(
        "bound overlay: convex cases need every client convex");

  const RunResult res = run(fed, cfg);
  BoundParams p = bound_params_from(fed, cfg);

  // weighted prefix averages, same weights as the engine
  const double q = c == BoundCase::strongly_convex && cfg.averaging == Averaging::strongly_convex
                       ? p.mu * p.eta_tilde / 2.0
                       : 0.0;
  Eigen::VectorXd xbar = res.trace.front().x;
  double weight_total = 1.0;
  const Quadraticd g = global_objective(fed);
  const double fstar = res.f_star;

  std::vector<OverlayRow> rows;
  rows.reserve(res.trace.size());
  for (std::size_t i = 0; i < res.trace.size(); ++i) {
    if (i > 0) {
      weight_total = weight_total * (1.0 - q) + 1.0;
      xbar += (res.trace[i].x - xbar) / weight_total;
    }
    const int r = res.trace[i].round;
    OverlayRow row;
    row.round = r;
    row.measured = value(g, xbar) - fstar;
    row.bound = std::numeric_limits<double>::quiet_NaN();
    row.valid = false;
    if (r >= 1) {
      BoundParams pr = p;
      pr.R = r;
      try {
        check_constraints(pr, c);
        const Bound b = cfg.algorithm == Algorithm::sfl ? sfl_bound(pr, c)
                                                        : pfl_bound(pr, c);
        row.bound = b.total();
        row.valid = true;
      } catch (const std::domain_error&) {
        // outside the stepsize window for this R; row stays invalid
      }
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fedsim
