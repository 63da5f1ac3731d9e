#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/algorithms.hpp"
#include "fedsim/bounds.hpp"
#include "fedsim/csv.hpp"
#include "fedsim/quadratic.hpp"

namespace fedsim {

// learning-rate grid used by the comparison suites
std::vector<double> default_grid();

// mean gap over the final 10% of rounds (at least one round); the selection
// metric for grid search. Infinity for diverged runs.
double final_window_mean_gap(const RunResult& res);

// per-run seeds derived from one master seed
std::vector<std::uint64_t> derive_run_seeds(std::uint64_t master, int count);

struct GridCell {
  double eta;
  std::vector<double> per_seed_metric;  // final-window gaps
  double median_metric;                 // inf when any seed diverged
  bool any_diverged;
};

struct GridResult {
  std::vector<GridCell> cells;          // ascending eta
  std::optional<double> best_eta;       // empty: no stable learning rate
  std::optional<std::size_t> best_index;
};

// Runs cfg at every eta in grid for every seed; cells with any diverged seed
// rank last (metric = inf). Ties prefer the smaller eta.
GridResult grid_search(const Federationd& fed, RunConfig cfg,
                       const std::vector<double>& grid,
                       const std::vector<std::uint64_t>& seeds);

// All seeds of one (algorithm, eta) cell, in seed order.
std::vector<RunResult> run_seeds(const Federationd& fed, RunConfig cfg,
                                 const std::vector<std::uint64_t>& seeds);

struct CompareOutcome {
  GridResult sfl, pfl;
  std::vector<AggregateRow> sfl_best_agg, pfl_best_agg;  // empty when no stable eta
  double sfl_best_metric, pfl_best_metric;               // medians at the best eta
};

// Grid search for both algorithms on the shared seed list.
CompareOutcome compare_algorithms(const Federationd& fed, RunConfig base,
                                  const std::vector<double>& grid,
                                  const std::vector<std::uint64_t>& seeds);

struct OverlayRow {
  int round;
  double measured;  // weighted-average-iterate gap after `round` rounds
  double bound;     // theory value at R = round
  bool valid;       // round satisfies the case's stepsize window
};

// Measured weighted-average gap vs the per-round theory value for the run's
// eta_tilde. The measured column is a fresh prefix average per row, matching
// what the bound at R = row controls.
std::vector<OverlayRow> bound_overlay(const Federationd& fed, RunConfig cfg,
                                      BoundCase c);

// Fills mu/L/zeta*^2/zeta^2/M/S/K/R/eta_tilde/D/A from a federation and a run
// config (sigma and seed-driven values copied from cfg; D, A from x0).
BoundParams bound_params_from(const Federationd& fed, const RunConfig& cfg);

}  // namespace fedsim
