#pragma once

#include <string>
#include <vector>

#include "fedsim/algorithms.hpp"

namespace fedsim {

// Shortest round-trip decimal form (to_chars); parsing it back recovers the
// exact double, and equal inputs give byte-equal text.
std::string format_double(double v);

// header: round,dist_sq,gap,grad_norm_sq,diverged
// A truncated (diverged) run marks its final row diverged=1; values are the
// last finite iterate's, never NaN.
std::string trace_csv(const RunResult& res);
void write_trace_csv(const std::string& path, const RunResult& res);

struct AggregateRow {
  int round;
  double median_gap, min_gap, max_gap;
  double median_dist_sq, min_dist_sq, max_dist_sq;
};

// Per-round median/min/max across the runs that reached that round.
std::vector<AggregateRow> aggregate(const std::vector<RunResult>& runs);

// header: round,median_gap,min_gap,max_gap,median_dist_sq,min_dist_sq,max_dist_sq
std::string aggregate_csv(const std::vector<AggregateRow>& rows);
void write_aggregate_csv(const std::string& path,
                         const std::vector<AggregateRow>& rows);
std::vector<AggregateRow> read_aggregate_csv(const std::string& path);

}  // namespace fedsim
