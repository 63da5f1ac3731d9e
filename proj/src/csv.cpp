#include "fedsim/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fedsim {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trace_csv(const RunResult& res) {
  std::string out = "round,dist_sq,gap,grad_norm_sq,diverged\n";
  for (std::size_t i = 0; i < res.trace.size(); ++i) {
    const auto& t = res.trace[i];
    const bool last = i + 1 == res.trace.size();
    out += std::to_string(t.round);
    out += ',';
    out += format_double(t.dist_sq);
    out += ',';
    out += format_double(t.gap);
    out += ',';
    out += format_double(t.grad_norm_sq);
    out += ',';
    out += (last && res.diverged) ? '1' : '0';
    out += '\n';
  }
  return out;
}

void write_trace_csv(const std::string& path, const RunResult& res) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << trace_csv(res);
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<AggregateRow> aggregate(const std::vector<RunResult>& runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
  std::size_t rounds = 0;
  for (const auto& r : runs) rounds = std::max(rounds, r.trace.size());
  std::vector<AggregateRow> rows;
  rows.reserve(rounds);
  std::vector<double> gaps, dists;
  for (std::size_t i = 0; i < rounds; ++i) {
    gaps.clear();
    dists.clear();
    for (const auto& r : runs) {
      if (i < r.trace.size()) {
        gaps.push_back(r.trace[i].gap);
        dists.push_back(r.trace[i].dist_sq);
      }
    }
    AggregateRow row;
    row.round = static_cast<int>(i);
    row.median_gap = median_of(gaps);
    row.min_gap = *std::min_element(gaps.begin(), gaps.end());
    row.max_gap = *std::max_element(gaps.begin(), gaps.end());
    row.median_dist_sq = median_of(dists);
    row.min_dist_sq = *std::min_element(dists.begin(), dists.end());
    row.max_dist_sq = *std::max_element(dists.begin(), dists.end());
    rows.push_back(row);
  }
  return rows;
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::string out =
      "round,median_gap,min_gap,max_gap,median_dist_sq,min_dist_sq,max_dist_sq\n";
  for (const auto& r : rows) {
    out += std::to_string(r.round);
    for (double v : {r.median_gap, r.min_gap, r.max_gap, r.median_dist_sq,
                     r.min_dist_sq, r.max_dist_sq}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

void write_aggregate_csv(const std::string& path,
                         const std::vector<AggregateRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << aggregate_csv(rows);
}

std::vector<AggregateRow> read_aggregate_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error(path + ": empty csv");
  std::vector<AggregateRow> rows;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    AggregateRow r;
    auto next = [&]() -> std::string {
      if (!std::getline(ss, field, ',')) throw std::runtime_error(path + ": short row");
      return field;
    };
    r.round = std::stoi(next());
    r.median_gap = std::stod(next());
    r.min_gap = std::stod(next());
    r.max_gap = std::stod(next());
    r.median_dist_sq = std::stod(next());
    r.min_dist_sq = std::stod(next());
    r.max_dist_sq = std::stod(next());
    rows.push_back(r);
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");
  return rows;
}

}  // namespace fedsim
