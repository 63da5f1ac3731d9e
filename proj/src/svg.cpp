#include "fedsim/svg.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <stdexcept>

namespace fedsim {

namespace {

constexpr double kWidth = 840, kHeight = 520;
constexpr double kLeft = 70, kRight = 820, kTop = 40, kBottom = 470;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                          "#9467bd", "#ff7f0e", "#8c564b"};

std::string px(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
  return std::string(buf, res.ptr);
}

std::string sci_label(int decade) {
  return "1e" + std::to_string(decade);
}

}  // namespace

double LogAxis::y(double v) const {
  const double lg = std::log10(v);
  const double t = (lg - lo_decade) / (hi_decade - lo_decade);
  return bottom - t * (bottom - top);
}

double LogAxis::decade_height() const {
  return (bottom - top) / (hi_decade - lo_decade);
}

LogAxis make_log_axis(double min_positive, double max_value) {
  double lo = std::floor(std::log10(min_positive));
  double hi = std::ceil(std::log10(max_value));
  if (hi <= lo) hi = lo + 1;
  return {lo, hi, kTop, kBottom};
}

std::string plot_svg(const std::vector<PlotSeries>& series, PlotMetric metric,
                     const std::string& title) {
  if (series.empty()) throw std::invalid_argument("plot: no series");
  for (const auto& s : series)
    if (s.rows.empty()) throw std::invalid_argument("plot: empty series " + s.label);

  auto lohi = [&](const AggregateRow& r) {
    return metric == PlotMetric::gap
               ? std::array<double, 3>{r.min_gap, r.median_gap, r.max_gap}
               : std::array<double, 3>{r.min_dist_sq, r.median_dist_sq, r.max_dist_sq};
  };

  int max_round = 0;
  double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
  for (const auto& s : series)
    for (const auto& r : s.rows) {
      max_round = std::max(max_round, r.round);
      for (double v : lohi(r)) {
        if (v > 0.0) vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
      }
    }
  if (!(vmax > 0.0)) {  // all-zero data still renders, on a token scale
    vmin = 1e-16;
    vmax = 1.0;
  }
  // keep the canvas usable when values span hundreds of decades (underflow)
  vmin = std::max(vmin, vmax * 1e-24);
  const LogAxis axis = make_log_axis(vmin, vmax);
  const double floor_v = std::pow(10.0, axis.lo_decade);
  const auto clampv = [&](double v) { return std::max(v, floor_v); };
  const auto xPos = [&](int round) {
    return max_round == 0
               ? kLeft
               : kLeft + (kRight - kLeft) * static_cast<double>(round) / max_round;
  };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(kWidth) +
         "\" height=\"" + px(kHeight) + "\" viewBox=\"0 0 " + px(kWidth) + " " +
         px(kHeight) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + px(kWidth) + "\" height=\"" +
         px(kHeight) + "\" fill=\"white\"/>\n";
  if (!title.empty())
    out += "<text x=\"" + px((kLeft + kRight) / 2) +
           "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"15\">" + title + "</text>\n";

  // decade gridlines + labels
  for (int d = static_cast<int>(axis.lo_decade); d <= static_cast<int>(axis.hi_decade); ++d) {
    const double y = axis.y(std::pow(10.0, d));
    out += "<line x1=\"" + px(kLeft) + "\" y1=\"" + px(y) + "\" x2=\"" + px(kRight) +
           "\" y2=\"" + px(y) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    out += "<text x=\"" + px(kLeft - 8) + "\" y=\"" + px(y + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           sci_label(d) + "</text>\n";
  }
  // x ticks
  for (int i = 0; i <= 4; ++i) {
    const int round = max_round * i / 4;
    const double x = xPos(round);
    out += "<line x1=\"" + px(x) + "\" y1=\"" + px(kBottom) + "\" x2=\"" + px(x) +
           "\" y2=\"" + px(kBottom + 5) + "\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
    out += "<text x=\"" + px(x) + "\" y=\"" + px(kBottom + 20) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           std::to_string(round) + "</text>\n";
  }
  out += "<text x=\"" + px((kLeft + kRight) / 2) + "\" y=\"" + px(kHeight - 8) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">round"
         "</text>\n";
  const std::string ylabel = metric == PlotMetric::gap ? "F(x) - F*" : "|x - x*|^2";
  out += "<text x=\"16\" y=\"" + px((kTop + kBottom) / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 16 " + px((kTop + kBottom) / 2) + ")\">" + ylabel +
         "</text>\n";
  // frame
  out += "<rect x=\"" + px(kLeft) + "\" y=\"" + px(kTop) + "\" width=\"" +
         px(kRight - kLeft) + "\" height=\"" + px(kBottom - kTop) +
         "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % std::size(kPalette)];
    // min-max band: forward over max, back over min
    std::string pts;
    for (const auto& r : series[si].rows)
      pts += px(xPos(r.round)) + "," + px(axis.y(clampv(lohi(r)[2]))) + " ";
    for (auto it = series[si].rows.rbegin(); it != series[si].rows.rend(); ++it)
      pts += px(xPos(it->round)) + "," + px(axis.y(clampv(lohi(*it)[0]))) + " ";
    pts.pop_back();
    out += "<polygon points=\"" + pts + "\" fill=\"" + color +
           "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";

    std::string mid;
    for (const auto& r : series[si].rows)
      mid += px(xPos(r.round)) + "," + px(axis.y(clampv(lohi(r)[1]))) + " ";
    mid.pop_back();
    out += "<polyline points=\"" + mid + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.8\"/>\n";

    // legend entry
    const double ly = kTop + 16 + 18 * static_cast<double>(si);
    out += "<line x1=\"" + px(kRight - 150) + "\" y1=\"" + px(ly) + "\" x2=\"" +
           px(kRight - 120) + "\" y2=\"" + px(ly) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + px(kRight - 112) + "\" y=\"" + px(ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + series[si].label +
           "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

void write_plot_svg(const std::string& path, const std::vector<PlotSeries>& series,
                    PlotMetric metric, const std::string& title) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << plot_svg(series, metric, title);
}

}  // namespace fedsim
