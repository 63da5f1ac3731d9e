#include <cstdlib>
#include <fstream>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedsim/bounds.hpp"
#include "fedsim/csv.hpp"
#include "fedsim/harness.hpp"
#include "fedsim/partition.hpp"
#include "fedsim/presets.hpp"
#include "fedsim/svg.hpp"

namespace {

using namespace fedsim;

std::string eta_tag(double eta) { return format_double(eta); }

fedsim::Federationd load_federation(const std::string& preset_name,
                                    const std::string& spec_path) {
  if (!spec_path.empty()) {
    std::ifstream in(spec_path);
    if (!in) throw std::runtime_error("cannot open " + spec_path);
    std::stringstream buf;
    buf << in.rdbuf();
    return federation_from_json(buf.str());
  }
  return preset(preset_name);
}

std::uint64_t master_seed(std::uint64_t cli_seed) {
  if (const char* env = std::getenv("FEDSIM_SEED"))
    return std::strtoull(env, nullptr, 10);
  return cli_seed;
}

Algorithm parse_algo(const std::string& s) {
  if (s == "sfl") return Algorithm::sfl;
  if (s == "pfl") return Algorithm::pfl;
  if (s == "minibatch") return Algorithm::minibatch_sgd;
  throw CLI::ValidationError("--algo must be sfl, pfl or minibatch");
}

BoundCase parse_case(const std::string& s) {
  if (s == "strongly-convex") return BoundCase::strongly_convex;
  if (s == "general-convex") return BoundCase::general_convex;
  if (s == "non-convex") return BoundCase::non_convex;
  throw CLI::ValidationError("--case must be strongly-convex, general-convex or non-convex");
}

void print_bound_text(const std::string& name, const Bound& b) {
  std::printf("%s\n", name.c_str());
  for (const auto& t : b.terms)
    std::printf("  %-14s %s\n", t.id.c_str(), format_double(t.value).c_str());
  std::printf("  %-14s %s\n", "total", format_double(b.total()).c_str());
  std::printf("  %-14s %s (%.1f%%)\n", "dominant", b.dominant().id.c_str(),
              100.0 * b.dominant_share());
}

nlohmann::ordered_json bound_json(const Bound& b) {
  nlohmann::ordered_json terms = nlohmann::ordered_json::array();
  for (const auto& t : b.terms) terms.push_back({{"id", t.id}, {"value", t.value}});
  return {{"terms", terms},
          {"total", b.total()},
          {"dominant", b.dominant().id},
          {"dominant_share", b.dominant_share()}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sequential vs parallel federated training on quadratic testbeds"};
  app.set_config("--config", "", "TOML-like config file; sections per subcommand");
  app.require_subcommand(1);

  // ---------------- simulate ----------------
  auto* sim = app.add_subcommand("simulate", "run one algorithm, emit trace CSVs");
  struct {
    std::string preset = "group1", spec, algo = "sfl", out = ".";
    std::string averaging = "strongly-convex";
    double eta = 0.1, sigma = 0.0, clip = 0.0;
    int rounds = 1000, seeds = 5, K = 10, S = -1;
    std::uint64_t seed = 0;
    bool plot = false;
  } so;
  sim->add_option("--preset", so.preset, "named federation (group1..group4, sweep-d*-z*)");
  sim->add_option("--spec", so.spec, "federation JSON file (overrides --preset)");
  sim->add_option("--algo", so.algo, "sfl | pfl | minibatch");
  sim->add_option("--eta", so.eta, "client learning rate");
  sim->add_option("--rounds", so.rounds, "communication rounds");
  sim->add_option("--seeds", so.seeds, "number of runs, seeds derived from --seed");
  sim->add_option("--seed", so.seed, "master seed (env FEDSIM_SEED overrides)");
  sim->add_option("--local-steps,-K", so.K, "local steps per client per round");
  sim->add_option("--participate,-S", so.S, "clients per round (-1: all)");
  sim->add_option("--sigma", so.sigma, "gradient noise level");
  sim->add_option("--clip", so.clip, "max gradient norm (0: off)");
  sim->add_option("--averaging", so.averaging,
                  "last | uniform | strongly-convex (iterate average)");
  sim->add_option("--out", so.out, "output directory");
  sim->add_flag("--plot", so.plot, "also emit an SVG of the aggregate");

  // ---------------- compare ----------------
  auto* cmp = app.add_subcommand("compare", "grid-search both algorithms, emit figure");
  struct {
    std::string preset = "group1", spec, out = ".";
    std::vector<double> grid;
    double sigma = 0.0, clip = 0.0;
    int rounds = 1000, seeds = 5, K = 10, S = -1;
    std::uint64_t seed = 0;
  } co;
  cmp->add_option("--preset", co.preset, "named federation");
  cmp->add_option("--spec", co.spec, "federation JSON file (overrides --preset)");
  cmp->add_option("--grid", co.grid, "learning-rate grid")->delimiter(',');
  cmp->add_option("--rounds", co.rounds, "communication rounds");
  cmp->add_option("--seeds", co.seeds, "seeds per cell");
  cmp->add_option("--seed", co.seed, "master seed (env FEDSIM_SEED overrides)");
  cmp->add_option("--local-steps,-K", co.K, "local steps per client per round");
  cmp->add_option("--participate,-S", co.S, "clients per round (-1: all)");
  cmp->add_option("--sigma", co.sigma, "gradient noise level");
  cmp->add_option("--clip", co.clip, "max gradient norm (0: off)");
  cmp->add_option("--out", co.out, "output directory");

  // ---------------- bound ----------------
  auto* bnd = app.add_subcommand("bound", "evaluate the closed-form guarantees");
  struct {
    std::string kase = "strongly-convex";
    double mu = 1.0, L = 1.0, sigma = 0.0, zeta_star = 0.0, zeta = 0.0, beta = 0.0;
    double eta_tilde = 0.0, D = 1.0, A = 1.0;
    int M = 2, K = 1, R = 100, S = -1;
    bool json = false, tuned = false, polylog = false;
  } bo;
  bnd->add_option("--case", bo.kase, "strongly-convex | general-convex | non-convex");
  bnd->add_option("--mu", bo.mu, "strong convexity of the mean objective");
  bnd->add_option("--L", bo.L, "smoothness");
  bnd->add_option("--sigma", bo.sigma, "gradient noise level");
  bnd->add_option("--zeta-star", bo.zeta_star, "heterogeneity at the optimum");
  bnd->add_option("--zeta", bo.zeta, "heterogeneity everywhere (non-convex)");
  bnd->add_option("--beta", bo.beta, "relative heterogeneity (non-convex)");
  bnd->add_option("--M", bo.M, "clients");
  bnd->add_option("--K", bo.K, "local steps");
  bnd->add_option("--R", bo.R, "rounds");
  bnd->add_option("--S", bo.S, "participating clients (-1: all)");
  bnd->add_option("--eta-tilde", bo.eta_tilde,
                  "effective stepsize (default: the largest admissible)");
  bnd->add_option("--D", bo.D, "start distance to the minimizer");
  bnd->add_option("--A", bo.A, "start objective gap (non-convex)");
  bnd->add_flag("--json", bo.json, "machine-readable output");
  bnd->add_flag("--tuned", bo.tuned, "print the tuned (horizon-optimal) rates instead");
  bnd->add_flag("--polylog", bo.polylog, "include the stepsize-tuning log factor");

  // ---------------- partition ----------------
  auto* par = app.add_subcommand("partition", "two-level Dirichlet label partition");
  struct {
    std::string labels, format = "i32", out = "partition.json";
    int M = 500, C = 1;
    double alpha = 10.0;
    std::uint64_t seed = 1234;
    bool stats = false;
  } po;
  par->add_option("--labels", po.labels, "label file")->required();
  par->add_option("--format", po.format, "i32 | csv");
  par->add_option("-M,--clients", po.M, "clients");
  par->add_option("-C,--classes-per-client", po.C, "classes per client");
  par->add_option("--alpha", po.alpha, "Dirichlet concentration");
  par->add_option("--seed", po.seed, "seed (env FEDSIM_SEED overrides)");
  par->add_option("--out", po.out, "output JSON path");
  par->add_flag("--stats", po.stats, "print class-count matrix summary");

  // ---------------- plot ----------------
  auto* plt = app.add_subcommand("plot", "render aggregate CSVs as an SVG");
  struct {
    std::vector<std::string> in;
    std::string out = "fig.svg", metric = "gap", title;
  } lo;
  plt->add_option("--in", lo.in, "aggregate CSV files")->required()->expected(-1);
  plt->add_option("--out", lo.out, "SVG path");
  plt->add_option("--metric", lo.metric, "gap | dist");
  plt->add_option("--title", lo.title, "chart title");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      const auto fed = load_federation(so.preset, so.spec);
      RunConfig cfg;
      cfg.algorithm = parse_algo(so.algo);
      cfg.K = so.K;
      cfg.S = so.S;
      cfg.R = so.rounds;
      cfg.eta = so.eta;
      cfg.sigma = so.sigma;
      cfg.clip_max_norm = so.clip;
      if (so.averaging == "last") cfg.averaging = Averaging::last_iterate;
      else if (so.averaging == "uniform") cfg.averaging = Averaging::uniform;
      else if (so.averaging == "strongly-convex") cfg.averaging = Averaging::strongly_convex;
      else throw std::runtime_error("--averaging must be last, uniform or strongly-convex");

      const auto seeds = derive_run_seeds(master_seed(so.seed), so.seeds);
      const auto runs = run_seeds(fed, cfg, seeds);
      std::filesystem::create_directories(so.out);
      const std::string stem = so.algo + "_eta" + eta_tag(so.eta);
      for (std::size_t i = 0; i < runs.size(); ++i)
        write_trace_csv(so.out + "/" + stem + "_seed" + std::to_string(i) + ".csv",
                        runs[i]);
      const auto agg = aggregate(runs);
      write_aggregate_csv(so.out + "/" + stem + "_agg.csv", agg);
      if (so.plot)
        write_plot_svg(so.out + "/" + stem + ".svg", {{so.algo, agg}});
      int diverged = 0;
      for (const auto& r : runs) diverged += r.diverged ? 1 : 0;
      std::printf("%zu runs, %d diverged; final median gap %s\n", runs.size(),
                  diverged, format_double(agg.back().median_gap).c_str());
      if (diverged > 0) return 2;
      return 0;
    }

    if (*cmp) {
      const auto fed = load_federation(co.preset, co.spec);
      RunConfig cfg;
      cfg.K = co.K;
      cfg.S = co.S;
      cfg.R = co.rounds;
      cfg.sigma = co.sigma;
      cfg.clip_max_norm = co.clip;
      const auto grid = co.grid.empty() ? default_grid() : co.grid;
      const auto seeds = derive_run_seeds(master_seed(co.seed), co.seeds);
      const auto out = compare_algorithms(fed, cfg, grid, seeds);

      std::filesystem::create_directories(co.out);
      auto dump_grid = [&](const char* name, const GridResult& g) {
        std::string text = "eta,median_final_gap,any_diverged\n";
        for (const auto& cell : g.cells) {
          text += format_double(cell.eta) + "," + format_double(cell.median_metric) +
                  "," + (cell.any_diverged ? "1" : "0") + "\n";
        }
        std::ofstream f(co.out + "/grid_" + name + ".csv", std::ios::binary);
        f << text;
      };
      dump_grid("sfl", out.sfl);
      dump_grid("pfl", out.pfl);

      std::vector<PlotSeries> series;
      if (!out.sfl_best_agg.empty()) {
        write_aggregate_csv(co.out + "/sfl_best_agg.csv", out.sfl_best_agg);
        series.push_back({"SFL eta=" + eta_tag(*out.sfl.best_eta), out.sfl_best_agg});
      }
      if (!out.pfl_best_agg.empty()) {
        write_aggregate_csv(co.out + "/pfl_best_agg.csv", out.pfl_best_agg);
        series.push_back({"PFL eta=" + eta_tag(*out.pfl.best_eta), out.pfl_best_agg});
      }
      if (!series.empty())
        write_plot_svg(co.out + "/compare.svg", series, PlotMetric::gap,
                       co.spec.empty() ? co.preset : "custom federation");

      auto show = [&](const char* name, const GridResult& g, double best) {
        if (g.best_eta)
          std::printf("%s best eta %s, median final-window gap %s\n", name,
                      format_double(*g.best_eta).c_str(), format_double(best).c_str());
        else
          std::printf("%s: no stable learning rate\n", name);
      };
      show("SFL", out.sfl, out.sfl_best_metric);
      show("PFL", out.pfl, out.pfl_best_metric);
      return 0;
    }

    if (*bnd) {
      const BoundCase c = parse_case(bo.kase);
      BoundParams p;
      p.mu = bo.mu;
      p.L = bo.L;
      p.sigma = bo.sigma;
      p.zeta_star_sq = bo.zeta_star * bo.zeta_star;
      p.zeta_sq = bo.zeta * bo.zeta;
      p.beta_sq = bo.beta * bo.beta;
      p.M = bo.M;
      p.S = bo.S;
      p.K = bo.K;
      p.R = bo.R;
      p.D = bo.D;
      p.A = bo.A;
      p.eta_tilde = bo.eta_tilde > 0.0 ? bo.eta_tilde : max_eta_tilde(p, c);

      const Bound sb = bo.tuned ? sfl_tuned_rate(p, c, bo.polylog) : sfl_bound(p, c);
      const Bound pb = bo.tuned ? pfl_tuned_rate(p, c, bo.polylog) : pfl_bound(p, c);
      if (bo.json) {
        nlohmann::ordered_json j;
        j["eta_tilde"] = p.eta_tilde;
        j["tuned"] = bo.tuned;
        j["sfl"] = bound_json(sb);
        j["pfl"] = bound_json(pb);
        std::printf("%s\n", j.dump(2).c_str());
      } else {
        std::printf("eta_tilde = %s%s\n", format_double(p.eta_tilde).c_str(),
                    bo.tuned ? " (tuned rates: order-level, constants suppressed)" : "");
        print_bound_text("SFL", sb);
        print_bound_text("PFL", pb);
      }
      return 0;
    }

    if (*par) {
      const auto data = load_labels(po.labels, po.format);
      const auto part =
          ex_dir(data, po.M, po.C, po.alpha, master_seed(po.seed));
      std::ofstream f(po.out, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write " + po.out);
      f << partition_to_json(part) << "\n";
      for (const auto& w : part.warnings)
        std::fprintf(stderr, "warning: %s\n", w.c_str());
      if (po.stats) {
        const auto st = partition_stats(part, data);
        std::printf("clients=%zu classes=%d mean_pairwise_tv=%s\n",
                    part.assignment.size(), data.num_classes,
                    format_double(st.mean_pairwise_tv).c_str());
        for (std::size_t m = 0; m < st.class_counts.size() && m < 20; ++m) {
          std::string row = "client " + std::to_string(m) + ":";
          for (auto cnt : st.class_counts[m]) row += " " + std::to_string(cnt);
          std::printf("%s\n", row.c_str());
        }
        if (st.class_counts.size() > 20)
          std::printf("... (%zu clients total)\n", st.class_counts.size());
      }
      return 0;
    }

    if (*plt) {
      std::vector<PlotSeries> series;
      for (const auto& path : lo.in) {
        PlotSeries s;
        s.label = std::filesystem::path(path).stem().string();
        s.rows = read_aggregate_csv(path);
        series.push_back(std::move(s));
      }
      const PlotMetric metric =
          lo.metric == "dist" ? PlotMetric::dist_sq : PlotMetric::gap;
      write_plot_svg(lo.out, series, metric, lo.title);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
