// penlab: penalized model selection for heteroscedastic regression with
// regressograms. Subcommands: simulate, oracle-check, table, heatmap.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "penlab/harness.hpp"
#include "penlab/penalties.hpp"
#include "penlab/risk_decomposition.hpp"
#include "penlab/selection.hpp"

namespace fs = std::filesystem;
using namespace penlab;

namespace {

struct SimulateOptions {
  std::string config_path;
  std::string experiment;
  std::string collection;
  std::string maxdim_rule;
  std::vector<std::string> procedures;
  std::optional<int> replications;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out_dir;
  std::string sweep;
};

std::vector<int> parse_sweep(const std::string& sweep) {
  if (sweep.rfind("n=", 0) != 0) {
    throw std::runtime_error("--sweep expects n=<comma separated sizes>");
  }
  std::vector<int> sizes;
  std::string cur;
  for (char c : sweep.substr(2) + ",") {
    if (c == ',') {
      if (!cur.empty()) sizes.push_back(std::stoi(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (sizes.empty()) throw std::runtime_error("--sweep lists no sample sizes");
  return sizes;
}

void run_one(ExperimentConfig cfg, const std::string& out_dir) {
  cfg.out_dir = out_dir;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<ReplicationRecord> records = run_experiment(cfg);
  const CorReport report = compute_cor(records, cfg.procedures);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::vector<Heatmap> heatmaps;
  const bool half_split = cfg.collection.family == CollectionSpec::Family::TwoRegimeHalf;
  if (half_split) {
    heatmaps.push_back(selection_heatmap(records, "oracle"));
    for (const ProcedureInstance& p : cfg.procedures) {
      if (p.id == ProcId::IdDim) {
        heatmaps.push_back(selection_heatmap(records, "IdDim"));
        break;
      }
    }
  }
  emit_outputs(records, report, heatmaps, cfg.out_dir, cfg, wall);

  std::printf("wrote %s (%d replications, %zu procedures, %.1fs)\n", cfg.out_dir.c_str(),
              cfg.replications, cfg.procedures.size(), wall);
}

int cmd_simulate(const SimulateOptions& opt) {
  ExperimentConfig cfg;
  if (!opt.config_path.empty()) {
    cfg = load_config(opt.config_path);
  } else if (!opt.experiment.empty()) {
    cfg = experiment_preset(opt.experiment);
    cfg.procedures = parse_procedures({"all"}, cfg.cov_grid);
  } else {
    std::fprintf(stderr, "simulate needs --config or --experiment\n");
    return 2;
  }
  if (!opt.experiment.empty() && !opt.config_path.empty()) {
    std::fprintf(stderr, "use either --config or --experiment, not both\n");
    return 2;
  }
  if (!opt.collection.empty() || !opt.maxdim_rule.empty()) {
    const auto [cur_fam, cur_rule] = [&] {
      // defaults mirror the loaded config when only one flag is given
      switch (cfg.collection.rule) {
        case CollectionSpec::MaxDimRule::LogN: return std::pair(std::string("reg-half"), std::string("log"));
        case CollectionSpec::MaxDimRule::LogSqN: return std::pair(std::string("reg-half"), std::string("log2"));
        default: return std::pair(std::string("reg-half"), std::to_string(cfg.collection.explicit_max));
      }
    }();
    cfg.collection = parse_collection_spec(
        opt.collection.empty() ? cur_fam : opt.collection,
        opt.maxdim_rule.empty() ? cur_rule : opt.maxdim_rule);
  }
  if (!opt.procedures.empty()) cfg.procedures = parse_procedures(opt.procedures, cfg.cov_grid);
  if (opt.replications) cfg.replications = *opt.replications;
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.threads) cfg.threads = *opt.threads;
  if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;

  if (!opt.sweep.empty()) {
    for (int n : parse_sweep(opt.sweep)) {
      ExperimentConfig c = cfg;
      c.scenario.n = n;
      run_one(c, (fs::path(cfg.out_dir) / ("n" + std::to_string(n))).string());
    }
    return 0;
  }
  run_one(cfg, cfg.out_dir);
  return 0;
}

// ---------------------------------------------------------------------------
// oracle-check: exact-expectation and identity checks with pass/fail lines
// ---------------------------------------------------------------------------

struct CheckReporter {
  int failures = 0;

  void report(const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] %-44s %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    if (!pass) ++failures;
  }
};

double brute_force_correction(int n, double p) {
  // direct enumeration of the binomial weights
  double total = 0.0;
  for (int k = 1; k <= n; ++k) {
    double log_c = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    total += std::exp(log_c + k * std::log(p) + (n - k) * std::log1p(-p)) * (n * p / k);
  }
  return total - 1.0;
}

void check_occupancy_correction(CheckReporter& rep) {
  double worst = 0.0;
  for (int n = 1; n <= 12; ++n) {
    for (int pi = 1; pi <= 9; ++pi) {
      const double p = pi / 10.0;
      worst = std::max(worst, std::abs(occupancy_correction(n, p) -
                                       brute_force_correction(n, p)));
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max |err| = %.3e", worst);
  rep.report("occupancy correction vs enumeration", worst <= 1e-12, buf);
  rep.report("occupancy correction at p = 1",
             occupancy_correction(7, 1.0) == 0.0 && occupancy_correction(200, 1.0) == 0.0,
             "exact zero");

  bool monotone = true;
  double prev = std::abs(occupancy_correction(2, 0.5));
  for (int np : {10, 100, 1000, 10000}) {
    const double cur = std::abs(occupancy_correction(2 * np, 0.5));
    monotone = monotone && cur < prev;
    prev = cur;
  }
  rep.report("correction magnitude decreasing in n*p", monotone, "p = 1/2 sweep");
}

void check_decomposition_identity(CheckReporter& rep) {
  const RegressionScenario sc = make_scenario("X1-005");
  double worst = 0.0;
  for (int it = 0; it < 100; ++it) {
    RngStream g(2024, it, 900);
    RegressionScenario small = sc;
    small.n = 60;
    const Dataset data = sample(small, g);
    const int d1 = 1 + static_cast<int>(g.below(8));
    const int d2 = 1 + static_cast<int>(g.below(8));
    const Partition part = build_partition(ModelIndex::two_regime(d1, d2));
    const BinMoments moments = bin_moments(small, part);
    const DecompositionRecord r = decompose(data, small, part);

    // the deviation of the Bayes risk, computed on its own
    double pn_bayes = 0.0;
    for (int i = 0; i < data.n(); ++i) {
      const double d = small.s(data.x[i]) - data.y[i];
      pn_bayes += d * d;
    }
    pn_bayes /= data.n();
    const double bayes_dev = pn_bayes - moments.total.v2;

    const double lhs = r.optimism;
    const double rhs = r.estimation_error + r.training_gain - r.bias_deviation - bayes_dev;
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max rel err = %.3e over 100 samples", worst);
  rep.report("optimism decomposition identity", worst <= 1e-10, buf);
}

void check_expected_formulas(CheckReporter& rep, int replications, std::uint64_t seed) {
  const std::vector<std::string> experiments = {"X1-005", "S0-1", "XS1-05", "X1-005mu02"};
  const std::vector<std::pair<int, int>> model_dims = {{2, 2}, {4, 4}, {9, 9}, {2, 16}, {16, 2}};

  for (const std::string& name : experiments) {
    const RegressionScenario sc = make_scenario(name);
    for (const auto& [d1, d2] : model_dims) {
      const ModelIndex model = ModelIndex::two_regime(d1, d2);
      const Partition part = build_partition(model);
      const BinMoments moments = bin_moments(sc, part);
      const double exp_est = expected_estimation_error(moments, sc.n);
      const double exp_gain = expected_training_gain(moments, sc.n);

      double sum_e = 0.0, sum_e2 = 0.0, sum_g = 0.0, sum_g2 = 0.0;
      for (int r = 0; r < replications; ++r) {
        RngStream g(seed, r, 901);
        const Dataset data = sample(sc, g);
        const DecompositionRecord rec = decompose(data, sc, part, moments);
        sum_e += rec.estimation_error;
        sum_e2 += rec.estimation_error * rec.estimation_error;
        sum_g += rec.training_gain;
        sum_g2 += rec.training_gain * rec.training_gain;
      }
      const double n_rep = replications;
      const double mean_e = sum_e / n_rep;
      const double se_e = std::sqrt((sum_e2 / n_rep - mean_e * mean_e) / (n_rep - 1));
      const double mean_g = sum_g / n_rep;
      const double se_g = std::sqrt((sum_g2 / n_rep - mean_g * mean_g) / (n_rep - 1));

      char buf[160];
      std::snprintf(buf, sizeof(buf), "MC %.5g vs exact %.5g (3SE %.2g)", mean_e, exp_est,
                    3 * se_e);
      rep.report(name + " (" + std::to_string(d1) + "," + std::to_string(d2) +
                     ") estimation error",
                 std::abs(mean_e - exp_est) <= 3 * se_e, buf);
      std::snprintf(buf, sizeof(buf), "MC %.5g vs exact %.5g (3SE %.2g)", mean_g, exp_gain,
                    3 * se_g);
      rep.report(name + " (" + std::to_string(d1) + "," + std::to_string(d2) +
                     ") training gain",
                 std::abs(mean_g - exp_gain) <= 3 * se_g, buf);
    }
  }
}

void check_bias_expansion(CheckReporter& rep) {
  {
    const RegressionScenario sc = make_scenario("X1-005");  // s(x) = x
    double worst = 0.0;
    for (int d : {1, 2, 4, 8, 16}) {
      const ModelIndex model = ModelIndex::two_regime(d, d);
      const BiasExpansion be = bias_expansion(sc, model);
      const double bias = projection_bias(sc, build_partition(model));
      worst = std::max(worst, std::abs(be.predicted_bias - bias));
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "max |err| = %.3e", worst);
    rep.report("bias expansion exact for linear s", worst <= 1e-10, buf);
  }
  {
    const RegressionScenario sc = make_scenario("S0-1");  // s(x) = sin(pi x)
    double prev = std::numeric_limits<double>::infinity();
    bool decreasing = true;
    for (int d : {4, 8, 16, 32}) {
      const ModelIndex model = ModelIndex::two_regime(d, d);
      const BiasExpansion be = bias_expansion(sc, model);
      const double bias = projection_bias(sc, build_partition(model));
      const double rel = std::abs(be.predicted_bias - bias) / bias;
      decreasing = decreasing && rel < prev;
      prev = rel;
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "final rel err = %.3e", prev);
    rep.report("bias expansion error shrinking in D", decreasing && prev < 0.02, buf);
  }
}

int cmd_oracle_check(int replications, std::uint64_t seed) {
  CheckReporter rep;
  check_occupancy_correction(rep);
  check_decomposition_identity(rep);
  check_expected_formulas(rep, replications, seed);
  check_bias_expansion(rep);
  std::printf("%s (%d failure%s)\n", rep.failures == 0 ? "OK" : "FAILED", rep.failures,
              rep.failures == 1 ? "" : "s");
  return rep.failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// table / heatmap rendering
// ---------------------------------------------------------------------------

int cmd_table(const std::string& in_dir) {
  std::ifstream in(fs::path(in_dir) / "cor.csv");
  if (!in) {
    std::fprintf(stderr, "cannot open %s/cor.csv\n", in_dir.c_str());
    return 1;
  }
  std::string line;
  std::getline(in, line);  // header
  std::printf("%-10s %8s %10s %10s\n", "procedure", "cov", "cor", "eps");
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::string cur;
    for (char c : line) {
      if (c == ',') {
        cols.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    cols.push_back(cur);
    if (cols.size() != 4) continue;
    const double cor = std::stod(cols[2]);
    const double eps = std::stod(cols[3]);
    std::printf("%-10s %8s %10.3f %10.3f\n", cols[0].c_str(), cols[1].c_str(), cor, eps);
  }
  return 0;
}

int cmd_heatmap(const std::string& in_dir, const std::string& which) {
  std::vector<ProcedureInstance> roster;
  const std::vector<ReplicationRecord> records =
      read_records_csv((fs::path(in_dir) / "records.csv").string(), &roster);
  const Heatmap heat = selection_heatmap(records, which);

  const fs::path out_path = fs::path(in_dir) / ("heatmap_" + which + ".csv");
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::fprintf(stderr, "cannot write %s\n", out_path.string().c_str());
    return 1;
  }
  out << "D1,D2,log10freq\n";
  for (const auto& [cell, value] : heat.cells) {
    out << cell.first << ',' << cell.second << ',' << csv_double(value) << '\n';
  }
  std::printf("wrote %s (%zu cells over %d replications)\n", out_path.string().c_str(),
              heat.cells.size(), heat.replications);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"penalized model selection for heteroscedastic regressograms"};
  app.require_subcommand(1);

  SimulateOptions sim;
  CLI::App* simulate = app.add_subcommand("simulate", "run a simulation study");
  simulate->add_option("--config", sim.config_path, "TOML config or manifest.json");
  simulate->add_option("--experiment", sim.experiment, "named experiment (e.g. X1-005)");
  simulate->add_option("--collection", sim.collection, "reg|reg-half|reg-t=<t>|reg-var");
  simulate->add_option("--maxdim-rule", sim.maxdim_rule, "log|log2|<int>");
  simulate->add_option("--procedures", sim.procedures, "procedure tokens (e.g. L2 C IdDim)");
  int replications = 0;
  std::uint64_t seed = 0;
  int threads = 0;
  CLI::Option* rep_opt = simulate->add_option("--replications", replications, "replication count");
  CLI::Option* seed_opt = simulate->add_option("--seed", seed, "base seed");
  CLI::Option* thr_opt = simulate->add_option("--threads", threads, "worker threads");
  simulate->add_option("--out", sim.out_dir, "output directory");
  simulate->add_option("--sweep", sim.sweep, "n=<list>: rerun over sample sizes");

  int check_replications = 2000;
  std::uint64_t check_seed = 7;
  CLI::App* oracle = app.add_subcommand("oracle-check", "run the exact-expectation checks");
  oracle->add_option("--replications", check_replications, "Monte Carlo replications");
  oracle->add_option("--seed", check_seed, "base seed");

  std::string table_dir;
  CLI::App* table = app.add_subcommand("table", "render cor.csv as a text table");
  table->add_option("--in", table_dir, "results directory")->required();

  std::string heat_dir, heat_which;
  CLI::App* heatmap = app.add_subcommand("heatmap", "selection-frequency heatmap CSV");
  heatmap->add_option("--in", heat_dir, "results directory")->required();
  heatmap->add_option("--which", heat_which, "oracle|iddim|<procedure token>")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) {
      if (*rep_opt) sim.replications = replications;
      if (*seed_opt) sim.seed = seed;
      if (*thr_opt) sim.threads = threads;
      return cmd_simulate(sim);
    }
    if (oracle->parsed()) return cmd_oracle_check(check_replications, check_seed);
    if (table->parsed()) return cmd_table(table_dir);
    if (heatmap->parsed()) return cmd_heatmap(heat_dir, heat_which);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
