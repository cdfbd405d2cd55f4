#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>

#include "pcpd/bench.hpp"
#include "pcpd/gg.hpp"
#include "pcpd/gh.hpp"
#include "pcpd/rng.hpp"
#include "pcpd/synth.hpp"
#include "pcpd/tensor_io.hpp"

namespace fs = std::filesystem;

namespace {

struct SynthArgs {
  std::vector<pcpd::Index> dims;
  int rank = 1;
  std::optional<double> snr_db;
  std::uint64_t seed = 0;
  bool correlated = false;
  std::string out_dir;
};

int run_synth(const SynthArgs& args) {
  pcpd::SynthSpec spec;
  spec.dims = args.dims;
  spec.true_rank = args.rank;
  spec.factor_correlation =
      args.correlated ? pcpd::FactorCorrelation::correlated : pcpd::FactorCorrelation::iid;
  spec.seed = args.seed;
  const auto [clean, model] = pcpd::gen_cpd(spec);
  const pcpd::DenseTensor noisy =
      args.snr_db ? pcpd::add_noise(clean, *args.snr_db, pcpd::derive_seed(args.seed, 7)) : clean;

  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  pcpd::write_tensor(dir / "clean.tnsr", clean);
  pcpd::write_tensor(dir / "noisy.tnsr", noisy);
  for (int n = 0; n < model.order(); ++n)
    pcpd::write_matrix_csv(dir / ("factor_" + std::to_string(n + 1) + ".csv"),
                           model.factors[static_cast<std::size_t>(n)]);
  std::printf("wrote clean.tnsr, noisy.tnsr and %d factor files to %s\n", model.order(),
              dir.string().c_str());
  return 0;
}

struct FitArgs {
  std::string input;
  std::string algo = "gh";
  std::optional<int> rank_bound;
  std::optional<double> rank_bound_factor;
  int max_iters = 500;
  double tol = 1e-6;
  double prune_threshold = 1e-4;
  bool no_prune = false;
  int noise_period = 1;
  std::optional<double> fixed_beta;
  bool elbo = false;
  std::uint64_t seed = 0;
  std::string out_dir;
};

int run_fit(const FitArgs& args) {
  const auto algo = pcpd::parse_algorithm(args.algo);
  if (!algo) {
    std::fprintf(stderr, "unknown algorithm '%s' (expected gh, gg or gg-ho)\n",
                 args.algo.c_str());
    return 2;
  }
  const pcpd::DenseTensor y = pcpd::read_tensor(args.input);

  pcpd::FitOptions opts;
  opts.rank_bound = args.rank_bound;
  if (args.rank_bound_factor) opts.rank_bound_factor = *args.rank_bound_factor;
  opts.max_iters = args.max_iters;
  opts.tol = args.tol;
  opts.prune_rel_threshold = args.prune_threshold;
  opts.enable_pruning = !args.no_prune;
  opts.noise_update_period = args.noise_period;
  opts.fixed_beta = args.fixed_beta;
  opts.seed = args.seed;
  opts.compute_elbo = args.elbo;

  pcpd::FitReport report;
  switch (*algo) {
    case pcpd::Algorithm::gh: report = pcpd::gh::fit(y, opts); break;
    case pcpd::Algorithm::gg: report = pcpd::gg::fit(y, opts); break;
    case pcpd::Algorithm::gg_ho: report = pcpd::gg::fit(y, opts, true); break;
  }

  const std::string text = pcpd::format_fit_report(report, args.algo, y.dims);
  std::fputs(text.c_str(), stdout);
  if (!args.out_dir.empty()) {
    const fs::path dir(args.out_dir);
    fs::create_directories(dir);
    pcpd::write_text_file(dir / "report.txt", text);
    pcpd::Matrix zp(1, static_cast<pcpd::Index>(report.z_powers.size()));
    for (std::size_t i = 0; i < report.z_powers.size(); ++i)
      zp(0, static_cast<pcpd::Index>(i)) = report.z_powers[i];
    pcpd::write_matrix_csv(dir / "z_powers.csv", zp);
    if (args.elbo) {
      pcpd::Matrix et(static_cast<pcpd::Index>(report.elbo_trace.size()), 1);
      for (std::size_t i = 0; i < report.elbo_trace.size(); ++i)
        et(static_cast<pcpd::Index>(i), 0) = report.elbo_trace[i];
      pcpd::write_matrix_csv(dir / "elbo_trace.csv", et);
    }
  }
  return 0;
}

pcpd::BenchConfig load_bench_config(const std::string& path) {
  const nlohmann::json j = nlohmann::json::parse(pcpd::read_text_file(path));
  pcpd::BenchConfig cfg;
  if (j.contains("dims")) cfg.dims = j.at("dims").get<std::vector<pcpd::Index>>();
  if (j.contains("ranks")) cfg.ranks = j.at("ranks").get<std::vector<int>>();
  if (j.contains("snrs_db")) cfg.snrs_db = j.at("snrs_db").get<std::vector<double>>();
  if (j.contains("factor_correlation")) {
    const std::string c = j.at("factor_correlation").get<std::string>();
    if (c == "correlated")
      cfg.factor_correlation = pcpd::FactorCorrelation::correlated;
    else if (c != "iid")
      throw std::runtime_error("factor_correlation must be 'iid' or 'correlated'");
  }
  if (j.contains("algorithms")) {
    cfg.algorithms.clear();
    for (const auto& name : j.at("algorithms")) {
      const auto algo = pcpd::parse_algorithm(name.get<std::string>());
      if (!algo) throw std::runtime_error("unknown algorithm in config: " + name.dump());
      cfg.algorithms.push_back(*algo);
    }
  }
  if (j.contains("rank_bounds")) cfg.rank_bounds = j.at("rank_bounds").get<std::vector<int>>();
  if (j.contains("rank_bound_factors"))
    cfg.rank_bound_factors = j.at("rank_bound_factors").get<std::vector<double>>();
  if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
  if (j.contains("base_seed")) cfg.base_seed = j.at("base_seed").get<std::uint64_t>();
  if (j.contains("parallelism")) cfg.parallelism = j.at("parallelism").get<int>();
  if (j.contains("max_iters")) cfg.max_iters = j.at("max_iters").get<int>();
  if (j.contains("tol")) cfg.tol = j.at("tol").get<double>();
  if (j.contains("prune_threshold")) cfg.prune_threshold = j.at("prune_threshold").get<double>();
  if (j.contains("noise_update_period"))
    cfg.noise_update_period = j.at("noise_update_period").get<int>();
  return cfg;
}

int run_bench_cmd(const std::string& config_path, const std::string& out_dir, bool record_timing,
                  std::optional<int> parallelism) {
  pcpd::BenchConfig cfg = load_bench_config(config_path);
  if (parallelism) cfg.parallelism = *parallelism;
  const pcpd::BenchReport report = pcpd::run_bench(cfg);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  pcpd::write_text_file(dir / "trials.csv", pcpd::bench_rows_csv(report, record_timing));
  pcpd::write_text_file(dir / "summary.csv", pcpd::bench_summary_csv(report, record_timing));

  int failures = 0;
  for (const auto& row : report.rows)
    if (row.failed) {
      ++failures;
      std::fprintf(stderr, "trial %d of cell %d failed: %s\n", row.trial, row.cell,
                   row.error.c_str());
    }
  std::printf("wrote %zu trial rows and %zu summary rows to %s (%d failed trials)\n",
              report.rows.size(), report.summary.size(), dir.string().c_str(), failures);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic tensor CPD with automatic rank learning"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic low-rank tensor");
  synth_cmd->add_option("--dims", synth.dims, "Tensor dimensions, e.g. 30,30,30")
      ->required()
      ->delimiter(',');
  synth_cmd->add_option("--rank", synth.rank, "True rank")->required();
  synth_cmd->add_option("--snr", synth.snr_db, "SNR in dB (omit for a noise-free copy)");
  synth_cmd->add_option("--seed", synth.seed, "Random seed");
  synth_cmd->add_flag("--correlated", synth.correlated, "Draw factor rows with a random covariance");
  synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a tensor file and report the learned rank");
  fit_cmd->add_option("input", fit.input, "Input .tnsr file")->required();
  fit_cmd->add_option("--algo", fit.algo, "gh, gg or gg-ho");
  fit_cmd->add_option("--rank-bound", fit.rank_bound, "Explicit rank upper bound L");
  fit_cmd->add_option("--rank-bound-factor", fit.rank_bound_factor,
                      "L = ceil(factor * max dimension)");
  fit_cmd->add_option("--max-iters", fit.max_iters, "Maximum sweeps");
  fit_cmd->add_option("--tol", fit.tol, "Convergence tolerance");
  fit_cmd->add_option("--prune-threshold", fit.prune_threshold, "Relative pruning threshold");
  fit_cmd->add_flag("--no-prune", fit.no_prune, "Disable column pruning");
  fit_cmd->add_option("--noise-period", fit.noise_period, "Update noise every k-th sweep");
  fit_cmd->add_option("--fixed-beta", fit.fixed_beta, "Freeze the noise precision");
  fit_cmd->add_flag("--elbo", fit.elbo, "Track the variational bound per sweep");
  fit_cmd->add_option("--seed", fit.seed, "Random seed (initialization padding)");
  fit_cmd->add_option("--out", fit.out_dir, "Directory for report.txt and CSVs");

  std::string bench_config, bench_out;
  bool record_timing = false;
  std::optional<int> bench_parallelism;
  auto* bench_cmd = app.add_subcommand("bench", "Run a Monte-Carlo experiment grid");
  bench_cmd->add_option("--config", bench_config, "JSON config file")->required();
  bench_cmd->add_option("--out", bench_out, "Output directory")->required();
  bench_cmd->add_flag("--record-timing", record_timing,
                      "Emit wall times in the CSVs (breaks byte-identical reruns)");
  bench_cmd->add_option("--parallelism", bench_parallelism, "Override worker count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (fit_cmd->parsed()) return run_fit(fit);
    if (bench_cmd->parsed())
      return run_bench_cmd(bench_config, bench_out, record_timing, bench_parallelism);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
