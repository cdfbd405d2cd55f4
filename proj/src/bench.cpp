#include "pcpd/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "pcpd/gg.hpp"
#include "pcpd/gh.hpp"
#include "pcpd/rng.hpp"

namespace pcpd {

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::gh: return "gh";
    case Algorithm::gg: return "gg";
    case Algorithm::gg_ho: return "gg-ho";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(const std::string& name) {
  if (name == "gh") return Algorithm::gh;
  if (name == "gg") return Algorithm::gg;
  if (name == "gg-ho" || name == "gg_ho") return Algorithm::gg_ho;
  return std::nullopt;
}

std::vector<int> BenchConfig::resolved_rank_bounds() const {
  std::vector<int> bounds = rank_bounds;
  const Index max_dim = *std::max_element(dims.begin(), dims.end());
  for (double f : rank_bound_factors)
    bounds.push_back(static_cast<int>(std::ceil(f * static_cast<double>(max_dim))));
  if (bounds.empty()) bounds.push_back(static_cast<int>(max_dim));
  return bounds;
}

void BenchConfig::validate() const {
  if (dims.size() < 2) throw std::invalid_argument("bench: need at least two dims");
  if (trials < 1) throw std::invalid_argument("bench: trials must be >= 1");
  if (ranks.empty() || snrs_db.empty() || algorithms.empty())
    throw std::invalid_argument("bench: empty grid");
  if (parallelism < 1) throw std::invalid_argument("bench: parallelism must be >= 1");
}

namespace {

TrialRow run_trial(const BenchConfig& cfg, const BenchCell& cell, int cell_idx, int trial) {
  TrialRow row;
  row.cell = cell_idx;
  row.trial = trial;
  row.seed = derive_seed(derive_seed(cfg.base_seed, static_cast<std::uint64_t>(cell_idx)),
                         static_cast<std::uint64_t>(trial));
  try {
    SynthSpec spec;
    spec.dims = cfg.dims;
    spec.true_rank = cell.true_rank;
    spec.snr_db = cell.snr_db;
    spec.factor_correlation = cfg.factor_correlation;
    spec.seed = derive_seed(row.seed, 1);
    const auto [x, model] = gen_cpd(spec);
    const DenseTensor y = add_noise(x, cell.snr_db, derive_seed(row.seed, 2));

    FitOptions opts;
    opts.rank_bound = cell.rank_bound;
    opts.max_iters = cfg.max_iters;
    opts.tol = cfg.tol;
    opts.prune_rel_threshold = cfg.prune_threshold;
    opts.noise_update_period = cfg.noise_update_period;
    opts.seed = derive_seed(row.seed, 3);

    FitReport report;
    switch (cell.algo) {
      case Algorithm::gh: report = gh::fit(y, opts); break;
      case Algorithm::gg: report = gg::fit(y, opts); break;
      case Algorithm::gg_ho: report = gg::fit(y, opts, /*update_d0_hyper=*/true); break;
    }
    row.est_rank = report.estimated_rank;
    row.rmse = rmse(x, reconstruct(report.model));
    row.iters = report.iterations_run;
    row.seconds = report.wall_time_seconds;
    row.converged = report.converged;
  } catch (const std::exception& e) {
    row.failed = true;
    row.error = e.what();
  }
  return row;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

BenchReport run_bench(const BenchConfig& cfg) {
  cfg.validate();
  BenchReport report;
  for (Algorithm algo : cfg.algorithms)
    for (int rank : cfg.ranks)
      for (double snr : cfg.snrs_db)
        for (int bound : cfg.resolved_rank_bounds())
          report.cells.push_back(BenchCell{algo, rank, snr, bound});

  const int num_cells = static_cast<int>(report.cells.size());
  const int total = num_cells * cfg.trials;
  report.rows.resize(static_cast<std::size_t>(total));

  std::atomic<int> next{0};
  const int workers = std::max(1, std::min(cfg.parallelism, total));
  auto worker = [&]() {
    for (int task = next.fetch_add(1); task < total; task = next.fetch_add(1)) {
      const int cell_idx = task / cfg.trials;
      const int trial = task % cfg.trials;
      report.rows[static_cast<std::size_t>(task)] =
          run_trial(cfg, report.cells[static_cast<std::size_t>(cell_idx)], cell_idx, trial);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  report.summary.resize(static_cast<std::size_t>(num_cells));
  for (int c = 0; c < num_cells; ++c) {
    CellSummary& s = report.summary[static_cast<std::size_t>(c)];
    s.cell = report.cells[static_cast<std::size_t>(c)];
    s.trials = cfg.trials;
    double sum_rank = 0.0, sum_rank_sq = 0.0, sum_rmse = 0.0, sum_sec = 0.0;
    int hits = 0;
    for (int t = 0; t < cfg.trials; ++t) {
      const TrialRow& row = report.rows[static_cast<std::size_t>(c * cfg.trials + t)];
      if (row.est_rank == s.cell.true_rank && !row.failed) ++hits;
      sum_rank += row.est_rank;
      sum_rank_sq += static_cast<double>(row.est_rank) * row.est_rank;
      sum_rmse += row.rmse;
      sum_sec += row.seconds;
    }
    const double n = static_cast<double>(cfg.trials);
    s.accuracy = hits / n;
    s.mean_est_rank = sum_rank / n;
    s.std_est_rank = std::sqrt(std::max(0.0, sum_rank_sq / n - s.mean_est_rank * s.mean_est_rank));
    s.mean_rmse = sum_rmse / n;
    s.mean_seconds = sum_sec / n;
  }
  return report;
}

std::string bench_rows_csv(const BenchReport& report, bool record_timing) {
  std::string out = "algo,R,snr_db,L,trial,seed,est_rank,rmse,iters,seconds,converged\n";
  for (const TrialRow& row : report.rows) {
    const BenchCell& cell = report.cells[static_cast<std::size_t>(row.cell)];
    char seed_buf[32];
    std::snprintf(seed_buf, sizeof(seed_buf), "%" PRIu64, row.seed);
    out += algorithm_name(cell.algo);
    out += ',' + std::to_string(cell.true_rank);
    out += ',' + format_double(cell.snr_db);
    out += ',' + std::to_string(cell.rank_bound);
    out += ',' + std::to_string(row.trial);
    out += ',';
    out += seed_buf;
    out += ',' + std::to_string(row.est_rank);
    out += ',' + format_double(row.rmse);
    out += ',' + std::to_string(row.iters);
    out += ',' + format_double(record_timing ? row.seconds : 0.0);
    out += ',' + std::string(row.failed ? "error" : (row.converged ? "1" : "0"));
    out += '\n';
  }
  return out;
}

std::string bench_summary_csv(const BenchReport& report, bool record_timing) {
  std::string out =
      "algo,R,snr_db,L,trials,accuracy,mean_est_rank,std_est_rank,mean_rmse,mean_seconds\n";
  for (const CellSummary& s : report.summary) {
    out += algorithm_name(s.cell.algo);
    out += ',' + std::to_string(s.cell.true_rank);
    out += ',' + format_double(s.cell.snr_db);
    out += ',' + std::to_string(s.cell.rank_bound);
    out += ',' + std::to_string(s.trials);
    out += ',' + format_double(s.accuracy);
    out += ',' + format_double(s.mean_est_rank);
    out += ',' + format_double(s.std_est_rank);
    out += ',' + format_double(s.mean_rmse);
    out += ',' + format_double(record_timing ? s.mean_seconds : 0.0);
    out += '\n';
  }
  return out;
}

}  // namespace pcpd
