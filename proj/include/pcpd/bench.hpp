#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcpd/engine.hpp"
#include "pcpd/synth.hpp"

namespace pcpd {

enum class Algorithm { gh, gg, gg_ho };

std::string algorithm_name(Algorithm a);
std::optional<Algorithm> parse_algorithm(const std::string& name);

// One Monte-Carlo experiment grid. Cells are the cross product of
// (ranks x snrs x algorithms x rank bounds); each cell runs `trials`
// independent instances with counter-derived seeds.
struct BenchConfig {
  std::vector<Index> dims{30, 30, 30};
  std::vector<int> ranks{6};
  std::vector<double> snrs_db{10.0};
  FactorCorrelation factor_correlation = FactorCorrelation::iid;
  std::vector<Algorithm> algorithms{Algorithm::gh};
  std::vector<int> rank_bounds;           // explicit L values
  std::vector<double> rank_bound_factors; // expanded to ceil(f * max dim)
  int trials = 1;
  std::uint64_t base_seed = 0;
  int parallelism = 1;

  // fit knobs applied to every cell
  int max_iters = 500;
  double tol = 1e-6;
  double prune_threshold = 1e-4;
  int noise_update_period = 1;

  std::vector<int> resolved_rank_bounds() const;
  void validate() const;
};

struct BenchCell {
  Algorithm algo = Algorithm::gh;
  int true_rank = 0;
  double snr_db = 0.0;
  int rank_bound = 0;
};

struct TrialRow {
  int cell = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  int est_rank = 0;
  double rmse = 0.0;
  int iters = 0;
  double seconds = 0.0;
  bool converged = false;
  bool failed = false;
  std::string error;
};

struct CellSummary {
  BenchCell cell;
  int trials = 0;
  double accuracy = 0.0;       // fraction of trials with est_rank == true rank
  double mean_est_rank = 0.0;
  double std_est_rank = 0.0;
  double mean_rmse = 0.0;
  double mean_seconds = 0.0;
};

struct BenchReport {
  std::vector<BenchCell> cells;
  std::vector<TrialRow> rows;       // cell-major, trial-minor
  std::vector<CellSummary> summary;
};

// Runs the grid. Trials are dispatched across up to cfg.parallelism worker
// threads; per-trial seeds are derived from (base_seed, cell, trial), so the
// report does not depend on scheduling.
BenchReport run_bench(const BenchConfig& cfg);

// CSV serialization. The `seconds` column is zeroed unless record_timing is
// set: wall time is inherently non-reproducible and the emitted files are
// required to be byte-identical across reruns.
std::string bench_rows_csv(const BenchReport& report, bool record_timing);
std::string bench_summary_csv(const BenchReport& report, bool record_timing);

}  // namespace pcpd
