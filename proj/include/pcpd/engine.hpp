#pragma once

#include <optional>
#include <vector>

#include "pcpd/tensor.hpp"

namespace pcpd {

class Rng;

// Gamma posterior over the noise precision.
struct NoisePosterior {
  double shape = 1e-6;
  double rate = 1e-6;
  double mean() const { return shape / rate; }
};

// Knobs shared by both inference engines.
struct FitOptions {
  std::optional<int> rank_bound;    // explicit L; wins over the factor below
  double rank_bound_factor = 1.0;   // L = ceil(factor * max_n J_n)
  int max_iters = 500;
  double tol = 1e-6;                // relative reconstruction change
  double prune_rel_threshold = 1e-4;
  bool enable_pruning = true;
  int noise_update_period = 1;      // update beta on iterations divisible by this
  std::optional<double> fixed_beta; // disables noise learning entirely
  std::uint64_t seed = 0;
  bool compute_elbo = false;

  int resolve_rank_bound(const std::vector<Index>& dims) const;
  void validate(const std::vector<Index>& dims) const;
};

struct FitReport {
  int estimated_rank = 0;
  KruskalModel model;              // posterior mean factors, pruned
  std::vector<double> z_powers;    // learned column length-scale powers
  std::vector<double> elbo_trace;  // one entry per sweep when requested
  std::vector<int> rank_trace;     // surviving column count per sweep
  int iterations_run = 0;
  bool converged = false;
  double wall_time_seconds = 0.0;
};

// Population standard deviation of the tensor entries; the fit routines
// normalize their input by this before inference.
double data_scale(const DenseTensor& y);

// Entry scale the fit routines normalize to. The update constants fixed by
// the model family (unit initial scale moments, 1e-6 gamma priors) operate
// as reported only in a band of entry scales; 2.5 sits in the middle of it.
// Normalizing also makes the learned rank exactly invariant to input
// rescaling.
inline constexpr double kFitEntryScale = 2.5;

namespace engine {

// Matrix-normal factor posteriors with their cached Gram matrices
// grams[n] = M[n]^T M[n] + J_n * cov[n] (the Table-of-expectations building
// block both engines consume).
struct FactorSet {
  std::vector<Matrix> means;  // J_n x L
  std::vector<Matrix> covs;   // L x L, SPD
  std::vector<Matrix> grams;  // L x L

  int order() const { return static_cast<int>(means.size()); }
  Index rank() const { return means.empty() ? 0 : means.front().cols(); }
  void refresh_gram(int mode);
};

// One mode's mean-field update. GH and GG differ only in prior_precision
// (E[1/z_l] versus E[gamma_l]); everything else is this one code path.
//   cov  = [beta_mean * Hadamard_{n != mode} grams[n] + diag(prior_precision)]^-1
//   mean = unfolding * (beta_mean * KhatriRao_{n != mode} means) * cov
// Gauss-Seidel ordering falls out of updating the set in place.
void update_factor_mode(FactorSet& f, const Matrix& unfolding, int mode, double beta_mean,
                        const Vector& prior_precision);

// E || y - reconstruction ||_F^2 under the factor posteriors.
double expected_residual_sq(const DenseTensor& y, double y_norm_sq, const FactorSet& f);

// Conjugate noise update; throws if the expected residual went nonpositive.
void update_noise(NoisePosterior& noise, double eps, double num_entries, double expected_residual);

// Squared component magnitudes sum_n || means[n] col l ||^2.
Vector column_magnitudes_sq(const FactorSet& f);

// Columns (sorted) that survive relative-magnitude pruning; never empty.
std::vector<Index> surviving_columns(const FactorSet& f, double rel_threshold);

// Restrict the factor set to the given columns.
void keep_columns(FactorSet& f, const std::vector<Index>& keep);

// SVD-based factor mean initialization: left singular vectors scaled by the
// square root of the singular values, padded with standard normal columns
// when L exceeds the mode dimension.
Matrix init_factor_mean(const Matrix& unfolding, Index rank, Rng& rng);

// A rank bound above some unfolding width leaves the data term of that
// mode's precision rank-deficient (the prior diagonal still keeps it SPD);
// accepted, but worth a stderr note.
void warn_if_rank_exceeds_unfoldings(const std::vector<Index>& dims, Index rank);

}  // namespace engine
}  // namespace pcpd
