#include "pcpd/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "pcpd/rng.hpp"

namespace pcpd {

int FitOptions::resolve_rank_bound(const std::vector<Index>& dims) const {
  if (rank_bound) return *rank_bound;
  const Index max_dim = *std::max_element(dims.begin(), dims.end());
  return static_cast<int>(std::ceil(rank_bound_factor * static_cast<double>(max_dim)));
}

void FitOptions::validate(const std::vector<Index>& dims) const {
  if (resolve_rank_bound(dims) < 2) throw std::invalid_argument("rank bound must be >= 2");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  if (enable_pruning && !(prune_rel_threshold > 0.0 && prune_rel_threshold < 1.0))
    throw std::invalid_argument("prune_rel_threshold must lie in (0, 1)");
  if (noise_update_period < 1) throw std::invalid_argument("noise_update_period must be >= 1");
  if (fixed_beta && !(*fixed_beta > 0.0)) throw std::invalid_argument("fixed_beta must be > 0");
}

double data_scale(const DenseTensor& y) {
  double mean = 0.0;
  for (double v : y.values) mean += v;
  mean /= static_cast<double>(y.values.size());
  double var = 0.0;
  for (double v : y.values) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(y.values.size()));
}

namespace engine {

void FactorSet::refresh_gram(int mode) {
  const Matrix& m = means[mode];
  grams[mode] = m.transpose() * m + static_cast<double>(m.rows()) * covs[mode];
}

void update_factor_mode(FactorSet& f, const Matrix& unfolding, int mode, double beta_mean,
                        const Vector& prior_precision) {
  const Index rank = f.rank();
  if (prior_precision.size() != rank)
    throw std::invalid_argument("update_factor_mode: prior precision length mismatch");

  Matrix precision = beta_mean * hadamard_product_excluding(f.grams, mode);
  precision.diagonal() += prior_precision;
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("factor update: precision matrix not SPD at mode " +
                             std::to_string(mode));
  Matrix cov = llt.solve(Matrix::Identity(rank, rank));
  cov = 0.5 * (cov + cov.transpose()).eval();

  const Matrix kr = khatri_rao_excluding(f.means, mode);
  f.means[mode].noalias() = unfolding * (beta_mean * kr) * cov;
  f.covs[mode] = std::move(cov);
  f.refresh_gram(mode);

#ifndef NDEBUG
  if (Eigen::LLT<Matrix>(f.covs[mode]).info() != Eigen::Success)
    throw std::runtime_error("factor update: covariance lost positive definiteness");
#endif
}

double expected_residual_sq(const DenseTensor& y, double y_norm_sq, const FactorSet& f) {
  // E||recon||^2 = Tr(E[U1^T U1] * Hadamard_{n>1} E[Un^T Un]); for symmetric
  // Grams that trace collapses to the grand sum of the full Hadamard chain.
  const double recon_power = hadamard_product_excluding(f.grams, -1).sum();
  const double inner = kruskal_inner(y, f.means);
  return y_norm_sq + recon_power - 2.0 * inner;
}

void update_noise(NoisePosterior& noise, double eps, double num_entries,
                  double expected_residual) {
  if (!(expected_residual > 0.0) && expected_residual != 0.0)
    throw std::runtime_error("noise update: expected residual is not positive (" +
                             std::to_string(expected_residual) + ")");
  noise.shape = eps + 0.5 * num_entries;
  noise.rate = eps + 0.5 * expected_residual;
}

Vector column_magnitudes_sq(const FactorSet& f) {
  // Component magnitude from the posterior mean factors only. The covariance
  // part of E[u^T u] levels off at sum_n J_n / precision for a dying column
  // and would hide the collapse of its mean.
  Vector mags = Vector::Zero(f.rank());
  for (const Matrix& m : f.means) mags += m.colwise().squaredNorm().transpose();
  return mags;
}

std::vector<Index> surviving_columns(const FactorSet& f, double rel_threshold) {
  const Vector mags_sq = column_magnitudes_sq(f);
  const double max_mag = std::sqrt(mags_sq.maxCoeff());
  std::vector<Index> keep;
  if (max_mag <= 0.0) {  // degenerate all-zero state: nothing to rank
    keep.resize(static_cast<std::size_t>(f.rank()));
    for (Index l = 0; l < f.rank(); ++l) keep[static_cast<std::size_t>(l)] = l;
    return keep;
  }
  const double cutoff = rel_threshold * max_mag;
  for (Index l = 0; l < f.rank(); ++l)
    if (std::sqrt(mags_sq[l]) >= cutoff) keep.push_back(l);
  return keep;
}

void keep_columns(FactorSet& f, const std::vector<Index>& keep) {
  const Index new_rank = static_cast<Index>(keep.size());
  for (int n = 0; n < f.order(); ++n) {
    Matrix mean(f.means[n].rows(), new_rank);
    Matrix cov(new_rank, new_rank);
    for (Index j = 0; j < new_rank; ++j) {
      mean.col(j) = f.means[n].col(keep[static_cast<std::size_t>(j)]);
      for (Index i = 0; i < new_rank; ++i)
        cov(i, j) = f.covs[n](keep[static_cast<std::size_t>(i)], keep[static_cast<std::size_t>(j)]);
    }
    f.means[n] = std::move(mean);
    f.covs[n] = std::move(cov);
    f.refresh_gram(n);
  }
}

void warn_if_rank_exceeds_unfoldings(const std::vector<Index>& dims, Index rank) {
  Index total = 1;
  for (Index d : dims) total *= d;
  for (std::size_t n = 0; n < dims.size(); ++n) {
    if (rank > total / dims[n]) {
      std::fprintf(stderr,
                   "pcpd: rank bound %lld exceeds the mode-%zu unfolding width %lld; "
                   "the data term alone cannot determine that mode's covariance\n",
                   static_cast<long long>(rank), n, static_cast<long long>(total / dims[n]));
      return;
    }
  }
}

Matrix init_factor_mean(const Matrix& unfolding, Index rank, Rng& rng) {
  const Index j_n = unfolding.rows();
  const Index n_sv = std::min(j_n, unfolding.cols());
  Matrix mean(j_n, rank);
  if (rank <= n_sv) {
    Eigen::BDCSVD<Matrix> svd(unfolding, Eigen::ComputeThinU);
    mean = svd.matrixU().leftCols(rank) *
           svd.singularValues().head(rank).cwiseSqrt().asDiagonal();
  } else {
    Eigen::BDCSVD<Matrix> svd(unfolding, Eigen::ComputeFullU);
    const Index lead = std::min(rank, j_n);
    Vector scale = Vector::Zero(lead);
    scale.head(std::min(lead, n_sv)) =
        svd.singularValues().head(std::min(lead, n_sv)).cwiseSqrt();
    mean.leftCols(lead) = svd.matrixU().leftCols(lead) * scale.asDiagonal();
    for (Index l = lead; l < rank; ++l)
      for (Index i = 0; i < j_n; ++i) mean(i, l) = rng.normal();
  }
  return mean;
}

}  // namespace engine
}  // namespace pcpd
