#include "pcpd/gh.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pcpd/rng.hpp"

namespace pcpd::gh {

namespace {

constexpr double kScaleRateFloor = 1e-12;  // guards the all-zero-column case with b0 = 0

std::vector<Matrix> unfold_all(const DenseTensor& y) {
  std::vector<Matrix> out(static_cast<std::size_t>(y.order()));
  for (int n = 0; n < y.order(); ++n) out[static_cast<std::size_t>(n)] = unfold(y, n);
  return out;
}

void update_factor_impl(State& s, const Matrix& unfolding, int mode) {
  Vector prior_precision(s.rank());
  for (Index l = 0; l < s.rank(); ++l)
    prior_precision[l] = s.col_scales[static_cast<std::size_t>(l)].mean_inv_z;
  engine::update_factor_mode(s.factors, unfolding, mode, s.beta_mean, prior_precision);
}

void assert_lambda_invariant(const State& s) {
#ifndef NDEBUG
  const double expect = s.lambda0 - 0.5 * s.dim_sum();
  for (const auto& cs : s.col_scales)
    if (std::abs(cs.lambda - expect) > 1e-12 * std::max(1.0, std::abs(expect)))
      throw std::logic_error("column scale order drifted from lambda0 - sum(J)/2");
#else
  (void)s;
#endif
}

}  // namespace

double State::dim_sum() const {
  double z = 0.0;
  for (const Matrix& m : factors.means) z += static_cast<double>(m.rows());
  return z;
}

double State::dim_prod() const {
  double p = 1.0;
  for (const Matrix& m : factors.means) p *= static_cast<double>(m.rows());
  return p;
}

State init(const DenseTensor& y, const FitOptions& opts) {
  y.validate();
  const int order = y.order();
  const Index rank = opts.resolve_rank_bound(y.dims);
  if (rank < 1) throw std::invalid_argument("init: rank bound must be >= 1");
  engine::warn_if_rank_exceeds_unfoldings(y.dims, rank);

  State s;
  s.eps = 1e-6;
  Rng rng(derive_seed(opts.seed, 0x696e6974));
  s.factors.means.resize(static_cast<std::size_t>(order));
  s.factors.covs.resize(static_cast<std::size_t>(order));
  s.factors.grams.resize(static_cast<std::size_t>(order));
  for (int n = 0; n < order; ++n) {
    s.factors.means[static_cast<std::size_t>(n)] =
        engine::init_factor_mean(unfold(y, n), rank, rng);
    s.factors.covs[static_cast<std::size_t>(n)] = Matrix::Identity(rank, rank);
    s.factors.refresh_gram(n);
  }

  Index min_dim = y.dims.front();
  for (Index d : y.dims) min_dim = std::min(min_dim, d);
  s.lambda0 = -static_cast<double>(min_dim);
  s.b0 = 0.0;
  s.kappa_a1 = 2.0 - 0.5 * s.lambda0;
  s.kappa_a2 = 1e-6;
  if (!(s.kappa_a1 > 1.0 - 0.5 * s.lambda0))
    throw std::invalid_argument("init: kappa_a1 must exceed 1 - lambda0/2");

  const double lambda = s.lambda0 - 0.5 * s.dim_sum();
  s.a0.assign(static_cast<std::size_t>(rank), 1.0);
  s.col_scales.assign(static_cast<std::size_t>(rank), ColumnScalePosterior{1.0, 0.0, lambda, 1.0, 1.0});

  s.noise.shape = s.eps;
  s.noise.rate = s.eps;
  s.beta_mean = opts.fixed_beta.value_or(s.noise.mean());
  s.beta_fixed = opts.fixed_beta.has_value();
  return s;
}

void update_factor(State& s, const DenseTensor& y, int mode) {
  update_factor_impl(s, unfold(y, mode), mode);
}

void update_scales(State& s) {
  for (Index l = 0; l < s.rank(); ++l) {
    auto& cs = s.col_scales[static_cast<std::size_t>(l)];
    double b = s.b0;
    for (const Matrix& g : s.factors.grams) b += g(l, l);
    b = std::max(b, kScaleRateFloor);
    cs.a = s.a0[static_cast<std::size_t>(l)];
    cs.b = b;
    cs.lambda = s.lambda0 - 0.5 * s.dim_sum();
    const GigMoments m = gig_moments({cs.a, cs.b, cs.lambda});
    cs.mean_z = m.mean_z;
    cs.mean_inv_z = m.mean_inv_z;
  }
  assert_lambda_invariant(s);
}

void update_noise(State& s, const DenseTensor& y) {
  const double resid = engine::expected_residual_sq(y, frob_norm_sq(y), s.factors);
  engine::update_noise(s.noise, s.eps, s.dim_prod(), resid);
  if (!s.beta_fixed) s.beta_mean = s.noise.mean();
}

void update_hyper_a0(State& s) {
  const double numer = s.kappa_a1 + 0.5 * s.lambda0 - 1.0;
  for (Index l = 0; l < s.rank(); ++l) {
    const double denom = s.kappa_a2 + 0.5 * s.col_scales[static_cast<std::size_t>(l)].mean_z;
    s.a0[static_cast<std::size_t>(l)] = numer / denom;
  }
}

void prune(State& s, double rel_threshold) {
  const std::vector<Index> keep = engine::surviving_columns(s.factors, rel_threshold);
  if (static_cast<Index>(keep.size()) == s.rank()) return;
  engine::keep_columns(s.factors, keep);
  std::vector<ColumnScalePosterior> scales;
  std::vector<double> a0;
  scales.reserve(keep.size());
  a0.reserve(keep.size());
  for (Index l : keep) {
    scales.push_back(s.col_scales[static_cast<std::size_t>(l)]);
    a0.push_back(s.a0[static_cast<std::size_t>(l)]);
  }
  s.col_scales = std::move(scales);
  s.a0 = std::move(a0);
}

double elbo(const State& s, const DenseTensor& y) {
  const double dim_prod = s.dim_prod();
  const double dim_sum = s.dim_sum();
  const double rank = static_cast<double>(s.rank());
  const double ln2pi = std::log(2.0 * M_PI);

  const double beta_mean = s.beta_mean;
  const double log_beta_mean =
      s.beta_fixed ? std::log(beta_mean) : digamma(s.noise.shape) - std::log(s.noise.rate);
  const double resid = engine::expected_residual_sq(y, frob_norm_sq(y), s.factors);

  // E ln p(y | U, beta)
  double value = -0.5 * dim_prod * ln2pi + 0.5 * dim_prod * log_beta_mean - 0.5 * beta_mean * resid;

  // Per-column scale statistics.
  double sum_log_z = 0.0;
  for (Index l = 0; l < s.rank(); ++l) {
    const auto& cs = s.col_scales[static_cast<std::size_t>(l)];
    const double sqrt_ab = std::sqrt(cs.a) * std::sqrt(cs.b);
    const double mean_log_z = 0.5 * (std::log(cs.b) - std::log(cs.a)) + log_bessel_k_dnu(cs.lambda, sqrt_ab);
    sum_log_z += mean_log_z;
    const double a0 = s.a0[static_cast<std::size_t>(l)];

    // E ln p(z_l): with b0 = 0 the weight of evidence sits in the
    // a0-dependent part; the (divergent) b0 normalization is a constant of
    // the improper limit and is dropped, matching the hyper-update route.
    if (s.b0 > 0.0) {
      value += 0.5 * s.lambda0 * (std::log(a0) - std::log(s.b0)) - M_LN2 -
               log_bessel_k(s.lambda0, std::sqrt(a0) * std::sqrt(s.b0)) +
               (s.lambda0 - 1.0) * mean_log_z - 0.5 * a0 * cs.mean_z - 0.5 * s.b0 * cs.mean_inv_z;
    } else {
      value += 0.5 * s.lambda0 * std::log(a0) + (s.lambda0 - 1.0) * mean_log_z -
               0.5 * a0 * cs.mean_z;
    }

    // ln p(a0_l) under the gamma hyper-prior (a0 is a point estimate).
    value += s.kappa_a1 * std::log(s.kappa_a2) - log_gamma(s.kappa_a1) +
             (s.kappa_a1 - 1.0) * std::log(a0) - s.kappa_a2 * a0;

    // -E ln Q(z_l): GIG entropy, assembled from the cached moments. The
    // products a E[z] and b E[1/z] are formed in log scale to dodge overflow
    // when a column has collapsed.
    const double a_mean_z = std::exp(std::log(cs.a) + std::log(cs.mean_z));
    const double b_mean_inv_z = std::exp(std::log(cs.b) + std::log(cs.mean_inv_z));
    value += -0.5 * cs.lambda * (std::log(cs.a) - std::log(cs.b)) + M_LN2 +
             log_bessel_k(cs.lambda, sqrt_ab) - (cs.lambda - 1.0) * mean_log_z +
             0.5 * (a_mean_z + b_mean_inv_z);
  }

  // E ln p(U | z) and the matrix-normal entropies.
  value += -0.5 * rank * dim_sum * ln2pi - 0.5 * dim_sum * sum_log_z;
  for (int n = 0; n < s.factors.order(); ++n) {
    const Matrix& gram = s.factors.grams[static_cast<std::size_t>(n)];
    for (Index l = 0; l < s.rank(); ++l)
      value -= 0.5 * s.col_scales[static_cast<std::size_t>(l)].mean_inv_z * gram(l, l);

    const double j_n = static_cast<double>(s.factors.means[static_cast<std::size_t>(n)].rows());
    Eigen::LLT<Matrix> llt(s.factors.covs[static_cast<std::size_t>(n)]);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("elbo: factor covariance not SPD");
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    value += 0.5 * j_n * log_det + 0.5 * j_n * rank * (1.0 + ln2pi);
  }

  if (!s.beta_fixed) {
    // E ln p(beta) and -E ln Q(beta).
    value += -log_gamma(s.eps) + s.eps * std::log(s.eps) + (s.eps - 1.0) * log_beta_mean -
             s.eps * beta_mean;
    value += log_gamma(s.noise.shape) - (s.noise.shape - 1.0) * digamma(s.noise.shape) -
             std::log(s.noise.rate) + s.noise.shape;
  }
  return value;
}

FitReport fit(const DenseTensor& y_raw, const FitOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  y_raw.validate();
  opts.validate(y_raw.dims);

  // Normalize the entry scale before inference; the returned factors are
  // scaled back below.
  const double dscale = data_scale(y_raw) / kFitEntryScale;
  DenseTensor y = y_raw;
  if (dscale > 0.0)
    for (double& v : y.values) v /= dscale;

  State s = init(y, opts);
  const std::vector<Matrix> unfoldings = unfold_all(y);

  FitReport report;
  DenseTensor prev_recon = reconstruct(KruskalModel(s.factors.means));
  std::vector<double> prev_rates;
  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    s.iteration = iter;
    try {
      for (int mode = 0; mode < y.order(); ++mode)
        update_factor_impl(s, unfoldings[static_cast<std::size_t>(mode)], mode);
      update_scales(s);
      if (!s.beta_fixed && iter % opts.noise_update_period == 0) update_noise(s, y);
      update_hyper_a0(s);
      if (opts.compute_elbo) s.elbo_trace.push_back(elbo(s, y));
      if (opts.enable_pruning) prune(s, opts.prune_rel_threshold);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("gh::fit failed at iteration " + std::to_string(iter) + ": " +
                               e.what());
    }
    report.rank_trace.push_back(static_cast<int>(s.rank()));

    const DenseTensor recon = reconstruct(KruskalModel(s.factors.means));
    double diff_sq = 0.0;
    for (std::size_t i = 0; i < recon.values.size(); ++i) {
      const double d = recon.values[i] - prev_recon.values[i];
      diff_sq += d * d;
    }
    const double denom = std::sqrt(frob_norm_sq(prev_recon));
    prev_recon = recon;

    // A stationary reconstruction is not enough: columns on their way out
    // change the reconstruction negligibly while their scales still fall
    // geometrically. Require the scale rates to have settled as well, so a
    // fit never stops in the middle of a shrinkage cascade.
    bool scales_stable = prev_rates.size() == static_cast<std::size_t>(s.rank());
    std::vector<double> rates(static_cast<std::size_t>(s.rank()));
    for (Index l = 0; l < s.rank(); ++l) {
      rates[static_cast<std::size_t>(l)] = s.col_scales[static_cast<std::size_t>(l)].b;
      if (scales_stable &&
          std::abs(rates[static_cast<std::size_t>(l)] - prev_rates[static_cast<std::size_t>(l)]) >
              0.01 * prev_rates[static_cast<std::size_t>(l)])
        scales_stable = false;
    }
    prev_rates = std::move(rates);

    report.iterations_run = iter;
    if (denom > 0.0 && std::sqrt(diff_sq) / denom < opts.tol && scales_stable) {
      report.converged = true;
      break;
    }
  }

  report.estimated_rank = static_cast<int>(s.rank());
  report.model = KruskalModel(s.factors.means);
  if (dscale > 0.0) {
    const double per_mode = std::pow(dscale, 1.0 / static_cast<double>(y.order()));
    for (Matrix& f : report.model.factors) f *= per_mode;
  }
  report.z_powers.resize(static_cast<std::size_t>(s.rank()));
  for (Index l = 0; l < s.rank(); ++l)
    report.z_powers[static_cast<std::size_t>(l)] = s.col_scales[static_cast<std::size_t>(l)].mean_z;
  report.elbo_trace = std::move(s.elbo_trace);
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace pcpd::gh
