#include "pcpd/gg.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pcpd/rng.hpp"

namespace pcpd::gg {

namespace {

void update_factor_impl(State& s, const Matrix& unfolding, int mode) {
  Vector prior_precision(s.rank());
  for (Index l = 0; l < s.rank(); ++l)
    prior_precision[l] = s.gamma_post[static_cast<std::size_t>(l)].mean();
  engine::update_factor_mode(s.factors, unfolding, mode, s.beta_mean, prior_precision);
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

State init(const DenseTensor& y, const FitOptions& opts, bool update_d0_hyper) {
  y.validate();
  const int order = y.order();
  const Index rank = opts.resolve_rank_bound(y.dims);
  if (rank < 1) throw std::invalid_argument("init: rank bound must be >= 1");

  engine::warn_if_rank_exceeds_unfoldings(y.dims, rank);

  State s;
  s.update_d0 = update_d0_hyper;
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

  // E[gamma_l] = 1 initially, mirroring the unit scale moments of the other
  // engine so that both start from the same effective prior precision.
  s.gamma_post.assign(static_cast<std::size_t>(rank), GammaPosterior{1.0, 1.0});
  s.d0_mean.assign(static_cast<std::size_t>(rank), s.d0);

  s.noise.shape = s.eps;
  s.noise.rate = s.eps;
  s.beta_mean = opts.fixed_beta.value_or(s.noise.mean());
  s.beta_fixed = opts.fixed_beta.has_value();
  return s;
}

void update_factor(State& s, const DenseTensor& y, int mode) {
  update_factor_impl(s, unfold(y, mode), mode);
}

void update_gamma(State& s) {
  const double shape = s.c0 + 0.5 * s.dim_sum();
  for (Index l = 0; l < s.rank(); ++l) {
    double ssq = 0.0;
    for (const Matrix& g : s.factors.grams) ssq += g(l, l);
    auto& gp = s.gamma_post[static_cast<std::size_t>(l)];
    gp.shape = shape;
    gp.rate = (s.update_d0 ? s.d0_mean[static_cast<std::size_t>(l)] : s.d0) + 0.5 * ssq;
  }
}

void update_noise(State& s, const DenseTensor& y) {
  const double resid = engine::expected_residual_sq(y, frob_norm_sq(y), s.factors);
  engine::update_noise(s.noise, s.eps, s.dim_prod(), resid);
  if (!s.beta_fixed) s.beta_mean = s.noise.mean();
}

void update_hyper_d0(State& s) {
  if (!s.update_d0) return;
  for (Index l = 0; l < s.rank(); ++l)
    s.d0_mean[static_cast<std::size_t>(l)] =
        (s.c0 + s.eps) / (s.gamma_post[static_cast<std::size_t>(l)].mean() + s.eps);
}

void prune(State& s, double rel_threshold) {
  const std::vector<Index> keep = engine::surviving_columns(s.factors, rel_threshold);
  if (static_cast<Index>(keep.size()) == s.rank()) return;
  engine::keep_columns(s.factors, keep);
  std::vector<GammaPosterior> gamma;
  std::vector<double> d0_mean;
  gamma.reserve(keep.size());
  d0_mean.reserve(keep.size());
  for (Index l : keep) {
    gamma.push_back(s.gamma_post[static_cast<std::size_t>(l)]);
    d0_mean.push_back(s.d0_mean[static_cast<std::size_t>(l)]);
  }
  s.gamma_post = std::move(gamma);
  s.d0_mean = std::move(d0_mean);
}

FitReport fit(const DenseTensor& y_raw, const FitOptions& opts, bool update_d0_hyper) {
  const auto start = std::chrono::steady_clock::now();
  y_raw.validate();
  opts.validate(y_raw.dims);

  // Entry-scale normalization, mirroring the other engine.
  const double dscale = data_scale(y_raw) / kFitEntryScale;
  DenseTensor y = y_raw;
  if (dscale > 0.0)
    for (double& v : y.values) v /= dscale;

  State s = init(y, opts, update_d0_hyper);
  std::vector<Matrix> unfoldings(static_cast<std::size_t>(y.order()));
  for (int n = 0; n < y.order(); ++n) unfoldings[static_cast<std::size_t>(n)] = unfold(y, n);

  FitReport report;
  DenseTensor prev_recon = reconstruct(KruskalModel(s.factors.means));
  std::vector<double> prev_rates;
  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    s.iteration = iter;
    try {
      for (int mode = 0; mode < y.order(); ++mode)
        update_factor_impl(s, unfoldings[static_cast<std::size_t>(mode)], mode);
      update_gamma(s);
      if (!s.beta_fixed && iter % opts.noise_update_period == 0) update_noise(s, y);
      update_hyper_d0(s);
      if (opts.enable_pruning) prune(s, opts.prune_rel_threshold);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("gg::fit failed at iteration " + std::to_string(iter) + ": " +
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

    // Same stationarity gate as the GH engine: do not stop while column
    // precisions are still collapsing even though the reconstruction looks
    // settled.
    bool scales_stable = prev_rates.size() == static_cast<std::size_t>(s.rank());
    std::vector<double> rates(static_cast<std::size_t>(s.rank()));
    for (Index l = 0; l < s.rank(); ++l) {
      rates[static_cast<std::size_t>(l)] = s.gamma_post[static_cast<std::size_t>(l)].rate;
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
    report.z_powers[static_cast<std::size_t>(l)] =
        1.0 / s.gamma_post[static_cast<std::size_t>(l)].mean();
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace pcpd::gg
