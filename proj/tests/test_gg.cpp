#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pcpd/gg.hpp"
#include "pcpd/gh.hpp"
#include "pcpd/rng.hpp"
#include "pcpd/synth.hpp"

using namespace pcpd;

namespace {

DenseTensor noisy_lowrank(std::vector<Index> dims, int rank, double snr_db, std::uint64_t seed) {
  SynthSpec spec;
  spec.dims = std::move(dims);
  spec.true_rank = rank;
  spec.snr_db = snr_db;
  spec.seed = derive_seed(seed, 1);
  const auto [x, model] = gen_cpd(spec);
  return add_noise(x, snr_db, derive_seed(seed, 2));
}

}  // namespace

TEST_CASE("gg::update_gamma arithmetic") {
  const DenseTensor y = noisy_lowrank({30, 30, 30}, 2, 10.0, 40u);
  FitOptions opts;
  opts.rank_bound = 4;
  gg::State s = gg::init(y, opts);

  // zero posterior: d_l collapses to d0
  for (int n = 0; n < 3; ++n) {
    s.factors.means[static_cast<std::size_t>(n)].setZero();
    s.factors.covs[static_cast<std::size_t>(n)] = Matrix::Zero(4, 4);
    s.factors.refresh_gram(n);
  }
  gg::update_gamma(s);
  for (const auto& gp : s.gamma_post) {
    CHECK(gp.shape == doctest::Approx(45.0 + 1e-6).epsilon(1e-14));
    CHECK(gp.rate == doctest::Approx(1e-6).epsilon(1e-12));
  }

  // shape depends only on the dimensions, so it never changes again
  gg::update_factor(s, y, 0);
  gg::update_gamma(s);
  for (const auto& gp : s.gamma_post) CHECK(gp.shape == doctest::Approx(45.0 + 1e-6));

  // posterior mean against the quadrature moment of the gamma density
  const auto& gp = s.gamma_post[0];
  const auto g = [&](long double w) {
    return (static_cast<long double>(gp.shape) - 1.0L) * w -
           static_cast<long double>(gp.rate) * std::exp(w) + w;
  };
  const auto gz = [&](long double w) {
    return (static_cast<long double>(gp.shape) - 1.0L + 1.0L) * w -
           static_cast<long double>(gp.rate) * std::exp(w) + w;
  };
  const long double log_norm = oracle::log_integral_exp(g, -40.0L, 60.0L);
  const long double log_first = oracle::log_integral_exp(gz, -40.0L, 60.0L);
  CHECK(gp.mean() ==
        doctest::Approx(static_cast<double>(std::exp(log_first - log_norm))).epsilon(1e-8));
}

TEST_CASE("gg and gh share the factor update code path") {
  const DenseTensor y = noisy_lowrank({5, 6, 4}, 2, 10.0, 41u);
  FitOptions opts;
  opts.rank_bound = 3;
  opts.seed = 9;
  gh::State sh = gh::init(y, opts);
  gg::State sg = gg::init(y, opts);

  // inject identical prior precision diagonals
  const double precision[3] = {0.37, 4.2, 19.0};
  for (Index l = 0; l < 3; ++l) {
    sh.col_scales[static_cast<std::size_t>(l)].mean_inv_z = precision[l];
    sg.gamma_post[static_cast<std::size_t>(l)].shape = precision[l];
    sg.gamma_post[static_cast<std::size_t>(l)].rate = 1.0;
  }
  sh.beta_mean = 2.5;
  sg.beta_mean = 2.5;
  for (int mode = 0; mode < 3; ++mode) {
    gh::update_factor(sh, y, mode);
    gg::update_factor(sg, y, mode);
  }
  for (int n = 0; n < 3; ++n) {
    CHECK((sh.factors.means[static_cast<std::size_t>(n)] -
           sg.factors.means[static_cast<std::size_t>(n)])
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((sh.factors.covs[static_cast<std::size_t>(n)] -
           sg.factors.covs[static_cast<std::size_t>(n)])
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("gg::update_hyper_d0") {
  const DenseTensor y = noisy_lowrank({4, 4, 4}, 1, 10.0, 42u);
  FitOptions opts;
  opts.rank_bound = 2;

  SUBCASE("disabled flag leaves the state untouched") {
    gg::State s = gg::init(y, opts, false);
    const auto before = s.d0_mean;
    gg::update_hyper_d0(s);
    CHECK(s.d0_mean == before);
  }

  SUBCASE("posterior mean of d0") {
    gg::State s = gg::init(y, opts, true);
    s.gamma_post[0].shape = 1.0;
    s.gamma_post[0].rate = 1.0;  // E[gamma] = 1
    gg::update_hyper_d0(s);
    CHECK(s.d0_mean[0] == doctest::Approx((1e-6 + 1e-6) / (1.0 + 1e-6)).epsilon(1e-12));
  }
}

TEST_CASE("gg::fit recovers rank 1 from a noise-free outer product") {
  Rng rng(43u);
  std::vector<Matrix> f(3);
  for (auto& m : f) {
    m.resize(6, 1);
    for (Index i = 0; i < 6; ++i) m(i, 0) = rng.normal() + 1.5;
  }
  const DenseTensor y = reconstruct(KruskalModel(f));
  FitOptions opts;
  opts.rank_bound = 4;
  opts.seed = 5;
  const FitReport report = gg::fit(y, opts);
  CHECK(report.estimated_rank == 1);
}

TEST_CASE("gg::fit recovers a low rank at 10 dB with the tight bound") {
  const DenseTensor y = noisy_lowrank({30, 30, 30}, 6, 10.0, 44u);
  FitOptions opts;
  opts.rank_bound = 30;
  opts.seed = 6;
  const FitReport report = gg::fit(y, opts);
  CHECK(report.estimated_rank == 6);
}

TEST_CASE("gg::fit misses a high rank: the expected failure mode") {
  const DenseTensor y = noisy_lowrank({30, 30, 30}, 24, 10.0, 45u);
  FitOptions opts;
  opts.rank_bound = 30;
  opts.seed = 7;
  const FitReport report = gg::fit(y, opts);
  CHECK(report.estimated_rank != 24);
}

TEST_CASE("gg_ho leaves the low-SNR estimate unchanged") {
  const DenseTensor y = noisy_lowrank({30, 30, 30}, 6, -5.0, 46u);
  FitOptions opts;
  opts.rank_bound = 60;
  opts.seed = 8;
  const FitReport plain = gg::fit(y, opts, false);
  const FitReport hyper = gg::fit(y, opts, true);
  CHECK(plain.estimated_rank == hyper.estimated_rank);
}

TEST_CASE("gg::fit is deterministic") {
  const DenseTensor y = noisy_lowrank({8, 9, 7}, 2, 10.0, 47u);
  FitOptions opts;
  opts.rank_bound = 8;
  opts.seed = 10;
  const FitReport r1 = gg::fit(y, opts);
  const FitReport r2 = gg::fit(y, opts);
  CHECK(r1.estimated_rank == r2.estimated_rank);
  CHECK(r1.iterations_run == r2.iterations_run);
  for (std::size_t n = 0; n < r1.model.factors.size(); ++n)
    CHECK((r1.model.factors[n] - r2.model.factors[n]).cwiseAbs().maxCoeff() == 0.0);
}
