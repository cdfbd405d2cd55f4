#include "pcpd/synth.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pcpd/rng.hpp"

namespace pcpd {

namespace {

double population_variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return var / static_cast<double>(v.size());
}

}  // namespace

std::pair<DenseTensor, KruskalModel> gen_cpd(const SynthSpec& spec) {
  if (spec.dims.size() < 2) throw std::invalid_argument("gen_cpd: need at least two modes");
  if (spec.true_rank < 1) throw std::invalid_argument("gen_cpd: rank must be >= 1");

  Rng rng(derive_seed(spec.seed, 0x67656e));
  const Index rank = spec.true_rank;
  std::vector<Matrix> factors(spec.dims.size());
  for (std::size_t n = 0; n < spec.dims.size(); ++n) {
    Matrix f(spec.dims[n], rank);
    if (spec.factor_correlation == FactorCorrelation::iid) {
      for (Index j = 0; j < rank; ++j)
        for (Index i = 0; i < spec.dims[n]; ++i) f(i, j) = rng.normal();
    } else {
      Matrix mix(rank, rank);
      for (Index j = 0; j < rank; ++j)
        for (Index i = 0; i < rank; ++i) mix(i, j) = rng.normal();
      for (Index i = 0; i < spec.dims[n]; ++i) {
        Vector white(rank);
        for (Index j = 0; j < rank; ++j) white[j] = rng.normal();
        f.row(i) = (mix * white).transpose();
      }
    }
    factors[n] = std::move(f);
  }
  KruskalModel model(std::move(factors));
  return {reconstruct(model), std::move(model)};
}

DenseTensor add_noise(const DenseTensor& x, double snr_db, std::uint64_t seed) {
  x.validate();
  const double var = population_variance(x.values);
  if (!(var > 0.0)) throw std::invalid_argument("add_noise: input tensor is constant");
  const double sigma = std::sqrt(var / std::pow(10.0, snr_db / 10.0));
  Rng rng(derive_seed(seed, 0x6e6f6973));
  DenseTensor y = x;
  for (double& v : y.values) v += sigma * rng.normal();
  return y;
}

double rmse(const DenseTensor& x_true, const DenseTensor& x_hat) {
  if (x_true.dims != x_hat.dims) throw std::invalid_argument("rmse: dimension mismatch");
  double ssq = 0.0;
  for (std::size_t i = 0; i < x_true.values.size(); ++i) {
    const double d = x_true.values[i] - x_hat.values[i];
    ssq += d * d;
  }
  return std::sqrt(ssq / static_cast<double>(x_true.values.size()));
}

double fit_value(const DenseTensor& x_ref, const DenseTensor& x_hat) {
  if (x_ref.dims != x_hat.dims) throw std::invalid_argument("fit_value: dimension mismatch");
  double err_sq = 0.0;
  for (std::size_t i = 0; i < x_ref.values.size(); ++i) {
    const double d = x_hat.values[i] - x_ref.values[i];
    err_sq += d * d;
  }
  const double ref = std::sqrt(frob_norm_sq(x_ref));
  if (ref == 0.0) throw std::invalid_argument("fit_value: reference tensor is zero");
  return (1.0 - std::sqrt(err_sq) / ref) * 100.0;
}

double snr_output(const DenseTensor& y_in, const DenseTensor& x_hat) {
  if (y_in.dims != x_hat.dims) throw std::invalid_argument("snr_output: dimension mismatch");
  double resid_sq = 0.0;
  for (std::size_t i = 0; i < y_in.values.size(); ++i) {
    const double d = y_in.values[i] - x_hat.values[i];
    resid_sq += d * d;
  }
  const double signal_sq = frob_norm_sq(x_hat);
  if (resid_sq == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal_sq / resid_sq);
}

}  // namespace pcpd
