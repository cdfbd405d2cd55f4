#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcpd/tensor.hpp"

namespace pcpd {

enum class FactorCorrelation { iid, correlated };

// Recipe for one synthetic low-rank tensor.
struct SynthSpec {
  std::vector<Index> dims;
  int true_rank = 1;
  double snr_db = 10.0;
  FactorCorrelation factor_correlation = FactorCorrelation::iid;
  std::uint64_t seed = 0;
};

// Draws the ground-truth model and its reconstruction. iid mode: every
// factor entry is N(0, 1). Correlated mode: each factor row is N(0, F F^T)
// with F an R x R standard normal draw per mode.
std::pair<DenseTensor, KruskalModel> gen_cpd(const SynthSpec& spec);

// y = x + w with w iid N(0, var(x) / 10^(snr/10)); var is the population
// variance over all entries.
DenseTensor add_noise(const DenseTensor& x, double snr_db, std::uint64_t seed);

double rmse(const DenseTensor& x_true, const DenseTensor& x_hat);

// (1 - ||x_hat - x_ref||_F / ||x_ref||_F) * 100.
double fit_value(const DenseTensor& x_ref, const DenseTensor& x_hat);

// 10 log10(||x_hat||_F^2 / ||y - x_hat||_F^2); +infinity when x_hat == y.
double snr_output(const DenseTensor& y_in, const DenseTensor& x_hat);

}  // namespace pcpd
