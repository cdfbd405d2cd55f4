#pragma once

#include <vector>

#include "pcpd/engine.hpp"
#include "pcpd/tensor.hpp"

namespace pcpd::gg {

// Gamma posterior over one column's precision gamma_l.
struct GammaPosterior {
  double shape = 1e-6;
  double rate = 1e-6;
  double mean() const { return shape / rate; }
};

struct State {
  engine::FactorSet factors;
  std::vector<GammaPosterior> gamma_post;
  NoisePosterior noise;

  double c0 = 1e-6;
  double d0 = 1e-6;
  bool update_d0 = false;          // optional hyper-prior on the gamma rate
  std::vector<double> d0_mean;     // posterior mean of d0 per column when enabled
  double eps = 1e-6;

  double beta_mean = 1.0;
  bool beta_fixed = false;
  int iteration = 0;

  Index rank() const { return factors.rank(); }
  double dim_sum() const;
  double dim_prod() const;
};

State init(const DenseTensor& y, const FitOptions& opts, bool update_d0_hyper = false);

void update_factor(State& s, const DenseTensor& y, int mode);

// Conjugate gamma update: c_l = c0 + sum_n J_n / 2,
// d_l = d0 + sum_n (||m_l||^2 + J_n cov_ll) / 2.
void update_gamma(State& s);

void update_noise(State& s, const DenseTensor& y);

// Hyper-prior update for d0 (no-op unless the variant flag is set):
// Q(d0_l) = gamma(c0 + eps, E[gamma_l] + eps), mean substituted into d_l.
void update_hyper_d0(State& s);

void prune(State& s, double rel_threshold);

FitReport fit(const DenseTensor& y, const FitOptions& opts, bool update_d0_hyper = false);

}  // namespace pcpd::gg
