#pragma once

#include <vector>

#include "pcpd/engine.hpp"
#include "pcpd/special.hpp"
#include "pcpd/tensor.hpp"

namespace pcpd::gh {

// GIG posterior over one column's scale z_l with cached moments.
struct ColumnScalePosterior {
  double a = 1.0;
  double b = 0.0;
  double lambda = 0.0;
  double mean_z = 1.0;
  double mean_inv_z = 1.0;
};

// Full variational state of the generalized-hyperbolic engine.
struct State {
  engine::FactorSet factors;
  std::vector<ColumnScalePosterior> col_scales;
  NoisePosterior noise;

  std::vector<double> a0;   // per-column GH rate hyper-parameter, optimized
  double b0 = 0.0;          // shared; kept at the Laplacian-limit value 0
  double lambda0 = 0.0;     // shared order hyper-parameter
  double kappa_a1 = 0.0;    // gamma hyper-prior on a0
  double kappa_a2 = 1e-6;
  double eps = 1e-6;        // non-informative gamma prior on beta

  double beta_mean = 1.0;   // E[beta]; tracks noise unless beta_fixed
  bool beta_fixed = false;

  int iteration = 0;
  std::vector<double> elbo_trace;

  Index rank() const { return factors.rank(); }
  double dim_sum() const;
  double dim_prod() const;
};

State init(const DenseTensor& y, const FitOptions& opts);

// One mode's matrix-normal update (Gauss-Seidel within a sweep).
void update_factor(State& s, const DenseTensor& y, int mode);

// GIG scale update; recomputes the cached moments.
void update_scales(State& s);

// Conjugate noise-precision update (unconditional; scheduling lives in fit).
void update_noise(State& s, const DenseTensor& y);

// Hyper-parameter update a0_l = (k1 + lambda0/2 - 1) / (k2 + E[z_l]/2).
void update_hyper_a0(State& s);

// Permanently removes columns whose magnitude falls below
// rel_threshold * max magnitude; at least one column survives.
void prune(State& s, double rel_threshold);

// Variational lower bound of the current state (includes the a0 hyper-prior
// term so that every update in the sweep is an ascent step).
double elbo(const State& s, const DenseTensor& y);

FitReport fit(const DenseTensor& y, const FitOptions& opts);

}  // namespace pcpd::gh
