#pragma once

#include <Eigen/Dense>
#include <functional>

#include "pcpd/special.hpp"

namespace pcpd {

// Hyper-parameters of the generalized hyperbolic column prior. b0 = 0 is the
// Laplacian-limit configuration used at initialization; density evaluation
// requires b0 > 0.
struct GhHyper {
  double a0 = 1.0;
  double b0 = 1.0;
  double lambda0 = 0.0;
};

// Hyper-parameters of the Gaussian-gamma column prior.
struct GgHyper {
  double c0 = 1e-6;
  double d0 = 1e-6;
};

// ln GIG(z | a, b, lambda).
double gig_logpdf(double z, const GigParams& p);

// ln GH(v | a0, b0, lambda0) for a column group of total length Z = v.size().
// Evaluated through the Gaussian scale mixture
//   integral N(v | 0, z I) GIG(z | a0, b0, lambda0) dz
// by adaptive quadrature in log scale; the mixture form is the normative
// definition here (the closed form exists but is only used as a cross-check).
double gh_logpdf(const Eigen::VectorXd& v, const GhHyper& h);

// ln of the multivariate student-t marginal obtained by integrating the
// Gaussian-gamma prior over the precision.
double student_t_marginal_logpdf(const Eigen::VectorXd& v, const GgHyper& h);

namespace detail {
// ln integral exp(g(u)) du over the real line for a unimodal exponent with
// peak near u_peak. Shared by gh_logpdf; exposed for reuse in tools/tests.
double log_integral_exp(const std::function<double(double)>& g, double u_peak);
}  // namespace detail

}  // namespace pcpd
