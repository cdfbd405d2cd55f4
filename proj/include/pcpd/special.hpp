#pragma once

namespace pcpd {

// Parameters of a generalized inverse Gaussian density
//   p(z) propto z^(lambda-1) exp(-(a z + b / z) / 2),  z > 0,
// in the proper regime a > 0, b > 0.
struct GigParams {
  double a = 1.0;
  double b = 1.0;
  double lambda = 0.0;
};

struct GigMoments {
  double mean_z = 0.0;
  double mean_inv_z = 0.0;
  double mean_log_z = 0.0;
};

// ln K_nu(x), the modified Bessel function of the second kind in log scale.
// Valid for any real nu and x > 0; accuracy is guaranteed (relative error of
// K below 1e-10) for x in [1e-6, 1e4] and |nu| <= 200, and the result stays
// finite well outside that box. Evaluation: Temme's series for x <= 2 and a
// Steed continued fraction for x > 2 seed the order range [-1/2, 1/2]; the
// three-term upward recurrence, carried in log scale, raises the order.
// (Temme, J. Comput. Phys. 19 (1975); Thompson & Barnett, Comput. Phys.
// Commun. 47 (1987).)
double log_bessel_k(double nu, double x);

// ln(K_{nu+shift}(x) / K_nu(x)). For integer shift both orders are taken
// from one recurrence pass so the shared scale cancels exactly.
double bessel_k_log_ratio(double nu, double x, double shift);

// d/dnu ln K_nu(x), central difference with step 1e-5 * max(1, |nu|).
double log_bessel_k_dnu(double nu, double x);

// E[z], E[1/z], E[ln z] of GIG(a, b, lambda).
GigMoments gig_moments(const GigParams& p);

double digamma(double x);    // x > 0
double log_gamma(double x);  // x > 0

}  // namespace pcpd
