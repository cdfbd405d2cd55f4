#include "pcpd/priors.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace pcpd {

namespace {

double simpson(const std::function<double(double)>& f, double lo, double hi, double flo,
               double fmid, double fhi, double whole, double tol, int depth) {
  const double mid = 0.5 * (lo + hi);
  const double lmid = 0.5 * (lo + mid);
  const double rmid = 0.5 * (mid + hi);
  const double flmid = f(lmid);
  const double frmid = f(rmid);
  const double left = (mid - lo) / 6.0 * (flo + 4.0 * flmid + fmid);
  const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frmid + fhi);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson(f, lo, mid, flo, flmid, fmid, left, 0.5 * tol, depth - 1) +
         simpson(f, mid, hi, fmid, frmid, fhi, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double mid = 0.5 * (lo + hi);
  const double flo = f(lo), fmid = f(mid), fhi = f(hi);
  const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
  return simpson(f, lo, hi, flo, fmid, fhi, whole, tol, 48);
}

}  // namespace

namespace detail {

double log_integral_exp(const std::function<double(double)>& g, double u_peak) {
  // Refine the peak location with a short golden-section pass; the provided
  // u_peak only needs to be in the basin.
  double a = u_peak - 1.0, b = u_peak + 1.0;
  while (g(a) > g(u_peak)) a -= (u_peak - a);
  while (g(b) > g(u_peak)) b += (b - u_peak);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double g1 = g(x1), g2 = g(x2);
  for (int it = 0; it < 120 && (b - a) > 1e-11 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (g1 < g2) {
      a = x1;
      x1 = x2;
      g1 = g2;
      x2 = a + gr * (b - a);
      g2 = g(x2);
    } else {
      b = x2;
      x2 = x1;
      g2 = g1;
      x1 = b - gr * (b - a);
      g1 = g(x1);
    }
  }
  const double umax = 0.5 * (a + b);
  const double gmax = g(umax);

  // Widen the window until the integrand is negligible at both ends.
  const double drop = 60.0;
  double lo = umax - 1.0, hi = umax + 1.0;
  while (g(lo) > gmax - drop && umax - lo < 1e4) lo -= (umax - lo);
  while (g(hi) > gmax - drop && hi - umax < 1e4) hi += (hi - umax);

  const auto h = [&](double u) { return std::exp(g(u) - gmax); };
  const double integral = adaptive_simpson(h, lo, hi, 1e-12);
  return gmax + std::log(integral);
}

}  // namespace detail

double gig_logpdf(double z, const GigParams& p) {
  if (!(z > 0.0)) throw std::domain_error("gig_logpdf: requires z > 0");
  if (!(p.a > 0.0) || !(p.b > 0.0)) throw std::domain_error("gig_logpdf: requires a, b > 0");
  const double x = std::sqrt(p.a) * std::sqrt(p.b);
  return 0.5 * p.lambda * (std::log(p.a) - std::log(p.b)) - M_LN2 - log_bessel_k(p.lambda, x) +
         (p.lambda - 1.0) * std::log(z) - 0.5 * (p.a * z + p.b / z);
}

double gh_logpdf(const Eigen::VectorXd& v, const GhHyper& h) {
  if (!(h.a0 > 0.0) || !(h.b0 > 0.0))
    throw std::domain_error("gh_logpdf: requires a0 > 0 and b0 > 0");
  const double z_len = static_cast<double>(v.size());
  const double vnorm_sq = v.squaredNorm();
  const GigParams gig{h.a0, h.b0, h.lambda0};

  // Substituting z = e^u turns the mixture integral into
  //   integral exp( ln N(v|0,zI) + ln GIG(z) + u ) du.
  const auto g = [&](double u) {
    const double z = std::exp(u);
    return -0.5 * z_len * (std::log(2.0 * M_PI) + u) - 0.5 * vnorm_sq / z + gig_logpdf(z, gig) + u;
  };
  // Stationary point of alpha*u - (a e^u + c e^-u)/2 in closed form.
  const double alpha = h.lambda0 - 0.5 * z_len;
  const double c = h.b0 + vnorm_sq;
  const double w = (alpha + std::sqrt(alpha * alpha + h.a0 * c)) / h.a0;
  return detail::log_integral_exp(g, std::log(w));
}

double student_t_marginal_logpdf(const Eigen::VectorXd& v, const GgHyper& h) {
  if (!(h.c0 > 0.0) || !(h.d0 > 0.0))
    throw std::domain_error("student_t_marginal_logpdf: requires c0, d0 > 0");
  const double z_len = static_cast<double>(v.size());
  const double vnorm_sq = v.squaredNorm();
  return -0.5 * z_len * std::log(M_PI) + log_gamma(h.c0 + 0.5 * z_len) - log_gamma(h.c0) +
         h.c0 * std::log(2.0 * h.d0) - (h.c0 + 0.5 * z_len) * std::log(2.0 * h.d0 + vnorm_sq);
}

}  // namespace pcpd
