#pragma once

// Special functions and distribution primitives.
//
// Everything here works for real shape/degrees of freedom from about 1e-8
// up to 1e6. Functions with a `log_x` argument accept the abscissa on the
// log scale so that quantiles of very small degrees of freedom, which
// underflow as doubles, stay usable.

#include "poolcore/rng.hpp"

namespace poolcore::specfun {

enum class Tail { lower, upper };

/// ln Γ(x) for x > 0.
double log_gamma(double x);

/// ln Γ(1 + s), accurate for |s| small where ln Γ(1 + s) ≈ -γ s.
double log_gamma1p(double s);

/// log1p(u) - u without cancellation for small u.
double log1pmx(double u);

/// ln(e^a + e^b).
double log_add_exp(double a, double b) noexcept;

/// Regularised incomplete gamma pair P(s, x) and Q(s, x) = 1 - P(s, x),
/// each computed to full relative accuracy in its own tail.
struct GammaTails {
    double lower;
    double upper;
};

GammaTails reg_gamma(double s, double x);
GammaTails reg_gamma_logx(double s, double log_x);

double reg_gamma_lower(double s, double x);
double reg_gamma_upper(double s, double x);

/// ln x solving P(s, x) = prob (Tail::lower) or Q(s, x) = prob (Tail::upper).
/// prob = 0 and 1 map to -inf/+inf as appropriate.
double reg_gamma_log_inverse(double s, double prob, Tail tail);

double chi2_cdf(double x, double kappa);
double chi2_sf(double x, double kappa);
double chi2_cdf_logx(double log_x, double kappa);
double chi2_sf_logx(double log_x, double kappa);

/// x with chi2_cdf(x, kappa) = q. q = 1 gives +inf.
double chi2_quantile(double q, double kappa);
/// x with chi2_sf(x, kappa) = p, i.e. F⁻¹(1 - p) without forming 1 - p.
double chi2_upper_quantile(double p, double kappa);
double chi2_log_quantile(double q, double kappa);
double chi2_log_upper_quantile(double p, double kappa);

double normal_cdf(double z) noexcept;
double normal_sf(double z) noexcept;
/// Φ⁻¹(q); q = 0 → -inf, q = 1 → +inf.
double normal_quantile(double q);
/// Φ⁻¹(1 - p) = -Φ⁻¹(p).
double normal_upper_quantile(double p);

/// Gamma distribution with shape k and scale theta.
double gamma_cdf(double x, double k, double theta);
double gamma_sf(double x, double k, double theta);
double gamma_quantile(double q, double k, double theta);
double gamma_upper_quantile(double p, double k, double theta);

/// ln of a Gamma(shape, 1) draw. Stays finite for shapes far below 1e-300's reciprocal range.
double log_gamma_sample(double shape, Rng& rng);

/// One Beta(a, b) draw on the log scale.
double log_beta_sample(double a, double b, Rng& rng);

/// One Beta(a, b) draw. Underflows to exactly 0 when the log-scale draw is
/// below the double range, which happens routinely for a ≲ 1e-3.
double beta_sample(double a, double b, Rng& rng);

}  // namespace poolcore::specfun
