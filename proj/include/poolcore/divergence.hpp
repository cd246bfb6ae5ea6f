#pragma once

#include <functional>

namespace poolcore::divergence {

/// Non-increasing beta alternative Beta(a, b) with a <= 1 <= b, carried
/// alongside its UMP parameter w = (1 - a)/(b - a) and its strength
/// D(a, w), the KL divergence of the uniform from the beta density.
struct BetaAlt {
    double a = 1.0;
    double b = 1.0;
    double w = 1.0;
    double divergence = 0.0;

    /// Builds from (a, w); b = 1/w + a(1 - 1/w).
    static BetaAlt from_a_w(double a, double w);
    /// Builds from arbitrary positive shapes (w is NaN when a = b).
    static BetaAlt from_shapes(double a, double b);
};

using LogDensity = std::function<double(double)>;

struct QuadratureResult {
    double value;
    double error_estimate;
};

/// ∫ p ln(p/q) over (0, 1) by tanh-sinh quadrature. Never evaluates the
/// densities at 0 or 1. Throws NumericalError on a non-finite integrand.
QuadratureResult kl_divergence_numeric(const LogDensity& log_p, const LogDensity& log_q, int n_points = 2000);

/// ln of the Beta(a, b) density.
LogDensity beta_log_density(double a, double b);

/// D(u, Beta(a, b)) = a + b + ln B(a, b) - 2.
double beta_divergence(double a, double b);

/// D(a, w) for the UMP-parameterised family, 0 < a <= 1, 0 < w <= 1.
double beta_divergence_w(double a, double w);

/// Smallest a the inversion will consider.
inline constexpr double kAFloor = 1e-300;

/// a in [kAFloor, 1] with |D(a, w) - target| <= 1e-9.
/// Throws UnreachableDivergence when target exceeds D(kAFloor, w).
double find_a(double target_divergence, double w);

}  // namespace poolcore::divergence
