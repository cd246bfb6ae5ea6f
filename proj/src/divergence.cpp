#include "poolcore/divergence.hpp"

#include "poolcore/errors.hpp"
#include "poolcore/rootfind.hpp"
#include "poolcore/specfun.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace poolcore::divergence {

namespace {

void require_unit_interval_open_left(double v, const char* what) {
    if (!(v > 0.0 && v <= 1.0)) {
        throw DomainError(std::string(what) + " must lie in (0,1], got " + std::to_string(v));
    }
}

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw DomainError(std::string(what) + " must be positive and finite, got " + std::to_string(v));
    }
}

// 1 - x is below one ulp of 1 beyond this half-width in u.
constexpr double kMaxU = 17.0;

}  // namespace

BetaAlt BetaAlt::from_a_w(double a, double w) {
    require_unit_interval_open_left(a, "beta shape a");
    require_unit_interval_open_left(w, "w");
    BetaAlt alt;
    alt.a = a;
    alt.w = w;
    alt.b = 1.0 / w + a * (1.0 - 1.0 / w);
    alt.divergence = beta_divergence_w(a, w);
    return alt;
}

BetaAlt BetaAlt::from_shapes(double a, double b) {
    BetaAlt alt;
    alt.a = a;
    alt.b = b;
    alt.w = a == b ? std::numeric_limits<double>::quiet_NaN() : (1.0 - a) / (b - a);
    alt.divergence = beta_divergence(a, b);
    return alt;
}

QuadratureResult kl_divergence_numeric(const LogDensity& log_p, const LogDensity& log_q, int n_points) {
    if (n_points < 1000) throw DomainError("kl_divergence_numeric needs at least 1000 points");
    const int half = n_points / 2;
    const double t_max = std::asinh(kMaxU / (0.5 * std::numbers::pi));
    const double h = t_max / half;

    double full = 0.0;
    double coarse = 0.0;  // every other node, step 2h
    for (int k = -half; k <= half; ++k) {
        const double t = k * h;
        const double u = 0.5 * std::numbers::pi * std::sinh(t);
        const double x = 1.0 / (1.0 + std::exp(-2.0 * u));
        const double ch = std::cosh(u);
        const double weight = 0.25 * std::numbers::pi * std::cosh(t) / (ch * ch);
        if (x <= 0.0 || x >= 1.0) continue;
        const double lp = log_p(x);
        const double lq = log_q(x);
        double f = 0.0;
        if (lp != -std::numeric_limits<double>::infinity()) {
            f = std::exp(lp) * (lp - lq);
        }
        if (!std::isfinite(f)) {
            throw NumericalError("non-finite KL integrand at x=" + std::to_string(x));
        }
        full += weight * f;
        if (k % 2 == 0) coarse += weight * f;
    }
    full *= h;
    coarse *= 2.0 * h;
    return {full, std::fabs(full - coarse)};
}

LogDensity beta_log_density(double a, double b) {
    require_positive(a, "beta shape a");
    require_positive(b, "beta shape b");
    const double log_beta = specfun::log_gamma(a) + specfun::log_gamma(b) - specfun::log_gamma(a + b);
    return [a, b, log_beta](double x) { return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta; };
}

double beta_divergence(double a, double b) {
    require_positive(a, "beta shape a");
    require_positive(b, "beta shape b");
    return a + b + specfun::log_gamma(a) + specfun::log_gamma(b) - specfun::log_gamma(a + b) - 2.0;
}

double beta_divergence_w(double a, double w) {
    if (w == 0.0) throw DomainError("w = 0 gives a degenerate beta distribution");
    require_unit_interval_open_left(a, "beta shape a");
    require_unit_interval_open_left(w, "w");
    const double inv_w = 1.0 / w;
    const double b = inv_w + a * (1.0 - inv_w);
    const double ab = 2.0 * a + (1.0 - a) * inv_w;
    return ab + specfun::log_gamma(a) + specfun::log_gamma(b) - specfun::log_gamma(ab) - 2.0;
}

double find_a(double target_divergence, double w) {
    if (!(target_divergence >= 0.0) || !std::isfinite(target_divergence)) {
        throw DomainError("target divergence must be finite and non-negative");
    }
    require_unit_interval_open_left(w, "w");
    if (target_divergence == 0.0) return 1.0;

    const double max_div = beta_divergence_w(kAFloor, w);
    if (target_divergence > max_div) throw UnreachableDivergence(target_divergence, w, max_div);

    // D(a, w) is decreasing in a; bisect on ln a.
    auto above_target = [&](double log_a) { return beta_divergence_w(std::exp(log_a), w) >= target_divergence; };
    const auto r = root::bisect_predicate(above_target, std::log(kAFloor), 0.0, 0.0, 400);
    const double a_lo = std::exp(r.lo);
    const double a_hi = std::min(1.0, std::exp(r.hi));
    const double d_lo = beta_divergence_w(a_lo, w) - target_divergence;
    const double d_hi = beta_divergence_w(a_hi, w) - target_divergence;
    const double a = std::fabs(d_lo) <= std::fabs(d_hi) ? a_lo : a_hi;
    const double err = std::min(std::fabs(d_lo), std::fabs(d_hi));
    if (err > 1e-9) {
        throw NumericalError("find_a did not reach 1e-9 (residual " + std::to_string(err) + ")");
    }
    return a;
}

}  // namespace poolcore::divergence
