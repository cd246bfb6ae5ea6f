#include "poolcore/specfun.hpp"

#include "poolcore/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <math.h>  // lgamma_r

namespace poolcore::specfun {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kLn2Pi = 1.8378770664093454835606594728112;
constexpr int kMaxTerms = 1'000'000;

void require_shape(double s, const char* what) {
    if (!(s > 0.0) || !std::isfinite(s)) {
        throw DomainError(std::string(what) + " must be positive and finite, got " + std::to_string(s));
    }
}

void require_probability(double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw DomainError(std::string(what) + " must lie in [0,1], got " + std::to_string(p));
    }
}

// lgamma(s) - Stirling's approximation, for s >= 10.
double stirling_error(double s) {
    const double r = 1.0 / s;
    const double r2 = r * r;
    return r * (1.0 / 12 - r2 * (1.0 / 360 - r2 * (1.0 / 1260 - r2 * (1.0 / 1680 - r2 * (1.0 / 1188)))));
}

// ln( x^s e^{-x} / Γ(s) ).
double log_gamma_prefix(double s, double x, double log_x) {
    if (s < 10.0) {
        return s * log_x - x - log_gamma(s);
    }
    const double u = (x - s) / s;
    double phi;  // t - 1 - ln t with t = x/s
    if (std::fabs(u) < 0.5) {
        phi = -log1pmx(u);
    } else {
        phi = x / s - 1.0 - (log_x - std::log(s));
    }
    return -s * phi + 0.5 * (std::log(s) - kLn2Pi) - stirling_error(s);
}

// s < 1 and x < s + 1. Both tails come out with full relative accuracy,
// including the regime s → 0 where P ≈ x^s is close to one.
GammaTails small_shape_series(double s, double x, double log_x) {
    double term = 1.0;
    double sum = 0.0;  // Σ_{n≥1} (-x)^n / (n! (s + n))
    for (int n = 1; n < kMaxTerms; ++n) {
        term *= -x / n;
        const double add = term / (s + n);
        sum += add;
        if (std::fabs(add) <= kEps * 0.25 * std::fabs(sum) && n > x) break;
        if (term == 0.0) break;
    }
    const double log_pre = s * log_x - log_gamma1p(s);  // ln(x^s / Γ(s+1))
    const double pre = std::exp(log_pre);
    double lower = pre * (1.0 + s * sum);
    double upper = -std::expm1(log_pre) - pre * s * sum;
    lower = std::clamp(lower, 0.0, 1.0);
    upper = std::clamp(upper, 0.0, 1.0);
    return {lower, upper};
}

GammaTails lower_series(double s, double x, double log_x) {
    double term = 1.0;
    double sum = 1.0;
    for (int n = 1; n < kMaxTerms; ++n) {
        term *= x / (s + n);
        sum += term;
        if (term <= kEps * 0.25 * sum) break;
    }
    const double lower = std::min(1.0, std::exp(log_gamma_prefix(s, x, log_x) - std::log(s)) * sum);
    return {lower, 1.0 - lower};
}

GammaTails upper_continued_fraction(double s, double x, double log_x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - s;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxTerms; ++i) {
        const double an = -i * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) <= kEps) break;
    }
    const double upper = std::min(1.0, std::exp(log_gamma_prefix(s, x, log_x)) * h);
    return {1.0 - upper, upper};
}

GammaTails incomplete_gamma(double s, double x, double log_x) {
    if (log_x == -kInf) return {0.0, 1.0};
    if (x == kInf) return {1.0, 0.0};
    if (s < 1.0 && x < s + 1.0) return small_shape_series(s, x, log_x);
    if (x < s + 1.0) return lower_series(s, x, log_x);
    return upper_continued_fraction(s, x, log_x);
}

double zeta_int(int k) {
    static constexpr std::array<double, 15> table{
        1.6449340668482264, 1.2020569031595943, 1.0823232337111382, 1.0369277551433699, 1.0173430619844491,
        1.0083492773819228, 1.0040773561979443, 1.0020083928260822, 1.0009945751278181, 1.0004941886041195,
        1.0002460865533080, 1.0001227133475785, 1.0000612481350587, 1.0000305882363070, 1.0000152822594087};
    if (k >= 2 && k <= 16) return table[static_cast<std::size_t>(k - 2)];
    double z = 1.0;
    for (int n = 2; n <= 6; ++n) z += std::pow(static_cast<double>(n), -k);
    return z;
}

// Acklam's rational approximation, lower half only (p <= 0.5).
double normal_quantile_rational(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    if (p < 0.02425) {
        const double t = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
               ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0);
    }
    const double r = p - 0.5;
    const double t = r * r;
    return (((((a[0] * t + a[1]) * t + a[2]) * t + a[3]) * t + a[4]) * t + a[5]) * r /
           (((((b[0] * t + b[1]) * t + b[2]) * t + b[3]) * t + b[4]) * t + 1.0);
}

double normal_quantile_lower_half(double p) {
    double x = normal_quantile_rational(p);
    // One Halley step against the erfc-based CDF.
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    if (pdf > 0.0 && std::isfinite(pdf)) {
        const double e = normal_cdf(x) - p;
        const double u = e / pdf;
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

double standard_normal_draw(Rng& rng) {
    const double u1 = uniform_open01(rng);
    const double u2 = uniform_open01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

double log_gamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError("log_gamma requires a positive finite argument, got " + std::to_string(x));
    }
    int sign = 0;
    return ::lgamma_r(x, &sign);
}

double log_gamma1p(double s) {
    if (std::fabs(s) < 0.2) {
        // ln Γ(1+s) = -γ s + Σ_{k≥2} (-1)^k ζ(k) s^k / k
        double sum = 0.0;
        double pw = -s;
        for (int k = 2; k < 40; ++k) {
            pw *= -s;
            const double add = zeta_int(k) * pw / k;
            sum += add;
            if (std::fabs(add) < 1e-18 * std::fabs(sum)) break;
        }
        return -std::numbers::egamma * s + sum;
    }
    return log_gamma(1.0 + s);
}

double log1pmx(double u) {
    if (std::fabs(u) < 0.25) {
        // -u²/2 + u³/3 - u⁴/4 + ...
        double pw = u * u;
        double sum = 0.0;
        for (int k = 2; k < 80; ++k) {
            const double add = (k % 2 == 0 ? -pw : pw) / k;
            sum += add;
            if (std::fabs(add) < 1e-18 * std::fabs(sum)) break;
            pw *= u;
        }
        return sum;
    }
    return std::log1p(u) - u;
}

double log_add_exp(double a, double b) noexcept {
    if (a < b) std::swap(a, b);
    if (b == -kInf) return a;
    return a + std::log1p(std::exp(b - a));
}

GammaTails reg_gamma(double s, double x) {
    require_shape(s, "gamma shape");
    if (!(x >= 0.0)) throw DomainError("incomplete gamma requires x >= 0, got " + std::to_string(x));
    return incomplete_gamma(s, x, x > 0.0 ? std::log(x) : -kInf);
}

GammaTails reg_gamma_logx(double s, double log_x) {
    require_shape(s, "gamma shape");
    if (std::isnan(log_x)) throw DomainError("incomplete gamma log-abscissa is NaN");
    if (log_x == kInf) return {1.0, 0.0};
    return incomplete_gamma(s, std::exp(log_x), log_x);
}

double reg_gamma_lower(double s, double x) { return reg_gamma(s, x).lower; }
double reg_gamma_upper(double s, double x) { return reg_gamma(s, x).upper; }

double reg_gamma_log_inverse(double s, double prob, Tail tail) {
    require_shape(s, "gamma shape");
    require_probability(prob, "probability");
    if ((tail == Tail::lower && prob == 0.0) || (tail == Tail::upper && prob == 1.0)) return -kInf;
    if ((tail == Tail::lower && prob == 1.0) || (tail == Tail::upper && prob == 0.0)) return kInf;

    const double lnq = tail == Tail::lower ? std::log(prob) : std::log1p(-prob);
    const double lnp = tail == Tail::upper ? std::log(prob) : std::log1p(-prob);

    if (s == 1.0) return std::log(-lnp);

    // Bracket in y = ln x: P(s,x) <= x^s/Γ(s+1) and the Markov bound Q(s,x) <= s/x.
    double lo = (lnq + log_gamma1p(s)) / s;
    double hi = std::log(s) - lnp;
    if (!(lo <= hi)) std::swap(lo, hi);
    lo -= 1e-12 * std::max(1.0, std::fabs(lo));
    hi += 1e-12 * std::max(1.0, std::fabs(hi));

    const bool use_lower = lnq <= -std::numbers::ln2;

    double y;
    const double nu = 2.0 * s;
    const double cwh = 2.0 / (9.0 * nu);
    const double z = tail == Tail::upper ? normal_upper_quantile(prob) : normal_quantile(prob);
    const double base = 1.0 - cwh + z * std::sqrt(cwh);
    if (s >= 0.5 && base > 0.05) {
        y = std::log(0.5 * nu * base * base * base);
    } else if (use_lower) {
        y = lo;
    } else {
        const double t = std::log(s) - lnp;
        y = t > 1.0 ? std::log(t) : lo;
    }
    if (!(y > lo && y < hi)) y = lo + 0.5 * (hi - lo);

    for (int it = 0; it < 400; ++it) {
        const GammaTails pq = reg_gamma_logx(s, y);
        const double x = std::exp(y);
        double f;
        double dlog = kInf;
        const double lpref = log_gamma_prefix(s, x, y);
        if (use_lower) {
            if (pq.lower <= 0.0) {
                f = -kInf;
            } else {
                const double lp = std::log(pq.lower);
                f = lp - lnq;
                dlog = std::exp(lpref - lp);
            }
        } else {
            if (pq.upper <= 0.0) {
                f = kInf;
            } else {
                const double lq = std::log(pq.upper);
                f = lnp - lq;
                dlog = std::exp(lpref - lq);
            }
        }
        if (f == 0.0) return y;
        if (f < 0.0) {
            lo = y;
        } else {
            hi = y;
        }
        const double step = f / dlog;
        const double scale = std::max(1.0, std::fabs(y));
        if (std::fabs(step) <= 4.0 * kEps * scale) return y - step;
        double next = y - step;
        if (!std::isfinite(next) || !(next > lo && next < hi)) next = lo + 0.5 * (hi - lo);
        if (std::fabs(next - y) <= 4.0 * kEps * scale) return next;
        y = next;
        if (hi - lo <= 4.0 * kEps * std::max({1.0, std::fabs(lo), std::fabs(hi)})) return lo + 0.5 * (hi - lo);
    }
    return y;
}

double chi2_cdf(double x, double kappa) {
    require_shape(kappa, "degrees of freedom");
    if (!(x >= 0.0)) throw DomainError("chi2_cdf requires x >= 0, got " + std::to_string(x));
    return reg_gamma(0.5 * kappa, 0.5 * x).lower;
}

double chi2_sf(double x, double kappa) {
    require_shape(kappa, "degrees of freedom");
    if (!(x >= 0.0)) throw DomainError("chi2_sf requires x >= 0, got " + std::to_string(x));
    return reg_gamma(0.5 * kappa, 0.5 * x).upper;
}

double chi2_cdf_logx(double log_x, double kappa) {
    require_shape(kappa, "degrees of freedom");
    return reg_gamma_logx(0.5 * kappa, log_x - std::numbers::ln2).lower;
}

double chi2_sf_logx(double log_x, double kappa) {
    require_shape(kappa, "degrees of freedom");
    return reg_gamma_logx(0.5 * kappa, log_x - std::numbers::ln2).upper;
}

double chi2_log_quantile(double q, double kappa) {
    require_shape(kappa, "degrees of freedom");
    return std::numbers::ln2 + reg_gamma_log_inverse(0.5 * kappa, q, Tail::lower);
}

double chi2_log_upper_quantile(double p, double kappa) {
    require_shape(kappa, "degrees of freedom");
    return std::numbers::ln2 + reg_gamma_log_inverse(0.5 * kappa, p, Tail::upper);
}

double chi2_quantile(double q, double kappa) { return std::exp(chi2_log_quantile(q, kappa)); }

double chi2_upper_quantile(double p, double kappa) { return std::exp(chi2_log_upper_quantile(p, kappa)); }

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_sf(double z) noexcept { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double normal_quantile(double q) {
    require_probability(q, "normal quantile level");
    if (q == 0.0) return -kInf;
    if (q == 1.0) return kInf;
    if (q > 0.5) return -normal_quantile_lower_half(1.0 - q);
    return normal_quantile_lower_half(q);
}

double normal_upper_quantile(double p) { return -normal_quantile(p); }

double gamma_cdf(double x, double k, double theta) {
    require_shape(theta, "gamma scale");
    if (!(x >= 0.0)) throw DomainError("gamma_cdf requires x >= 0, got " + std::to_string(x));
    return reg_gamma(k, x / theta).lower;
}

double gamma_sf(double x, double k, double theta) {
    require_shape(theta, "gamma scale");
    if (!(x >= 0.0)) throw DomainError("gamma_sf requires x >= 0, got " + std::to_string(x));
    return reg_gamma(k, x / theta).upper;
}

double gamma_quantile(double q, double k, double theta) {
    require_shape(theta, "gamma scale");
    return theta * std::exp(reg_gamma_log_inverse(k, q, Tail::lower));
}

double gamma_upper_quantile(double p, double k, double theta) {
    require_shape(theta, "gamma scale");
    return theta * std::exp(reg_gamma_log_inverse(k, p, Tail::upper));
}

double log_gamma_sample(double shape, Rng& rng) {
    require_shape(shape, "gamma shape");
    if (shape < 1.0) {
        // G_a = G_{a+1} U^{1/a}, kept on the log scale.
        return log_gamma_sample(shape + 1.0, rng) + std::log(uniform_open01(rng)) / shape;
    }
    // Marsaglia & Tsang.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double z;
        double v;
        do {
            z = standard_normal_draw(rng);
            v = 1.0 + c * z;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform_open01(rng);
        if (std::log(u) < 0.5 * z * z + d - d * v + d * std::log(v)) return std::log(d) + std::log(v);
    }
}

double log_beta_sample(double a, double b, Rng& rng) {
    require_shape(a, "beta shape a");
    require_shape(b, "beta shape b");
    if (b == 1.0) return std::log(uniform_open01(rng)) / a;  // inverse CDF x^a
    if (a == 1.0) return std::log(-std::expm1(std::log(uniform_open01(rng)) / b));
    const double ga = log_gamma_sample(a, rng);
    const double gb = log_gamma_sample(b, rng);
    return ga - log_add_exp(ga, gb);
}

double beta_sample(double a, double b, Rng& rng) { return std::exp(log_beta_sample(a, b, rng)); }

}  // namespace poolcore::specfun
