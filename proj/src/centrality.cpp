#include "poolcore/centrality.hpp"

#include "poolcore/errors.hpp"
#include "poolcore/null_table.hpp"
#include "poolcore/rootfind.hpp"
#include "poolcore/specfun.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace poolcore {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_level_args(std::size_t m, double alpha) {
    if (m < 1) throw DomainError("M must be at least 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
}

// ln G* where G* is the upper-alpha quantile of Gamma(M s, 1).
double log_sum_critical(double shape, std::size_t m, double alpha) {
    return specfun::reg_gamma_log_inverse(static_cast<double>(m) * shape, alpha, specfun::Tail::upper);
}

double gamma_family_pc(double shape, std::size_t m, double alpha) {
    const double lg = log_sum_critical(shape, m, alpha);
    return specfun::reg_gamma_logx(shape, lg - std::log(static_cast<double>(m))).upper;
}

double gamma_family_pr(double shape, std::size_t m, double alpha) {
    return specfun::reg_gamma_logx(shape, log_sum_critical(shape, m, alpha)).upper;
}

double tippett_level(std::size_t m, double alpha) {
    return -std::expm1(std::log1p(-alpha) / static_cast<double>(m));
}

double stouffer_pc(std::span<const double> weights, std::size_t m, double alpha) {
    double norm2 = static_cast<double>(m);
    if (!weights.empty()) norm2 = std::inner_product(weights.begin(), weights.end(), weights.begin(), 0.0);
    const double norm = std::sqrt(norm2);
    return quantile_closed_pc([](double x) { return specfun::normal_sf(x); },
                              [norm](double a) { return norm * specfun::normal_upper_quantile(a); }, weights, m,
                              alpha);
}

}  // namespace

RejectionProfile RejectionProfile::make(double p_c, std::optional<double> p_r, double alpha, std::size_t m) {
    RejectionProfile r;
    r.p_c = p_c;
    r.p_r = p_r;
    r.alpha = alpha;
    r.m = m;
    if (p_r && p_c > 0.0) r.quotient = (p_c - *p_r) / p_c;
    return r;
}

double central_level_generic(const PoolFn& pool_fn, std::size_t m, double alpha, double tol) {
    check_level_args(m, alpha);
    auto diag = [&](double p) { return pool_fn(PValues(std::vector<double>(m, p))); };
    if (diag(0.0) > alpha) {
        throw NoRejectionRegion("pool does not reject at alpha=" + std::to_string(alpha) + " even with all p = 0");
    }
    if (diag(1.0) <= alpha) return 1.0;
    const auto r = root::bisect_predicate([&](double p) { return diag(p) <= alpha; }, 0.0, 1.0, tol);
    return r.lo;
}

std::optional<double> marginal_level_generic(const PoolFn& pool_fn, std::size_t m, double alpha, double b,
                                             double tol) {
    check_level_args(m, alpha);
    if (!(b > 0.0 && b <= 1.0)) throw DomainError("b must lie in (0,1]");
    std::vector<double> v(m, b);
    auto at = [&](double p1) {
        v[0] = p1;
        return pool_fn(PValues(v));
    };
    if (at(0.0) > alpha) return std::nullopt;
    if (at(b) <= alpha) return b;
    const auto r = root::bisect_predicate([&](double p) { return at(p) <= alpha; }, 0.0, b, tol);
    return r.lo;
}

double quantile_closed_pc(const std::function<double(double)>& sf,
                          const std::function<double(double)>& sum_upper_quantile, std::span<const double> weights,
                          std::size_t m, double alpha) {
    check_level_args(m, alpha);
    const double total = weights.empty() ? static_cast<double>(m)
                                         : std::accumulate(weights.begin(), weights.end(), 0.0);
    return sf(sum_upper_quantile(alpha) / total);
}

double chi_pc(double kappa, std::size_t m, double alpha) {
    check_level_args(m, alpha);
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw DomainError("kappa must be positive and finite");
    return gamma_family_pc(0.5 * kappa, m, alpha);
}

double chi_pr(double kappa, std::size_t m, double alpha) {
    check_level_args(m, alpha);
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw DomainError("kappa must be positive and finite");
    return gamma_family_pr(0.5 * kappa, m, alpha);
}

double chi_q(double kappa, std::size_t m, double alpha) {
    const double pc = chi_pc(kappa, m, alpha);
    const double pr = chi_pr(kappa, m, alpha);
    return (pc - pr) / pc;
}

double chi_kappa(double target_q, std::size_t m, double alpha) {
    check_level_args(m, alpha);
    if (!(target_q >= 0.0 && target_q <= 1.0)) throw DomainError("target quotient must lie in [0,1]");
    if (target_q == 0.0) return 0.0;
    if (target_q == 1.0) return kInf;
    constexpr double lo = -20.0;
    constexpr double hi = 20.0;
    auto q_at = [&](double lk) { return chi_q(std::exp(lk), m, alpha); };
    const double q_lo = q_at(lo);
    const double q_hi = q_at(hi);
    if (target_q < q_lo || target_q > q_hi) {
        throw DomainError("quotient " + std::to_string(target_q) + " is outside the range [" + std::to_string(q_lo) +
                          ", " + std::to_string(q_hi) + "] reachable with ln kappa in [-20, 20]");
    }
    const auto r = root::bisect_predicate([&](double lk) { return q_at(lk) <= target_q; }, lo, hi, 1e-12, 200);
    const double k_lo = std::exp(r.lo);
    const double k_hi = std::exp(r.hi);
    const double e_lo = std::fabs(chi_q(k_lo, m, alpha) - target_q);
    const double e_hi = std::fabs(chi_q(k_hi, m, alpha) - target_q);
    const double kappa = e_lo <= e_hi ? k_lo : k_hi;
    if (std::min(e_lo, e_hi) > 1e-6) {
        throw NumericalError("chi_kappa residual " + std::to_string(std::min(e_lo, e_hi)) + " exceeds 1e-6");
    }
    return kappa;
}

PoolFn make_pool_fn(const MethodSpec& method, const NullQuantileTable* table) {
    if (method.kind == MethodKind::hr && table == nullptr) {
        throw DomainError("the hr method needs a simulated null table");
    }
    return [method, table](const PValues& p) { return pool(method, p, table); };
}

RejectionProfile rejection_profile_generic(const PoolFn& pool_fn, std::size_t m, double alpha, double b,
                                           double tol) {
    const double pc = central_level_generic(pool_fn, m, alpha, tol);
    const auto pr = marginal_level_generic(pool_fn, m, alpha, b, tol);
    return RejectionProfile::make(pc, pr, alpha, m);
}

std::optional<RejectionProfile> rejection_profile_closed(const MethodSpec& method, std::size_t m, double alpha) {
    check_level_args(m, alpha);
    method.validate(m);
    switch (method.kind) {
        case MethodKind::order: {
            if (method.k == 1) {
                const double level = tippett_level(m, alpha);
                return RejectionProfile::make(level, level, alpha, m);
            }
            if (static_cast<std::size_t>(method.k) == m) {
                return RejectionProfile::make(std::pow(alpha, 1.0 / static_cast<double>(m)), std::nullopt, alpha, m);
            }
            return std::nullopt;
        }
        case MethodKind::stouffer:
            return RejectionProfile::make(stouffer_pc(method.weights, m, alpha), 0.0, alpha, m);
        case MethodKind::fisher:
            return RejectionProfile::make(gamma_family_pc(1.0, m, alpha), gamma_family_pr(1.0, m, alpha), alpha, m);
        case MethodKind::pearson: {
            const double x = std::exp(
                specfun::reg_gamma_log_inverse(static_cast<double>(m), alpha, specfun::Tail::lower));
            return RejectionProfile::make(-std::expm1(-x / static_cast<double>(m)), std::nullopt, alpha, m);
        }
        case MethodKind::gamma:
            return RejectionProfile::make(gamma_family_pc(method.shape, m, alpha),
                                          gamma_family_pr(method.shape, m, alpha), alpha, m);
        case MethodKind::chi: {
            if (method.kappa == 0.0) {
                const double level = tippett_level(m, alpha);
                return RejectionProfile::make(level, level, alpha, m);
            }
            if (method.kappa == kInf) return RejectionProfile::make(stouffer_pc({}, m, alpha), 0.0, alpha, m);
            return RejectionProfile::make(chi_pc(method.kappa, m, alpha), chi_pr(method.kappa, m, alpha), alpha, m);
        }
        case MethodKind::hr:
            return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace poolcore
