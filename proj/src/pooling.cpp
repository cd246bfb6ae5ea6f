#include "poolcore/pooling.hpp"

#include "poolcore/errors.hpp"
#include "poolcore/format.hpp"
#include "poolcore/null_table.hpp"
#include "poolcore/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace poolcore {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Summing in sorted order makes every pooler exactly permutation invariant.
double sorted_sum(std::vector<double>& terms) {
    std::sort(terms.begin(), terms.end());
    double sum = 0.0;
    for (double t : terms) sum += t;
    return sum;
}

bool any_equal(std::span<const double> p, double v) {
    return std::find(p.begin(), p.end(), v) != p.end();
}

void check_weights(std::span<const double> weights, std::size_t m) {
    if (weights.empty()) return;
    if (weights.size() != m) {
        throw DomainError("weights length " + std::to_string(weights.size()) + " does not match M=" +
                          std::to_string(m));
    }
    for (double c : weights) {
        if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("weights must be positive and finite");
    }
}

// 1 - G(S) for the gamma family, with S = Σ G⁻¹(1 - p_i) formed from log
// quantiles so tiny shapes survive.
double gamma_family_pool(const PValues& p, double shape, double log_scale) {
    if (any_equal(p.values(), 0.0)) return 0.0;
    std::vector<double> logs;
    logs.reserve(p.size());
    for (double pi : p.values()) {
        if (pi == 1.0) continue;
        logs.push_back(specfun::reg_gamma_log_inverse(shape, pi, specfun::Tail::upper) + log_scale);
    }
    std::sort(logs.begin(), logs.end());
    double log_sum = -kInf;
    for (double lx : logs) log_sum = specfun::log_add_exp(log_sum, lx);
    if (log_sum == -kInf) return 1.0;
    const double m_shape = static_cast<double>(p.size()) * shape;
    return specfun::reg_gamma_logx(m_shape, log_sum - log_scale).upper;
}

}  // namespace

PValues::PValues(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw DomainError("at least one p-value is required");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const double v = values_[i];
        if (!(v >= 0.0 && v <= 1.0)) {
            throw DomainError("p-value " + std::to_string(i + 1) + " is outside [0,1]: " + format_shortest(v));
        }
    }
}

MethodSpec MethodSpec::order(int k) {
    MethodSpec m;
    m.kind = MethodKind::order;
    m.k = k;
    return m;
}

MethodSpec MethodSpec::stouffer(std::vector<double> weights) {
    MethodSpec m;
    m.kind = MethodKind::stouffer;
    m.weights = std::move(weights);
    return m;
}

MethodSpec MethodSpec::fisher() {
    MethodSpec m;
    m.kind = MethodKind::fisher;
    return m;
}

MethodSpec MethodSpec::pearson() {
    MethodSpec m;
    m.kind = MethodKind::pearson;
    return m;
}

MethodSpec MethodSpec::gamma(double shape, double scale) {
    MethodSpec m;
    m.kind = MethodKind::gamma;
    m.shape = shape;
    m.scale = scale;
    return m;
}

MethodSpec MethodSpec::chi(double kappa) {
    MethodSpec m;
    m.kind = MethodKind::chi;
    m.kappa = kappa;
    return m;
}

MethodSpec MethodSpec::hr(double w) {
    MethodSpec m;
    m.kind = MethodKind::hr;
    m.w = w;
    return m;
}

std::string MethodSpec::key() const {
    switch (kind) {
        case MethodKind::order:
            if (k == 1) return "tippett";
            return "order(k=" + std::to_string(k) + ")";
        case MethodKind::stouffer: {
            if (weights.empty()) return "stouffer";
            std::string s = "stouffer(weights=";
            for (std::size_t i = 0; i < weights.size(); ++i) {
                if (i) s += ';';
                s += format_shortest(weights[i]);
            }
            return s + ")";
        }
        case MethodKind::fisher:
            return "fisher";
        case MethodKind::pearson:
            return "pearson";
        case MethodKind::gamma:
            return "gamma(k=" + format_shortest(shape) + ",theta=" + format_shortest(scale) + ")";
        case MethodKind::chi:
            return "chi(kappa=" + format_shortest(kappa) + ")";
        case MethodKind::hr:
            return "hr(w=" + format_shortest(w) + ")";
    }
    return "unknown";
}

double MethodSpec::parameter() const {
    switch (kind) {
        case MethodKind::order:
            return k;
        case MethodKind::gamma:
            return shape;
        case MethodKind::chi:
            return kappa;
        case MethodKind::hr:
            return w;
        default:
            return std::numeric_limits<double>::quiet_NaN();
    }
}

void MethodSpec::validate(std::size_t m) const {
    if (!weights.empty() && kind != MethodKind::stouffer) {
        throw DomainError("weights are only supported for the stouffer method");
    }
    switch (kind) {
        case MethodKind::order:
            if (k < 1 || static_cast<std::size_t>(k) > m) {
                throw DomainError("order statistic k=" + std::to_string(k) + " must lie in [1, M=" +
                                  std::to_string(m) + "]");
            }
            break;
        case MethodKind::stouffer:
            check_weights(weights, m);
            break;
        case MethodKind::gamma:
            if (!(shape > 0.0) || !std::isfinite(shape) || !(scale > 0.0) || !std::isfinite(scale)) {
                throw DomainError("gamma shape and scale must be positive and finite");
            }
            break;
        case MethodKind::chi:
            if (!(kappa >= 0.0)) throw DomainError("kappa must be non-negative");
            break;
        case MethodKind::hr:
            if (!(w >= 0.0 && w <= 1.0)) throw DomainError("w must lie in [0,1]");
            break;
        default:
            break;
    }
}

double ord_pool(const PValues& p, int k) {
    const std::size_t m = p.size();
    if (k < 1 || static_cast<std::size_t>(k) > m) {
        throw DomainError("order statistic k=" + std::to_string(k) + " out of range for M=" + std::to_string(m));
    }
    std::vector<double> sorted = p.vector();
    std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
    const double x = sorted[k - 1];
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double md = static_cast<double>(m);
    if (k == 1) return -std::expm1(md * std::log1p(-x));

    const double lx = std::log(x);
    const double l1x = std::log1p(-x);
    const double lgm = specfun::log_gamma(md + 1.0);
    double total = 0.0;
    for (std::size_t l = static_cast<std::size_t>(k); l <= m; ++l) {
        const double ld = static_cast<double>(l);
        const double log_choose = lgm - specfun::log_gamma(ld + 1.0) - specfun::log_gamma(md - ld + 1.0);
        total += std::exp(log_choose + ld * lx + (md - ld) * l1x);
    }
    return std::min(1.0, total);
}

double tippett_pool(const PValues& p) { return ord_pool(p, 1); }

double quantile_pool(const PValues& p, const std::function<double(double)>& upper_quantile,
                     const std::function<double(double)>& sum_sf, std::span<const double> weights) {
    check_weights(weights, p.size());
    std::vector<double> terms;
    terms.reserve(p.size());
    bool pos_inf = false;
    bool neg_inf = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double t = upper_quantile(p[i]);
        if (t == kInf) {
            pos_inf = true;
        } else if (t == -kInf) {
            neg_inf = true;
        } else {
            terms.push_back((weights.empty() ? 1.0 : weights[i]) * t);
        }
    }
    if (pos_inf) return 0.0;
    if (neg_inf) return 1.0;
    return sum_sf(sorted_sum(terms));
}

double stouffer_pool(const PValues& p, std::span<const double> weights) {
    check_weights(weights, p.size());
    double norm2 = 0.0;
    if (weights.empty()) {
        norm2 = static_cast<double>(p.size());
    } else {
        for (double c : weights) norm2 += c * c;
    }
    const double norm = std::sqrt(norm2);
    // Summing Φ⁻¹(p_i) and mapping back through Φ keeps small p-values exact.
    std::vector<double> terms;
    terms.reserve(p.size());
    bool zero = false;
    bool one = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) {
            zero = true;
        } else if (p[i] == 1.0) {
            one = true;
        } else {
            terms.push_back((weights.empty() ? 1.0 : weights[i]) * specfun::normal_quantile(p[i]));
        }
    }
    if (zero) return 0.0;
    if (one) return 1.0;
    return specfun::normal_cdf(sorted_sum(terms) / norm);
}

double fisher_pool(const PValues& p) {
    if (any_equal(p.values(), 0.0)) return 0.0;
    std::vector<double> terms;
    terms.reserve(p.size());
    for (double pi : p.values()) terms.push_back(-std::log(pi));
    const double s = sorted_sum(terms);
    return specfun::reg_gamma_upper(static_cast<double>(p.size()), s);
}

double pearson_pool(const PValues& p) {
    if (any_equal(p.values(), 1.0)) return 1.0;
    std::vector<double> terms;
    terms.reserve(p.size());
    for (double pi : p.values()) terms.push_back(-std::log1p(-pi));
    const double s = sorted_sum(terms);
    return specfun::reg_gamma_lower(static_cast<double>(p.size()), s);
}

double gamma_pool(const PValues& p, double shape, double scale) {
    if (!(shape > 0.0) || !std::isfinite(shape) || !(scale > 0.0) || !std::isfinite(scale)) {
        throw DomainError("gamma shape and scale must be positive and finite");
    }
    return gamma_family_pool(p, shape, std::log(scale));
}

double chi_pool(const PValues& p, double kappa) {
    if (!(kappa >= 0.0)) throw DomainError("kappa must be non-negative");
    if (kappa == 0.0) return tippett_pool(p);
    if (kappa == kInf) return stouffer_pool(p);
    return gamma_family_pool(p, 0.5 * kappa, std::log(2.0));
}

double hr_stat(std::span<const double> p, double w) {
    if (!(w >= 0.0 && w <= 1.0)) throw DomainError("w must lie in [0,1]");
    std::vector<double> log_p;
    std::vector<double> log_1mp;
    log_p.reserve(p.size());
    log_1mp.reserve(p.size());
    bool zero = false;
    bool one = false;
    for (double pi : p) {
        if (pi == 0.0) {
            zero = true;
        } else if (pi == 1.0) {
            one = true;
        } else {
            log_p.push_back(std::log(pi));
            log_1mp.push_back(std::log1p(-pi));
        }
    }
    if (zero && w > 0.0) return -kInf;
    if (one && w < 1.0) return kInf;
    return w * sorted_sum(log_p) - (1.0 - w) * sorted_sum(log_1mp);
}

double hr_pool(const PValues& p, double w, const NullQuantileTable& table) {
    const std::string expected = MethodSpec::hr(w).key();
    if (table.method() != expected || table.m() != p.size()) {
        throw DomainError("null table for " + table.method() + ", M=" + std::to_string(table.m()) +
                          " does not match " + expected + ", M=" + std::to_string(p.size()));
    }
    return table.lower_tail_pvalue(hr_stat(p.values(), w));
}

double pool(const MethodSpec& method, const PValues& p, const NullQuantileTable* table) {
    method.validate(p.size());
    switch (method.kind) {
        case MethodKind::order:
            return ord_pool(p, method.k);
        case MethodKind::stouffer:
            return stouffer_pool(p, method.weights);
        case MethodKind::fisher:
            return fisher_pool(p);
        case MethodKind::pearson:
            return pearson_pool(p);
        case MethodKind::gamma:
            return gamma_pool(p, method.shape, method.scale);
        case MethodKind::chi:
            return chi_pool(p, method.kappa);
        case MethodKind::hr:
            if (table == nullptr) throw DomainError("the hr method needs a simulated null table");
            return hr_pool(p, method.w, *table);
    }
    throw DomainError("unknown method");
}

}  // namespace poolcore
