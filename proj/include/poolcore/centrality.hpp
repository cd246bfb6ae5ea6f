#pragma once

// Central and marginal rejection levels and the centrality quotient.
//
// p_c is the largest common value all M p-values can take while the pool
// still rejects; p_r is the largest single p-value that rejects when every
// other input sits at b (b = 1 by default). q = (p_c - p_r) / p_c.

#include "poolcore/pooling.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>

namespace poolcore {

using PoolFn = std::function<double(const PValues&)>;

inline constexpr double kLevelTol = 1e-8;

struct RejectionProfile {
    double p_c = 0.0;
    std::optional<double> p_r;  // absent when one test alone can never reject
    double alpha = 0.05;
    std::size_t m = 0;
    std::optional<double> quotient;  // absent with p_r, or when p_c = 0

    static RejectionProfile make(double p_c, std::optional<double> p_r, double alpha, std::size_t m);
};

/// sup{p : pool(p, ..., p) <= alpha}. Throws NoRejectionRegion when even
/// p = 0 does not reject.
double central_level_generic(const PoolFn& pool_fn, std::size_t m, double alpha, double tol = kLevelTol);

/// sup{p in [0, b] : pool(p, b, ..., b) <= alpha}, or nullopt when p = 0
/// does not reject.
std::optional<double> marginal_level_generic(const PoolFn& pool_fn, std::size_t m, double alpha, double b = 1.0,
                                             double tol = kLevelTol);

/// Central level of a quantile pool: 1 - F(F_M⁻¹(1 - alpha) / Σ c_i).
/// `sf` is 1 - F and `sum_upper_quantile(alpha)` is F_M⁻¹(1 - alpha).
double quantile_closed_pc(const std::function<double(double)>& sf,
                          const std::function<double(double)>& sum_upper_quantile, std::span<const double> weights,
                          std::size_t m, double alpha);

double chi_pc(double kappa, std::size_t m, double alpha);
double chi_pr(double kappa, std::size_t m, double alpha);
double chi_q(double kappa, std::size_t m, double alpha);

/// kappa with |chi_q(kappa) - target_q| <= 1e-6, found on ln kappa in [-20, 20].
/// target_q = 0 returns 0 (Tippett) and target_q = 1 returns +inf (Stouffer).
double chi_kappa(double target_q, std::size_t m, double alpha);

/// Pool function for `method`; `table` is needed for hr.
PoolFn make_pool_fn(const MethodSpec& method, const NullQuantileTable* table = nullptr);

RejectionProfile rejection_profile_generic(const PoolFn& pool_fn, std::size_t m, double alpha, double b = 1.0,
                                           double tol = kLevelTol);

/// Closed-form profile at b = 1 when one exists for the method, else nullopt.
std::optional<RejectionProfile> rejection_profile_closed(const MethodSpec& method, std::size_t m, double alpha);

}  // namespace poolcore
