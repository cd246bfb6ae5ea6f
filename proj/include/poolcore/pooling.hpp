#pragma once

// Pooled p-values: order statistics, the quantile-transformation family
// (Stouffer, Fisher, Pearson, gamma, chi-squared(kappa)) and the HR
// statistic with its simulation-backed p-value.
//
// Inputs of exactly 0 or 1 are legal. A quantile transform that hits +inf
// forces the pooled value to 0; -inf summands (with no +inf) force it to 1.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace poolcore {

/// Validated vector of M >= 1 probabilities.
class PValues {
public:
    explicit PValues(std::vector<double> values);

    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    const std::vector<double>& vector() const noexcept { return values_; }

private:
    std::vector<double> values_;
};

enum class MethodKind { order, stouffer, fisher, pearson, gamma, chi, hr };

/// Tagged description of a pooling method and its parameters.
struct MethodSpec {
    MethodKind kind = MethodKind::fisher;
    int k = 1;             // order statistic index
    double kappa = 2.0;    // chi degrees of freedom
    double shape = 1.0;    // gamma shape
    double scale = 2.0;    // gamma scale
    double w = 1.0;        // HR mixing weight
    std::vector<double> weights;  // optional c_i, quantile kinds

    static MethodSpec order(int k);
    static MethodSpec tippett() { return order(1); }
    static MethodSpec stouffer(std::vector<double> weights = {});
    static MethodSpec fisher();
    static MethodSpec pearson();
    static MethodSpec gamma(double shape, double scale);
    static MethodSpec chi(double kappa);
    static MethodSpec hr(double w);

    /// Canonical text form, e.g. "chi(kappa=2)". Also the null-table cache key.
    std::string key() const;
    /// The parameter reported in CSV output (k, kappa, shape, w, or NaN).
    double parameter() const;
    bool needs_null_table() const noexcept { return kind == MethodKind::hr; }

    /// Throws DomainError when the spec is inconsistent with M inputs.
    void validate(std::size_t m) const;
};

double ord_pool(const PValues& p, int k);
double tippett_pool(const PValues& p);

/// Generic quantile pool 1 - F_M(Σ c_i F⁻¹(1 - p_i)).
/// `upper_quantile(p)` must return F⁻¹(1 - p) and `sum_sf(x)` must return 1 - F_M(x).
double quantile_pool(const PValues& p, const std::function<double(double)>& upper_quantile,
                     const std::function<double(double)>& sum_sf, std::span<const double> weights = {});

double stouffer_pool(const PValues& p, std::span<const double> weights = {});
double fisher_pool(const PValues& p);
double pearson_pool(const PValues& p);
double gamma_pool(const PValues& p, double shape, double scale);
/// kappa = 0 gives Tippett and kappa = +inf gives Stouffer, the two limits.
double chi_pool(const PValues& p, double kappa);

/// w Σ ln p_i - (1 - w) Σ ln(1 - p_i); small values are evidence against H0.
double hr_stat(std::span<const double> p, double w);

class NullQuantileTable;

double hr_pool(const PValues& p, double w, const NullQuantileTable& table);

/// Dispatches on the method kind. `table` is required for hr only.
double pool(const MethodSpec& method, const PValues& p, const NullQuantileTable* table = nullptr);

}  // namespace poolcore
