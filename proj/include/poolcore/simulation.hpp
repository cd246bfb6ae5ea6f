#pragma once

// Monte Carlo power engine: power at one alternative, power surfaces over
// (eta, ln D, ln w), smoothing and max-power masks for the alternative
// atlas, the kappa sweep, and test-subset selection.

#include "poolcore/null_table.hpp"
#include "poolcore/pooling.hpp"
#include "poolcore/sampling.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace poolcore {

struct PowerEstimate {
    double power = 0.0;
    double se = 0.0;
    std::size_t n_sim = 0;
};

/// Null tables aligned with a method list; entries may be null for
/// closed-form methods.
using NullTableRefs = std::vector<const NullQuantileTable*>;

/// Proportion of n_sim vectors from `spec` with pooled p <= alpha.
PowerEstimate power_estimate(const MethodSpec& method, const AlternativeSpec& spec, double alpha, std::size_t n_sim,
                             const NullQuantileTable* null_table, std::uint64_t seed);

/// As power_estimate for several methods evaluated on the same vectors.
std::vector<PowerEstimate> power_estimates(std::span<const MethodSpec> methods, const AlternativeSpec& spec,
                                           double alpha, std::size_t n_sim, const NullTableRefs& tables,
                                           std::uint64_t seed);

/// Seed for the cell at (eta, ln D, ln w); depends on the values only.
std::uint64_t cell_seed(std::uint64_t master, double eta, double ln_divergence, double ln_w);

struct PowerCell {
    bool reachable = true;
    PowerEstimate estimate;
};

struct PowerGrid {
    std::vector<double> eta;
    std::vector<double> ln_divergence;
    std::vector<double> ln_w;
    std::vector<MethodSpec> methods;
    std::size_t m = 0;
    double alpha = 0.05;
    std::size_t n_sim = 0;
    std::uint64_t seed = 0;
    /// Row-major over (eta, ln D, ln w, method).
    std::vector<PowerCell> cells;

    std::size_t index(std::size_t ie, std::size_t id, std::size_t iw, std::size_t im) const;
    const PowerCell& at(std::size_t ie, std::size_t id, std::size_t iw, std::size_t im) const {
        return cells[index(ie, id, iw, im)];
    }
};

/// Per-cell power with per-cell seeds; identical for any thread count.
/// Cells whose (D, w) is unreachable are marked, not zeroed.
PowerGrid power_surface(const std::vector<MethodSpec>& methods, const std::vector<double>& eta_grid,
                        const std::vector<double>& ln_divergence_grid, const std::vector<double>& ln_w_grid,
                        std::size_t m, double alpha, std::size_t n_sim, std::uint64_t seed,
                        const NullTableRefs& tables = {}, unsigned threads = 0);

/// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct BoolMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<char> data;

    BoolMatrix() = default;
    BoolMatrix(std::size_t r, std::size_t c, bool fill = false) : rows(r), cols(c), data(r * c, fill) {}
    bool operator()(std::size_t r, std::size_t c) const { return data[r * cols + c] != 0; }
    void set(std::size_t r, std::size_t c, bool v) { data[r * cols + c] = v; }
};

/// Discrete Gaussian kernel truncated at radius 3σ; weights falling outside
/// the matrix are dropped and the rest renormalised. NaN cells are skipped.
Matrix gaussian_smooth(const Matrix& grid, double sigma_cells = 1.0);

/// Two-proportion z statistic √n (p1 - p2) / √(2 p̄ (1 - p̄)), 0 when p̄ is 0 or 1.
double two_proportion_z(double p1, double p2, std::size_t n_sim);

/// Flags, per cell, every method whose power is not significantly below the
/// cell maximum (two-sided test at `confidence`). NaN cells are never flagged.
std::vector<BoolMatrix> max_power_mask(const std::vector<Matrix>& powers, std::size_t n_sim,
                                       double confidence = 0.95);

/// Cells where every method is indistinguishable from power 1, or from alpha.
BoolMatrix corner_mask(const std::vector<Matrix>& powers, double alpha, std::size_t n_sim,
                       double confidence = 0.95);

struct FrequencyMap {
    Matrix counts;                   // (eta, ln D)
    std::vector<double> eta_totals;  // row sums
    std::vector<double> divergence_totals;  // column sums
    BoolMatrix masked;               // masked in every w layer
};

/// Counts, per (eta, ln D), the w layers in which method `method_index`
/// has maximal power. Cells masked in a layer's corner mask do not count.
FrequencyMap alt_frequency_map(const std::vector<std::vector<BoolMatrix>>& masks_by_w, std::size_t method_index,
                               const std::vector<BoolMatrix>* corner_masks_by_w = nullptr);

/// n evenly spaced values from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, std::size_t n);
/// 65 ln kappa values from -8 to 8.
std::vector<double> default_ln_kappa_grid();

struct KappaSweep {
    std::vector<double> ln_kappa;
    std::vector<double> pooled_p;
    std::size_t index_min = 0;
    double kappa_min = 0.0;
    double p_min = 1.0;
    std::optional<double> null_ref_q05;
    std::optional<double> null_ref_q01;
    std::optional<double> null_ref_q001;
};

/// Minimum of chi_pool(p, e^{l}) over the grid.
double min_over_kappa(std::span<const double> p, std::span<const double> ln_kappa_grid);

/// chi_pool across the grid; ties in the minimum go to the smallest kappa.
KappaSweep kappa_sweep(const PValues& p, std::span<const double> ln_kappa_grid,
                       const NullQuantileTable* null_refs = nullptr);

/// Null distribution of the min-over-kappa pooled p-value.
NullQuantileTable simulate_min_kappa_table(std::span<const double> ln_kappa_grid, std::size_t m, std::size_t n_sim,
                                           std::uint64_t seed, unsigned threads = 0);
std::string min_kappa_key(std::span<const double> ln_kappa_grid);

/// Indices of the round(M eta*) smallest p-values (largest chi transforms),
/// lower index first on ties, returned in ascending index order.
std::vector<std::size_t> select_tests(const PValues& p, double kappa_min, double eta_star);

}  // namespace poolcore
