#include "poolcore/simulation.hpp"

#include "poolcore/errors.hpp"
#include "poolcore/format.hpp"
#include "poolcore/parallel.hpp"
#include "poolcore/rng.hpp"
#include "poolcore/specfun.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace poolcore {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0,1)");
}

PowerEstimate finish(std::size_t hits, std::size_t n) {
    PowerEstimate e;
    e.n_sim = n;
    e.power = static_cast<double>(hits) / static_cast<double>(n);
    e.se = std::sqrt(e.power * (1.0 - e.power) / static_cast<double>(n));
    return e;
}

}  // namespace

std::vector<PowerEstimate> power_estimates(std::span<const MethodSpec> methods, const AlternativeSpec& spec,
                                           double alpha, std::size_t n_sim, const NullTableRefs& tables,
                                           std::uint64_t seed) {
    check_alpha(alpha);
    if (n_sim < 100) throw DomainError("power estimates need n_sim >= 100");
    spec.validate();
    if (!tables.empty() && tables.size() != methods.size()) {
        throw DomainError("null table list does not match the method list");
    }
    for (std::size_t j = 0; j < methods.size(); ++j) {
        methods[j].validate(spec.m);
        if (methods[j].needs_null_table() && (tables.empty() || tables[j] == nullptr)) {
            throw DomainError("method " + methods[j].key() + " needs a simulated null table");
        }
    }
    std::vector<std::size_t> hits(methods.size(), 0);
    Rng rng(seed);
    for (std::size_t r = 0; r < n_sim; ++r) {
        const PValues p = gen_h3(spec, rng);
        for (std::size_t j = 0; j < methods.size(); ++j) {
            const NullQuantileTable* table = tables.empty() ? nullptr : tables[j];
            if (pool(methods[j], p, table) <= alpha) ++hits[j];
        }
    }
    std::vector<PowerEstimate> out;
    out.reserve(methods.size());
    for (std::size_t h : hits) out.push_back(finish(h, n_sim));
    return out;
}

PowerEstimate power_estimate(const MethodSpec& method, const AlternativeSpec& spec, double alpha, std::size_t n_sim,
                             const NullQuantileTable* null_table, std::uint64_t seed) {
    const NullTableRefs tables{null_table};
    return power_estimates(std::span<const MethodSpec>(&method, 1), spec, alpha, n_sim, tables, seed).front();
}

std::uint64_t cell_seed(std::uint64_t master, double eta, double ln_divergence, double ln_w) {
    return derive_seed(master, {std::bit_cast<std::uint64_t>(eta), std::bit_cast<std::uint64_t>(ln_divergence),
                                std::bit_cast<std::uint64_t>(ln_w)});
}

std::size_t PowerGrid::index(std::size_t ie, std::size_t id, std::size_t iw, std::size_t im) const {
    return ((ie * ln_divergence.size() + id) * ln_w.size() + iw) * methods.size() + im;
}

PowerGrid power_surface(const std::vector<MethodSpec>& methods, const std::vector<double>& eta_grid,
                        const std::vector<double>& ln_divergence_grid, const std::vector<double>& ln_w_grid,
                        std::size_t m, double alpha, std::size_t n_sim, std::uint64_t seed,
                        const NullTableRefs& tables, unsigned threads) {
    if (methods.empty() || eta_grid.empty() || ln_divergence_grid.empty() || ln_w_grid.empty()) {
        throw DomainError("power surface grids and method list must be non-empty");
    }
    for (double lw : ln_w_grid) {
        if (!(lw <= 0.0)) throw DomainError("ln w must be <= 0");
    }
    PowerGrid grid;
    grid.eta = eta_grid;
    grid.ln_divergence = ln_divergence_grid;
    grid.ln_w = ln_w_grid;
    grid.methods = methods;
    grid.m = m;
    grid.alpha = alpha;
    grid.n_sim = n_sim;
    grid.seed = seed;
    grid.cells.resize(eta_grid.size() * ln_divergence_grid.size() * ln_w_grid.size() * methods.size());

    // Beta shapes depend on (D, w) only.
    const std::size_t nd = ln_divergence_grid.size();
    const std::size_t nw = ln_w_grid.size();
    std::vector<std::optional<divergence::BetaAlt>> alts(nd * nw);
    for (std::size_t id = 0; id < nd; ++id) {
        for (std::size_t iw = 0; iw < nw; ++iw) {
            const double w = std::exp(ln_w_grid[iw]);
            try {
                const double a = divergence::find_a(std::exp(ln_divergence_grid[id]), w);
                alts[id * nw + iw] = divergence::BetaAlt::from_a_w(a, w);
            } catch (const UnreachableDivergence&) {
                // left absent
            }
        }
    }

    const std::size_t n_cells = eta_grid.size() * nd * nw;
    parallel_for(n_cells, threads, [&](std::size_t c) {
        const std::size_t iw = c % nw;
        const std::size_t id = (c / nw) % nd;
        const std::size_t ie = c / (nw * nd);
        const auto& alt = alts[id * nw + iw];
        if (!alt) {
            for (std::size_t im = 0; im < methods.size(); ++im) {
                PowerCell& cell = grid.cells[grid.index(ie, id, iw, im)];
                cell.reachable = false;
                cell.estimate = {kNaN, kNaN, n_sim};
            }
            return;
        }
        AlternativeSpec spec{eta_grid[ie], *alt, m};
        const auto est = power_estimates(methods, spec, alpha, n_sim, tables,
                                         cell_seed(seed, eta_grid[ie], ln_divergence_grid[id], ln_w_grid[iw]));
        for (std::size_t im = 0; im < methods.size(); ++im) {
            grid.cells[grid.index(ie, id, iw, im)] = {true, est[im]};
        }
    });
    return grid;
}

Matrix gaussian_smooth(const Matrix& grid, double sigma_cells) {
    if (!(sigma_cells > 0.0) || !std::isfinite(sigma_cells)) throw DomainError("sigma must be positive");
    const double cutoff = 3.0 * sigma_cells;
    const auto radius = static_cast<std::ptrdiff_t>(std::floor(cutoff));
    Matrix out(grid.rows, grid.cols);
    const auto rows = static_cast<std::ptrdiff_t>(grid.rows);
    const auto cols = static_cast<std::ptrdiff_t>(grid.cols);
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        for (std::ptrdiff_t c = 0; c < cols; ++c) {
            if (std::isnan(grid(r, c))) {
                out(r, c) = kNaN;
                continue;
            }
            double num = 0.0;
            double den = 0.0;
            for (std::ptrdiff_t dr = -radius; dr <= radius; ++dr) {
                for (std::ptrdiff_t dc = -radius; dc <= radius; ++dc) {
                    const double d2 = static_cast<double>(dr * dr + dc * dc);
                    if (d2 > cutoff * cutoff) continue;
                    const std::ptrdiff_t rr = r + dr;
                    const std::ptrdiff_t cc = c + dc;
                    if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
                    const double v = grid(rr, cc);
                    if (std::isnan(v)) continue;
                    const double k = std::exp(-0.5 * d2 / (sigma_cells * sigma_cells));
                    num += k * v;
                    den += k;
                }
            }
            out(r, c) = num / den;
        }
    }
    return out;
}

double two_proportion_z(double p1, double p2, std::size_t n_sim) {
    const double pbar = 0.5 * (p1 + p2);
    const double v = 2.0 * pbar * (1.0 - pbar);
    if (!(v > 0.0)) return 0.0;
    return std::sqrt(static_cast<double>(n_sim)) * (p1 - p2) / std::sqrt(v);
}

std::vector<BoolMatrix> max_power_mask(const std::vector<Matrix>& powers, std::size_t n_sim, double confidence) {
    if (powers.empty()) return {};
    if (!(confidence > 0.0 && confidence < 1.0)) throw DomainError("confidence must lie in (0,1)");
    const std::size_t rows = powers.front().rows;
    const std::size_t cols = powers.front().cols;
    for (const auto& p : powers) {
        if (p.rows != rows || p.cols != cols) throw DomainError("power matrices differ in shape");
    }
    const double crit = specfun::normal_upper_quantile(0.5 * (1.0 - confidence));
    std::vector<BoolMatrix> masks(powers.size(), BoolMatrix(rows, cols));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            double best = -1.0;
            for (const auto& p : powers) {
                if (!std::isnan(p(r, c))) best = std::max(best, p(r, c));
            }
            if (best < 0.0) continue;
            for (std::size_t j = 0; j < powers.size(); ++j) {
                const double v = powers[j](r, c);
                if (std::isnan(v)) continue;
                masks[j].set(r, c, two_proportion_z(best, v, n_sim) < crit);
            }
        }
    }
    return masks;
}

BoolMatrix corner_mask(const std::vector<Matrix>& powers, double alpha, std::size_t n_sim, double confidence) {
    check_alpha(alpha);
    if (powers.empty()) return {};
    const double crit = specfun::normal_upper_quantile(0.5 * (1.0 - confidence));
    const std::size_t rows = powers.front().rows;
    const std::size_t cols = powers.front().cols;
    BoolMatrix mask(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            bool all_one = true;
            bool all_alpha = true;
            for (const auto& p : powers) {
                const double v = p(r, c);
                if (std::isnan(v)) {
                    all_one = all_alpha = false;
                    break;
                }
                all_one = all_one && std::fabs(two_proportion_z(1.0, v, n_sim)) < crit;
                all_alpha = all_alpha && std::fabs(two_proportion_z(v, alpha, n_sim)) < crit;
            }
            mask.set(r, c, all_one || all_alpha);
        }
    }
    return mask;
}

FrequencyMap alt_frequency_map(const std::vector<std::vector<BoolMatrix>>& masks_by_w, std::size_t method_index,
                               const std::vector<BoolMatrix>* corner_masks_by_w) {
    if (masks_by_w.empty()) throw DomainError("no w layers supplied");
    if (corner_masks_by_w && corner_masks_by_w->size() != masks_by_w.size()) {
        throw DomainError("corner masks do not match the w layers");
    }
    const auto& first = masks_by_w.front();
    if (method_index >= first.size()) throw DomainError("method index out of range");
    const std::size_t rows = first[method_index].rows;
    const std::size_t cols = first[method_index].cols;

    FrequencyMap out;
    out.counts = Matrix(rows, cols);
    out.masked = BoolMatrix(rows, cols, corner_masks_by_w != nullptr);
    for (std::size_t l = 0; l < masks_by_w.size(); ++l) {
        const auto& layer = masks_by_w[l];
        if (method_index >= layer.size()) throw DomainError("method index out of range");
        const BoolMatrix& mask = layer[method_index];
        if (mask.rows != rows || mask.cols != cols) throw DomainError("mask layers differ in shape");
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                const bool corner = corner_masks_by_w && (*corner_masks_by_w)[l](r, c);
                if (!corner) out.masked.set(r, c, false);
                if (!corner && mask(r, c)) out.counts(r, c) += 1.0;
            }
        }
    }
    out.eta_totals.assign(rows, 0.0);
    out.divergence_totals.assign(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            out.eta_totals[r] += out.counts(r, c);
            out.divergence_totals[c] += out.counts(r, c);
        }
    }
    return out;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    if (n == 0) return {};
    if (n == 1) return {lo};
    std::vector<double> v(n);
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + step * static_cast<double>(i);
    v.back() = hi;
    return v;
}

std::vector<double> default_ln_kappa_grid() { return linspace(-8.0, 8.0, 65); }

namespace {

void check_grid(std::span<const double> grid) {
    if (grid.empty()) throw DomainError("ln kappa grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i])) throw DomainError("ln kappa grid values must be finite");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("ln kappa grid must be strictly increasing");
    }
}

}  // namespace

double min_over_kappa(std::span<const double> p, std::span<const double> ln_kappa_grid) {
    const PValues pv(std::vector<double>(p.begin(), p.end()));
    double best = 1.0;
    for (double lk : ln_kappa_grid) best = std::min(best, chi_pool(pv, std::exp(lk)));
    return best;
}

KappaSweep kappa_sweep(const PValues& p, std::span<const double> ln_kappa_grid, const NullQuantileTable* null_refs) {
    check_grid(ln_kappa_grid);
    KappaSweep s;
    s.ln_kappa.assign(ln_kappa_grid.begin(), ln_kappa_grid.end());
    s.pooled_p.reserve(ln_kappa_grid.size());
    for (double lk : ln_kappa_grid) s.pooled_p.push_back(chi_pool(p, std::exp(lk)));
    s.index_min = static_cast<std::size_t>(std::min_element(s.pooled_p.begin(), s.pooled_p.end()) -
                                           s.pooled_p.begin());
    s.kappa_min = std::exp(s.ln_kappa[s.index_min]);
    s.p_min = s.pooled_p[s.index_min];
    if (null_refs) {
        if (null_refs->method() != min_kappa_key(ln_kappa_grid) || null_refs->m() != p.size()) {
            throw DomainError("null reference table " + null_refs->method() + " does not match this sweep");
        }
        s.null_ref_q05 = null_refs->quantile(0.05);
        s.null_ref_q01 = null_refs->quantile(0.01);
        s.null_ref_q001 = null_refs->quantile(0.001);
    }
    return s;
}

std::string min_kappa_key(std::span<const double> ln_kappa_grid) {
    std::uint64_t h = 0;
    for (double v : ln_kappa_grid) h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
    return "minchi(lnk=" + format_shortest(ln_kappa_grid.front()) + ":" + format_shortest(ln_kappa_grid.back()) +
           ":" + std::to_string(ln_kappa_grid.size()) + ",h=" + std::to_string(h % 1000000007ULL) + ")";
}

NullQuantileTable simulate_min_kappa_table(std::span<const double> ln_kappa_grid, std::size_t m, std::size_t n_sim,
                                           std::uint64_t seed, unsigned threads) {
    check_grid(ln_kappa_grid);
    const std::vector<double> grid(ln_kappa_grid.begin(), ln_kappa_grid.end());
    return simulate_statistic_table(
        min_kappa_key(grid), m, n_sim, seed, [&grid](std::span<const double> p) { return min_over_kappa(p, grid); },
        threads);
}

std::vector<std::size_t> select_tests(const PValues& p, double kappa_min, double eta_star) {
    if (!(eta_star > 0.0 && eta_star <= 1.0)) throw DomainError("eta* must lie in (0,1]");
    if (!(kappa_min > 0.0)) throw DomainError("kappa_min must be positive");
    const std::size_t m = p.size();
    const auto n_select = static_cast<std::size_t>(std::floor(static_cast<double>(m) * eta_star + 0.5));
    std::vector<double> transform(m);
    for (std::size_t i = 0; i < m; ++i) {
        transform[i] = std::isfinite(kappa_min) ? specfun::chi2_log_upper_quantile(p[i], kappa_min)
                                                : specfun::normal_upper_quantile(p[i]);
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (transform[a] != transform[b]) return transform[a] > transform[b];
        return p[a] < p[b];
    });
    order.resize(n_select);
    std::sort(order.begin(), order.end());
    return order;
}

}  // namespace poolcore
