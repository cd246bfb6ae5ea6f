#pragma once

#include "poolcore/pooling.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace poolcore {

/// Simulated null distribution of a statistic without a closed-form null.
/// Reproducible from (method, M, n_sim, seed).
class NullQuantileTable {
public:
    NullQuantileTable() = default;
    NullQuantileTable(std::string method, std::size_t m, std::uint64_t seed, std::vector<double> stats);

    const std::string& method() const noexcept { return method_; }
    std::size_t m() const noexcept { return m_; }
    std::size_t n_sim() const noexcept { return sorted_.size(); }
    std::uint64_t seed() const noexcept { return seed_; }
    std::span<const double> sorted_stats() const noexcept { return sorted_; }

    /// (1 + #{null <= stat}) / (n_sim + 1); small statistics are evidence.
    double lower_tail_pvalue(double stat) const;
    /// Empirical quantile at level prob (type-7 interpolation).
    double quantile(double prob) const;

    void write(std::ostream& out) const;
    /// Throws DomainError on malformed content.
    static NullQuantileTable read(std::istream& in);

private:
    std::string method_;
    std::size_t m_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<double> sorted_;
};

/// Replicates per RNG block; each block owns the stream derive_seed(seed, {block}).
inline constexpr std::size_t kNullBlockSize = 1000;

using VectorStatistic = std::function<double(std::span<const double>)>;

/// n_sim iid-uniform vectors of length m fed through `stat`, sorted.
/// Identical output for any thread count.
NullQuantileTable simulate_statistic_table(const std::string& method_key, std::size_t m, std::size_t n_sim,
                                           std::uint64_t seed, const VectorStatistic& stat,
                                           unsigned threads = 0);

/// Null table of the statistic underlying `method` (hr only).
NullQuantileTable simulate_null_table(const MethodSpec& method, std::size_t m, std::size_t n_sim, std::uint64_t seed,
                                      unsigned threads = 0);

/// Loads the table keyed by (method_key, m, n_sim, seed) from `cache_dir`
/// when its header matches, otherwise calls `simulate` and writes the result.
/// `on_miss` is called before a regeneration. Cache write failures are ignored.
NullQuantileTable load_or_simulate_table(const std::string& method_key, std::size_t m, std::size_t n_sim,
                                         std::uint64_t seed, const std::filesystem::path& cache_dir,
                                         const std::function<NullQuantileTable()>& simulate,
                                         const std::function<void(const std::string&)>& on_miss = {});

/// load_or_simulate_table for the null of `method` (hr only).
NullQuantileTable load_or_simulate_null_table(const MethodSpec& method, std::size_t m, std::size_t n_sim,
                                              std::uint64_t seed, const std::filesystem::path& cache_dir,
                                              unsigned threads = 0,
                                              const std::function<void(const std::string&)>& on_miss = {});

std::filesystem::path null_table_cache_path(const std::filesystem::path& cache_dir, const std::string& method_key,
                                            std::size_t m, std::size_t n_sim, std::uint64_t seed);

}  // namespace poolcore
