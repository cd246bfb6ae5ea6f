#include "poolcore/null_table.hpp"

#include "poolcore/errors.hpp"
#include "poolcore/format.hpp"
#include "poolcore/parallel.hpp"
#include "poolcore/rng.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>

namespace poolcore {

namespace {

constexpr int kFormatVersion = 1;

template <class T>
T parse_number(const std::string& text, const char* what) {
    T value{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw DomainError(std::string("malformed ") + what + ": '" + text + "'");
    }
    return value;
}

}  // namespace

NullQuantileTable::NullQuantileTable(std::string method, std::size_t m, std::uint64_t seed, std::vector<double> stats)
    : method_(std::move(method)), m_(m), seed_(seed), sorted_(std::move(stats)) {
    std::sort(sorted_.begin(), sorted_.end());
}

double NullQuantileTable::lower_tail_pvalue(double stat) const {
    if (std::isnan(stat)) throw NumericalError("NaN statistic");
    const auto count = static_cast<double>(std::upper_bound(sorted_.begin(), sorted_.end(), stat) - sorted_.begin());
    return (1.0 + count) / (static_cast<double>(sorted_.size()) + 1.0);
}

double NullQuantileTable::quantile(double prob) const {
    if (sorted_.empty()) throw DomainError("empty null table");
    if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("quantile level must lie in [0,1]");
    const double h = prob * static_cast<double>(sorted_.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(h));
    if (i + 1 >= sorted_.size()) return sorted_.back();
    return sorted_[i] + (h - static_cast<double>(i)) * (sorted_[i + 1] - sorted_[i]);
}

void NullQuantileTable::write(std::ostream& out) const {
    out << "#method=" << method_ << '\n'
        << "#M=" << m_ << '\n'
        << "#n_sim=" << sorted_.size() << '\n'
        << "#seed=" << seed_ << '\n'
        << "#format=" << kFormatVersion << '\n';
    for (double v : sorted_) out << format_shortest(v) << '\n';
}

NullQuantileTable NullQuantileTable::read(std::istream& in) {
    std::string method;
    std::size_t m = 0;
    std::size_t n_sim = 0;
    std::uint64_t seed = 0;
    int format = 0;
    int seen = 0;
    std::vector<double> stats;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw DomainError("line " + std::to_string(line_no) + ": bad header");
            const std::string key = line.substr(1, eq - 1);
            const std::string value = line.substr(eq + 1);
            if (key == "method") {
                method = value;
            } else if (key == "M") {
                m = parse_number<std::size_t>(value, "M");
            } else if (key == "n_sim") {
                n_sim = parse_number<std::size_t>(value, "n_sim");
            } else if (key == "seed") {
                seed = parse_number<std::uint64_t>(value, "seed");
            } else if (key == "format") {
                format = parse_number<int>(value, "format");
            } else {
                throw DomainError("line " + std::to_string(line_no) + ": unknown header '" + key + "'");
            }
            ++seen;
            continue;
        }
        stats.push_back(parse_number<double>(line, "statistic"));
    }
    if (seen != 5 || format != kFormatVersion) throw DomainError("null table header incomplete or wrong format");
    if (stats.size() != n_sim) throw DomainError("null table holds " + std::to_string(stats.size()) +
                                                 " values, header says " + std::to_string(n_sim));
    if (!std::is_sorted(stats.begin(), stats.end())) throw DomainError("null table values are not ascending");
    return NullQuantileTable(std::move(method), m, seed, std::move(stats));
}

NullQuantileTable simulate_statistic_table(const std::string& method_key, std::size_t m, std::size_t n_sim,
                                           std::uint64_t seed, const VectorStatistic& stat, unsigned threads) {
    if (m < 1) throw DomainError("M must be at least 1");
    if (n_sim < 1000) throw DomainError("null tables need n_sim >= 1000");
    std::vector<double> stats(n_sim);
    const std::size_t blocks = (n_sim + kNullBlockSize - 1) / kNullBlockSize;
    parallel_for(blocks, threads, [&](std::size_t b) {
        Rng rng(derive_seed(seed, {b}));
        std::vector<double> u(m);
        const std::size_t end = std::min(n_sim, (b + 1) * kNullBlockSize);
        for (std::size_t r = b * kNullBlockSize; r < end; ++r) {
            for (double& x : u) x = uniform_open01(rng);
            stats[r] = stat(u);
        }
    });
    return NullQuantileTable(method_key, m, seed, std::move(stats));
}

NullQuantileTable simulate_null_table(const MethodSpec& method, std::size_t m, std::size_t n_sim, std::uint64_t seed,
                                      unsigned threads) {
    method.validate(m);
    if (method.kind != MethodKind::hr) {
        throw DomainError("method " + method.key() + " has a closed-form null; no table is needed");
    }
    const double w = method.w;
    return simulate_statistic_table(method.key(), m, n_sim, seed,
                                    [w](std::span<const double> p) { return hr_stat(p, w); }, threads);
}

std::filesystem::path null_table_cache_path(const std::filesystem::path& cache_dir, const std::string& method_key,
                                            std::size_t m, std::size_t n_sim, std::uint64_t seed) {
    std::string name;
    for (char c : method_key) {
        const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-';
        name += keep ? c : '_';
    }
    name += "_M" + std::to_string(m) + "_n" + std::to_string(n_sim) + "_s" + std::to_string(seed) + ".txt";
    return cache_dir / name;
}

NullQuantileTable load_or_simulate_table(const std::string& method_key, std::size_t m, std::size_t n_sim,
                                         std::uint64_t seed, const std::filesystem::path& cache_dir,
                                         const std::function<NullQuantileTable()>& simulate,
                                         const std::function<void(const std::string&)>& on_miss) {
    const auto path = null_table_cache_path(cache_dir, method_key, m, n_sim, seed);
    {
        std::ifstream in(path);
        if (in) {
            try {
                auto table = NullQuantileTable::read(in);
                if (table.method() == method_key && table.m() == m && table.n_sim() == n_sim &&
                    table.seed() == seed) {
                    return table;
                }
            } catch (const DomainError&) {
                // unreadable cache entry; regenerate below
            }
        }
    }
    if (on_miss) {
        on_miss("simulating null table " + method_key + " M=" + std::to_string(m) + " n_sim=" + std::to_string(n_sim));
    }
    auto table = simulate();

    std::error_code ec;
    std::filesystem::create_directories(cache_dir, ec);
    if (!ec) {
        auto tmp = path;
        tmp += ".tmp";
        {
            std::ofstream out(tmp);
            table.write(out);
        }
        std::filesystem::rename(tmp, path, ec);
    }
    return table;
}

NullQuantileTable load_or_simulate_null_table(const MethodSpec& method, std::size_t m, std::size_t n_sim,
                                              std::uint64_t seed, const std::filesystem::path& cache_dir,
                                              unsigned threads,
                                              const std::function<void(const std::string&)>& on_miss) {
    return load_or_simulate_table(
        method.key(), m, n_sim, seed, cache_dir,
        [&] { return simulate_null_table(method, m, n_sim, seed, threads); }, on_miss);
}

}  // namespace poolcore
