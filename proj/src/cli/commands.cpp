#include "cli/commands.hpp"

#include "cli/input.hpp"
#include "poolcore/centrality.hpp"
#include "poolcore/divergence.hpp"
#include "poolcore/errors.hpp"
#include "poolcore/format.hpp"
#include "poolcore/null_table.hpp"
#include "poolcore/parallel.hpp"
#include "poolcore/pooling.hpp"
#include "poolcore/report.hpp"
#include "poolcore/sampling.hpp"
#include "poolcore/simulation.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

namespace poolcore::cli {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Options {
    std::string input;
    std::string values;
    std::vector<std::string> methods;
    std::optional<std::string> kappa;
    std::optional<std::string> ln_kappa;
    std::optional<std::string> w;
    std::optional<std::string> ln_w;
    std::optional<std::string> k;
    std::optional<std::string> theta;
    double alpha = 0.05;
    std::optional<std::string> m;
    std::optional<std::string> eta;
    std::optional<std::string> divergence;
    std::optional<std::string> ln_divergence;
    std::optional<std::string> q;
    std::optional<double> a;
    std::optional<double> b;
    double level_b = 1.0;
    std::optional<std::size_t> n_sim;
    std::size_t null_n_sim = 100000;
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::string cache_dir;
    std::string out;
    std::string format = "csv";
    std::string table = "all";
    std::optional<std::size_t> reps;
    std::size_t count = 1;
    double sigma = 1.0;
    double confidence = 0.95;
    double tol = kLevelTol;
    std::string svg;
    bool no_null_refs = false;
};

/// Output assembled in memory and released only on success.
class Output {
public:
    Output(const std::string& command, const std::string& format) : format_(format) {
        buf_ << "# poolcore " << command << '\n';
    }

    void config(const std::string& key, const std::string& value) { buf_ << "# " << key << '=' << value << '\n'; }
    void config(const std::string& key, double value) {
        if (value == std::floor(value) && std::fabs(value) < 1e15) {
            config(key, std::to_string(static_cast<long long>(value)));
        } else {
            config(key, format_shortest(value));
        }
    }

    void section(const std::string& name) {
        if (sections_++ > 0) buf_ << '\n';
        buf_ << "# " << name << '\n';
    }

    void table(const report::Table& t) {
        if (format_ == "summary") {
            t.write_summary(buf_);
        } else {
            t.write_csv(buf_);
        }
    }

    std::ostream& raw() { return buf_; }
    bool summary() const { return format_ == "summary"; }
    std::string str() const { return buf_.str(); }

private:
    std::string format_;
    std::ostringstream buf_;
    int sections_ = 0;
};

struct Context {
    const Options& opts;
    std::ostream& err;

    void progress(const std::string& msg) const { err << "poolcore: " << msg << '\n'; }

    std::filesystem::path cache_dir() const {
        if (!opts.cache_dir.empty()) return opts.cache_dir;
        if (const char* env = std::getenv("POOLCORE_CACHE_DIR"); env && *env) return env;
        return ".poolcache";
    }
};

double single_value(const std::optional<std::string>& text, double fallback, const std::string& what) {
    if (!text) return fallback;
    const auto v = parse_number_list(*text, what);
    if (v.size() != 1) throw InputError(what + " takes a single value");
    return v.front();
}

std::vector<double> list_or(const std::optional<std::string>& text, const std::string& fallback,
                            const std::string& what) {
    return parse_number_list(text ? *text : fallback, what);
}

std::size_t to_count(double v, const std::string& what) {
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e9) throw InputError(what + " must be a positive integer");
    return static_cast<std::size_t>(v);
}

std::string join_keys(const std::vector<MethodSpec>& methods) {
    std::string s;
    for (std::size_t i = 0; i < methods.size(); ++i) s += (i ? " " : "") + methods[i].key();
    return s;
}

std::vector<std::string> split_colon(const std::string& token) {
    std::vector<std::string> parts;
    std::string part;
    std::istringstream in(token);
    while (std::getline(in, part, ':')) parts.push_back(part);
    return parts;
}

/// Expands method tokens. A token is a name optionally followed by inline
/// parameters ("chi:2", "hr:0.5", "order:3", "gamma:1:2"); bare names take
/// their parameters from the shared flags. `hr_from_flag` controls whether
/// bare "hr" reads --w.
std::vector<MethodSpec> build_methods(const Options& o, const std::vector<std::string>& fallback,
                                      bool hr_from_flag) {
    const auto& tokens = o.methods.empty() ? fallback : o.methods;
    std::vector<MethodSpec> out;
    for (const auto& token : tokens) {
        const auto parts = split_colon(token);
        const std::string& name = parts.front();
        auto arg = [&](std::size_t i) { return parse_double(parts.at(i), name + " parameter"); };
        auto expect = [&](std::size_t max_parts) {
            if (parts.size() > max_parts) throw InputError("too many parameters in method '" + token + "'");
        };
        if (name == "tippett") {
            expect(1);
            out.push_back(MethodSpec::tippett());
        } else if (name == "order") {
            expect(2);
            const double k = parts.size() > 1 ? arg(1) : single_value(o.k, 1.0, "--k");
            if (k != std::floor(k) || k < 1 || k > 1e9) throw InputError("order k must be a positive integer");
            out.push_back(MethodSpec::order(static_cast<int>(k)));
        } else if (name == "stouffer") {
            expect(1);
            out.push_back(MethodSpec::stouffer());
        } else if (name == "fisher") {
            expect(1);
            out.push_back(MethodSpec::fisher());
        } else if (name == "pearson") {
            expect(1);
            out.push_back(MethodSpec::pearson());
        } else if (name == "gamma") {
            expect(3);
            const double shape = parts.size() > 1 ? arg(1) : single_value(o.k, 1.0, "--k");
            const double scale = parts.size() > 2 ? arg(2) : single_value(o.theta, 2.0, "--theta");
            out.push_back(MethodSpec::gamma(shape, scale));
        } else if (name == "chi") {
            expect(2);
            if (parts.size() > 1) {
                out.push_back(MethodSpec::chi(arg(1)));
            } else if (o.ln_kappa) {
                for (double lk : parse_number_list(*o.ln_kappa, "--ln-kappa")) {
                    out.push_back(MethodSpec::chi(std::exp(lk)));
                }
            } else {
                for (double kappa : list_or(o.kappa, "2", "--kappa")) out.push_back(MethodSpec::chi(kappa));
            }
        } else if (name == "hr") {
            expect(2);
            if (parts.size() > 1) {
                out.push_back(MethodSpec::hr(arg(1)));
            } else if (hr_from_flag) {
                for (double w : list_or(o.w, "1", "--w")) out.push_back(MethodSpec::hr(w));
            } else {
                throw InputError("give the hr weight inline here, e.g. hr:0.5 (--w sets the alternative)");
            }
        } else {
            throw InputError("unknown method '" + name +
                             "' (expected tippett, order, stouffer, fisher, pearson, gamma, chi or hr)");
        }
    }
    for (const auto& m : out) {
        if (m.kind == MethodKind::chi && !(m.kappa >= 0.0)) throw InputError("kappa must be non-negative");
        if (m.kind == MethodKind::hr && !(m.w >= 0.0 && m.w <= 1.0)) throw InputError("hr w must lie in [0,1]");
    }
    return out;
}

std::vector<double> load_input(const Options& o) {
    if (!o.values.empty() && !o.input.empty()) throw InputError("give either an input file or --values, not both");
    if (!o.values.empty()) {
        std::istringstream in(o.values);
        return parse_pvalues(in, "--values");
    }
    if (o.input.empty()) throw InputError("no input: pass a file path, '-' for stdin, or --values");
    return read_pvalues(o.input);
}

/// Null tables for the hr entries of `methods`; other entries stay null.
struct TableSet {
    std::vector<std::unique_ptr<NullQuantileTable>> owned;
    NullTableRefs refs;
};

TableSet null_tables_for(const std::vector<MethodSpec>& methods, std::size_t m, const Context& ctx) {
    TableSet set;
    for (const auto& method : methods) {
        if (!method.needs_null_table()) {
            set.refs.push_back(nullptr);
            continue;
        }
        set.owned.push_back(std::make_unique<NullQuantileTable>(
            load_or_simulate_null_table(method, m, ctx.opts.null_n_sim, ctx.opts.seed, ctx.cache_dir(),
                                        ctx.opts.threads, [&](const std::string& msg) { ctx.progress(msg); })));
        set.refs.push_back(set.owned.back().get());
    }
    return set;
}

divergence::BetaAlt alternative_from_options(const Options& o) {
    if (o.a) {
        double b = 1.0;
        if (o.b) {
            b = *o.b;
        } else if (o.w) {
            const double w = single_value(o.w, 1.0, "--w");
            return divergence::BetaAlt::from_a_w(*o.a, w);
        }
        return divergence::BetaAlt::from_shapes(*o.a, b);
    }
    if (o.b) throw InputError("--b needs --a");
    if (o.divergence) {
        const double d = single_value(o.divergence, 0.0, "--divergence");
        const double w = single_value(o.w, 1.0, "--w");
        return divergence::BetaAlt::from_a_w(divergence::find_a(d, w), w);
    }
    return divergence::BetaAlt::from_shapes(1.0, 1.0);
}

void echo_alternative(Output& out, const divergence::BetaAlt& alt) {
    out.config("a", alt.a);
    out.config("b", alt.b);
    out.config("divergence", alt.divergence);
}

report::Cell optional_cell(const std::optional<double>& v) {
    if (v) return *v;
    return std::string("absent");
}

// ---------------------------------------------------------------- commands

void cmd_pool(const Context& ctx, Output& out) {
    const Options& o = ctx.opts;
    const PValues p(load_input(o));
    const auto methods = build_methods(o, {"fisher"}, true);
    for (const auto& m : methods) m.validate(p.size());
    const auto tables = null_tables_for(methods, p.size(), ctx);
    out.config("M", static_cast<double>(p.size()));
    out.config("methods", join_keys(methods));
    out.config("null_n_sim", static_cast<double>(o.null_n_sim));
    out.config("seed", std::to_string(o.seed));
    report::Table t({"method", "parameter", "pooled_p"});
    for (std::size_t i = 0; i < methods.size(); ++i) {
        const double param = methods[i].parameter();
        t.add_row({methods[i].key(), std::isnan(param) ? report::Cell(std::string()) : report::Cell(param),
                   pool(methods[i], p, tables.refs[i])});
    }
    out.table(t);
}

void cmd_rejection_levels(const Context& ctx, Output& out) {
    const Options& o = ctx.opts;
    const std::size_t m = to_count(single_value(o.m, 2.0, "--m"), "--m");
    const auto methods = build_methods(o, {"fisher"}, true);
    for (const auto& method : methods) method.validate(m);
    const auto tables = null_tables_for(methods, m, ctx);
    out.config("M", static_cast<double>(m));
    out.config("alpha", o.alpha);
    out.config("b", o.level_b);
    out.config("tol", o.tol);
    out.config("methods", join_keys(methods));
    report::Table t({"method", "M", "alpha", "b", "p_c", "p_r", "quotient", "p_c_generic", "p_r_generic",
                     "quotient_generic", "max_abs_diff", "agreement"});
    for (std::size_t i = 0; i < methods.size(); ++i) {
        const auto generic = rejection_profile_generic(make_pool_fn(methods[i], tables.refs[i]), m, o.alpha,
                                                       o.level_b, o.tol);
        std::optional<RejectionProfile> closed;
        if (o.level_b == 1.0) closed = rejection_profile_closed(methods[i], m, o.alpha);
        report::Cell pc = std::string("none");
        report::Cell pr = std::string("none");
        report::Cell qc = std::string("none");
        report::Cell diff = std::string("n/a");
        std::string agreement = "n/a";
        if (closed) {
            pc = closed->p_c;
            pr = optional_cell(closed->p_r);
            qc = optional_cell(closed->quotient);
            double d = std::fabs(closed->p_c - generic.p_c);
            if (closed->p_r.has_value() != generic.p_r.has_value()) {
                d = kInf;
            } else if (closed->p_r) {
                d = std::max(d, std::fabs(*closed->p_r - *generic.p_r));
            }
            diff = d;
            agreement = d <= 1e-6 ? "ok" : "DISAGREE";
            if (d > 1e-6) ctx.progress("closed form and root-found levels disagree for " + methods[i].key());
        }
        t.add_row({methods[i].key(), static_cast<long long>(m), o.alpha, o.level_b, pc, pr, qc, generic.p_c,
                   optional_cell(generic.p_r), optional_cell(generic.quotient), diff, agreement});
    }
    out.table(t);
}

report::Table kappa_table(const std::vector<double>& ms, const std::vector<double>& qs, double alpha) {
    report::Table t({"M", "q", "kappa", "log10_kappa", "note"});
    for (double mv : ms) {
        const std::size_t m = to_count(mv, "M");
        for (double q : qs) {
            const double kappa = chi_kappa(q, m, alpha);
            std::string note;
            if (q == 0.0) note = "use tippett";
            if (q == 1.0) note = "use stouffer";
            t.add_row({static_cast<long long>(m), q, kappa, std::log10(kappa), note});
        }
    }
    return t;
}

const char* kTable2M = "2,5,20,100,500,2000,10000";
const char* kTable2Q = "0.1:0.9:9";

void cmd_kappa(const Context& ctx, Output& out) {
    const Options& o = ctx.opts;
    const auto ms = list_or(o.m, kTable2M, "--m");
    const auto qs = list_or(o.q, kTable2Q, "--q");
    out.config("alpha", o.alpha);
    out.config("M", o.m ? *o.m : kTable2M);
    out.config("q", o.q ? *o.q : kTable2Q);
    out.table(kappa_table(ms, qs, o.alpha));
}

void cmd_q_table(const Context& ctx, Output& out) {
    const Options& o = ctx.opts;
    if (o.table != "1" && o.table != "2" && o.table != "all") throw InputError("--table must be 1, 2 or all");
    out.config("alpha", o.alpha);
    out.config("table", o.table);
    if (o.table != "2") {
        const auto ms = list_or(o.m, "2,5,10,20", "--m");
        out.config("M", o.m ? *o.m : "2,5,10,20");
        out.config("null_n_sim", static_cast<double>(o.null_n_sim));
        out.config("seed", std::to_string(o.seed));
        const std::vector<MethodSpec> methods{MethodSpec::tippett(), MethodSpec::chi(1.0), MethodSpec::stouffer(),
                                              MethodSpec::fisher(),  MethodSpec::hr(std::exp(-6.0)),
                                              MethodSpec::hr(std::exp(-3.0)), MethodSpec::hr(1.0)};
        report::Table t({"method", "M", "p_c", "p_r", "quotient", "source"});
        for (double mv : ms) {
            const std::size_t m = to_count(mv, "M");
            const auto tables = null_tables_for(methods, m, ctx);
            for (std::size_t i = 0; i < methods.size(); ++i) {
                auto profile = rejection_profile_closed(methods[i], m, o.alpha);
                std::string source = "closed";
                if (!profile) {
                    profile = rejection_profile_generic(make_pool_fn(methods[i], tables.refs[i]), m, o.alpha);
                    source = "simulated";
                }
                t.add_row({methods[i].key(), static_cast<long long>(m), profile->p_c, optional_cell(profile->p_r),
                           optional_cell(profile->quotient), source});
            }
        }
        out.section("centrality quotients");
        out.table(t);
    }
    if (o.table != "1") {
        out.section("log10 kappa by M and target quotient");
        out.table(kappa_table(parse_number_list(kTable2M, "M"), parse_number_list(kTable2Q, "q"), o.alpha));
    }
}

std::vector<double> ln_w_grid(const Options& o, const std::string& fallback_ln) {
    if (o.w && o.ln_w) throw InputError("give either --w or --ln-w");
    if (o.w) {
        std::vector<double> out;
        for (double w : parse_number_list(*o.w, "--w")) {
            if (!(w > 0.0 && w <= 1.0)) throw InputError("--w values must lie in (0,1]");
            out.push_back(std::log(w));
        }
        return out;
    }
    return list_or(o.ln_w, fallback_ln, "--ln-w");
}

std::vector<double> ln_divergence_grid(const Options& o, const std::string& fallback_ln) {
    if (o.divergence && o.ln_divergence) throw InputError("give either --divergence or --ln-divergence");
    if (o.divergence) {
        std::vector<double> out;
        for (double d : parse_number_list(*o.divergence, "--divergence")) {
            if (!(d >= 0.0)) throw InputError("--divergence values must be non-negative");
            out.push_back(std::log(d));
        }
        return out;
    }
    return list_or(o.ln_divergence, fallback_ln, "--ln-divergence");
}

void check_eta(const std::vector<double>& etas) {
    for (double e : etas) {
        if (!(e >= 0.0 && e <= 1.0)) throw InputError("--eta values must lie in [0,1]");
    }
}

void cmd_power(const Context& ctx, Output& out) {
    const Options& o = ctx.opts;
    const std::size_t m = to_count(single_value(o.m, 10.0, "--m"), "--m");
    const std::size_t n_sim = o.n_sim.value_or(2000);
    const auto methods = build_methods(o, {"chi"}, false);
    for (const auto& method : methods) method.validate(m);
    const auto etas = list_or(o.eta, "1", "--eta");
    check_eta(etas);
    const auto lnd = ln_divergence_grid(o, "1");
    const auto lnw = ln_w_grid(o, "0");
    const auto tables = null_tables_for(methods, m, ctx);
    out.config("M", static_cast<double>(m));
    out.config("alpha", o.alpha);
    out.config("n_sim", static_cast<double>(n_sim));
    out.config("seed", std::to_string(o.seed));
    out.config("methods", join_keys(methods));
    const auto grid = power_surface(methods, etas, lnd, lnw, m, o.alpha, n_sim, o.seed, tables.refs, o.threads);
    std::size_t unreachable = 0;
    for (const auto& c : grid.cells) unreachable += c.reachable ? 0 : 1;
    if (unreachable > 0) ctx.progress(std::to_string(unreachable) + " cells have an unreachable (D, w) and are absent");
    out.table(report::power_grid_table(grid));
}

void cmd_atlas(const Context& ctx, Output& out) {
    const Options& o = ctx.opts;
    const std::size_t m = to_count(single_value(o.m, 10.0, "--m"), "--m");
    const std::size_t n_sim = o.n_sim.value_or(2000);
    Options with_grid = o;
    if (!with_grid.ln_kappa && !with_grid.kappa) with_grid.ln_kappa = "-8:8:9";
    const auto methods = build_methods(with_grid, {"chi"}, false);
    for (const auto& method : methods) method.validate(m);
    const auto etas = list_or(o.eta, "0.1:1:10", "--eta");
    check_eta(etas);
    const auto lnd = ln_divergence_grid(o, "-3:3:7");
    const auto lnw = ln_w_grid(o, "-6:0:4");
    const auto tables = null_tables_for(methods, m, ctx);
    out.config("M", static_cast<double>(m));
    out.config("alpha", o.alpha);
    out.config("n_sim", static_cast<double>(n_sim));
    out.config("seed", std::to_string(o.seed));
    out.config("sigma", o.sigma);
    out.config("confidence", o.confidence);
    out.config("methods", join_keys(methods));

    const auto grid = power_surface(methods, etas, lnd, lnw, m, o.alpha, n_sim, o.seed, tables.refs, o.threads);
    std::vector<std::vector<BoolMatrix>> masks_by_w;
    std::vector<BoolMatrix> corners;
    for (std::size_t iw = 0; iw < lnw.size(); ++iw) {
        std::vector<Matrix> smoothed;
        for (std::size_t im = 0; im < methods.size(); ++im) {
            Matrix raw(etas.size(), lnd.size());
            for (std::size_t ie = 0; ie < etas.size(); ++ie) {
                for (std::size_t id = 0; id < lnd.size(); ++id) {
                    const auto& cell = grid.at(ie, id, iw, im);
                    raw(ie, id) = cell.reachable ? cell.estimate.power : std::nan("");
                }
            }
            smoothed.push_back(gaussian_smooth(raw, o.sigma));
        }
        masks_by_w.push_back(max_power_mask(smoothed, n_sim, o.confidence));
        corners.push_back(corner_mask(smoothed, o.alpha, n_sim, o.confidence));
    }
    for (std::size_t im = 0; im < methods.size(); ++im) {
        const auto map = alt_frequency_map(masks_by_w, im, &corners);
        out.section("max-power frequency " + methods[im].key());
        out.table(report::frequency_table(map, etas, lnd));
        if (!o.svg.empty()) {
            const std::string path = o.svg + "_" + std::to_string(im) + ".svg";
            std::ofstream svg(path);
            if (!svg) throw InputError("cannot write '" + path + "'");
            report::write_svg_heatmap(svg, map.counts, etas, lnd, methods[im].key());
        }
    }
}

NullQuantileTable sweep_refs(const Context& ctx, const std::vector<double>& grid, std::size_t m) {
    const Options& o = ctx.opts;
    return load_or_simulate_table(
        min_kappa_key(grid), m, o.null_n_sim, o.seed, ctx.cache_dir(),
        [&] { return simulate_min_kappa_table(grid, m, o.null_n_sim, o.seed, o.threads); },
        [&](const std::string& msg) { ctx.progress(msg); });
}

double quantile_of(std::vector<double> v, double prob) {
    std::sort(v.begin(), v.end());
    const double h = prob * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(h));
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (h - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

void cmd_sweep(const Context& ctx, Output& out) {
    const Options& o = ctx.opts;
    const auto grid = list_or(o.ln_kappa, "-8:8:65", "--ln-kappa");
    out.config("ln_kappa", o.ln_kappa ? *o.ln_kappa : "-8:8:65");
    if (!o.reps) {
        const PValues p(load_input(o));
        out.config("M", static_cast<double>(p.size()));
        std::optional<NullQuantileTable> refs;
        if (!o.no_null_refs) {
            out.config("null_n_sim", static_cast<double>(o.null_n_sim));
            out.config("seed", std::to_string(o.seed));
            refs = sweep_refs(ctx, grid, p.size());
        }
        const auto sweep = kappa_sweep(p, grid, refs ? &*refs : nullptr);
        out.section("sweep");
        out.table(report::sweep_table(sweep));
        out.section("summary");
        out.table(report::sweep_summary_table(sweep));
        return;
    }

    const std::size_t reps = *o.reps;
    if (reps < 1) throw InputError("--reps must be positive");
    const std::size_t m = to_count(single_value(o.m, 100.0, "--m"), "--m");
    const double eta = single_value(o.eta, 1.0, "--eta");
    check_eta({eta});
    const auto alt = alternative_from_options(o);
    out.config("M", static_cast<double>(m));
    out.config("reps", static_cast<double>(reps));
    out.config("eta", eta);
    echo_alternative(out, alt);
    out.config("seed", std::to_string(o.seed));
    std::optional<NullQuantileTable> refs;
    if (!o.no_null_refs) {
        out.config("null_n_sim", static_cast<double>(o.null_n_sim));
        refs = sweep_refs(ctx, grid, m);
    }
    const AlternativeSpec spec{eta, alt, m};
    std::vector<KappaSweep> sweeps(reps);
    parallel_for(reps, o.threads, [&](std::size_t r) {
        Rng rng(derive_seed(o.seed, {r}));
        sweeps[r] = kappa_sweep(gen_h3(spec, rng), grid, refs ? &*refs : nullptr);
    });
    report::Table curve({"ln_kappa", "median_p", "q05_p", "q95_p"});
    for (std::size_t j = 0; j < grid.size(); ++j) {
        std::vector<double> col(reps);
        for (std::size_t r = 0; r < reps; ++r) col[r] = sweeps[r].pooled_p[j];
        curve.add_row({grid[j], quantile_of(col, 0.5), quantile_of(col, 0.05), quantile_of(col, 0.95)});
    }
    std::vector<double> ln_min(reps);
    std::vector<std::size_t> hits(grid.size(), 0);
    std::size_t above = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        ln_min[r] = grid[sweeps[r].index_min];
        ++hits[sweeps[r].index_min];
        if (refs && sweeps[r].p_min > *sweeps[r].null_ref_q05) ++above;
    }
    const std::size_t mode = static_cast<std::size_t>(std::max_element(hits.begin(), hits.end()) - hits.begin());
    report::Table summary({"key", "value"});
    summary.add_row({std::string("median_ln_kappa_min"), quantile_of(ln_min, 0.5)});
    summary.add_row({std::string("mode_ln_kappa_min"), grid[mode]});
    if (refs) {
        summary.add_row({std::string("null_ref_q05"), refs->quantile(0.05)});
        summary.add_row({std::string("null_ref_q01"), refs->quantile(0.01)});
        summary.add_row({std::string("null_ref_q001"), refs->quantile(0.001)});
        summary.add_row({std::string("fraction_p_min_above_q05"),
                         static_cast<double>(above) / static_cast<double>(reps)});
    }
    out.section("median curve");
    out.table(curve);
    out.section("summary");
    out.table(summary);
}

void cmd_select(const Context& ctx, Output& out) {
    const Options& o = ctx.opts;
    const PValues p(load_input(o));
    if (!o.eta) throw InputError("select needs --eta (the share of tests to keep)");
    const double eta_star = single_value(o.eta, 1.0, "--eta");
    double kappa = 0.0;
    if (o.kappa) {
        kappa = single_value(o.kappa, 2.0, "--kappa");
    } else {
        kappa = kappa_sweep(p, default_ln_kappa_grid()).kappa_min;
    }
    out.config("M", static_cast<double>(p.size()));
    out.config("eta", eta_star);
    out.config("kappa_min", kappa);
    report::Table t({"index", "p_value"});
    for (std::size_t i : select_tests(p, kappa, eta_star)) t.add_row({static_cast<long long>(i + 1), p[i]});
    out.table(t);
}

void cmd_generate(const Context& ctx, Output& out) {
    const Options& o = ctx.opts;
    const std::size_t m = to_count(single_value(o.m, 10.0, "--m"), "--m");
    const double eta = single_value(o.eta, 1.0, "--eta");
    check_eta({eta});
    const auto alt = alternative_from_options(o);
    out.config("M", static_cast<double>(m));
    out.config("eta", eta);
    echo_alternative(out, alt);
    out.config("count", static_cast<double>(o.count));
    out.config("seed", std::to_string(o.seed));
    const AlternativeSpec spec{eta, alt, m};
    const int digits = out.summary() ? 4 : 17;
    for (std::size_t i = 0; i < o.count; ++i) {
        Rng rng(derive_seed(o.seed, {i}));
        const PValues p = gen_h3(spec, rng);
        for (std::size_t j = 0; j < p.size(); ++j) out.raw() << (j ? "," : "") << format_sig(p[j], digits);
        out.raw() << '\n';
    }
}

// ----------------------------------------------------------------- parser

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--seed", o.seed, "Master random seed")->capture_default_str();
    sub->add_option("--threads", o.threads, "Worker cap; 0 uses all cores")->capture_default_str();
    sub->add_option("--cache-dir", o.cache_dir, "Null table cache (default $POOLCORE_CACHE_DIR or ./.poolcache)");
    sub->add_option("--out", o.out, "Write results to this file instead of stdout");
    sub->add_option("--format", o.format, "csv or summary")
        ->check(CLI::IsMember({"csv", "summary"}))
        ->capture_default_str();
}

void add_input(CLI::App* sub, Options& o) {
    sub->add_option("input", o.input, "p-value file ('-' for stdin)");
    sub->add_option("--values", o.values, "Inline comma-separated p-values");
}

void add_methods(CLI::App* sub, Options& o) {
    sub->add_option("--method", o.methods,
                    "tippett, order, stouffer, fisher, pearson, gamma, chi, hr; inline parameters as chi:2 or hr:0.5")
        ->delimiter(',')
        ->allow_extra_args(false);
    sub->add_option("--kappa", o.kappa, "chi degrees of freedom (list)");
    sub->add_option("--k", o.k, "order statistic index, or gamma shape");
    sub->add_option("--theta", o.theta, "gamma scale");
}

void add_alternative(CLI::App* sub, Options& o) {
    sub->add_option("--eta", o.eta, "Share of non-null tests");
    sub->add_option("--divergence", o.divergence, "KL divergence of the alternative");
    sub->add_option("--w", o.w, "UMP parameter w of the beta alternative");
    sub->add_option("--a", o.a, "Beta shape a");
    sub->add_option("--b", o.b, "Beta shape b");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Pool independent p-values, measure centrality, and run power simulations", "poolcore"};
    app.require_subcommand(1);

    auto* pool_cmd = app.add_subcommand("pool", "Pooled p-value of the input vector");
    add_input(pool_cmd, o);
    add_methods(pool_cmd, o);
    pool_cmd->add_option("--w", o.w, "hr weight (list)");
    pool_cmd->add_option("--null-n-sim", o.null_n_sim, "Null table size for hr")->capture_default_str();

    auto* levels_cmd = app.add_subcommand("rejection-levels", "Central and marginal rejection levels");
    add_methods(levels_cmd, o);
    levels_cmd->add_option("--w", o.w, "hr weight (list)");
    levels_cmd->add_option("--m", o.m, "Number of tests");
    levels_cmd->add_option("--alpha", o.alpha, "Level")->capture_default_str();
    levels_cmd->add_option("--b", o.level_b, "Value of the other p-values for the marginal level")
        ->capture_default_str();
    levels_cmd->add_option("--tol", o.tol, "Root-finding tolerance")->capture_default_str();
    levels_cmd->add_option("--null-n-sim", o.null_n_sim, "Null table size for hr")->capture_default_str();

    auto* kappa_cmd = app.add_subcommand("kappa", "kappa giving a target centrality quotient");
    kappa_cmd->add_option("--q", o.q, "Target quotients (list or lo:hi:n)");
    kappa_cmd->add_option("--m", o.m, "Numbers of tests (list)");
    kappa_cmd->add_option("--alpha", o.alpha, "Level")->capture_default_str();

    auto* qtable_cmd = app.add_subcommand("q-table", "Centrality quotient table and kappa selection table");
    qtable_cmd->add_option("--m", o.m, "Numbers of tests for the quotient table");
    qtable_cmd->add_option("--alpha", o.alpha, "Level")->capture_default_str();
    qtable_cmd->add_option("--table", o.table, "1, 2 or all")->capture_default_str();
    qtable_cmd->add_option("--null-n-sim", o.null_n_sim, "Null table size for hr rows")->capture_default_str();

    auto* power_cmd = app.add_subcommand("power", "Monte Carlo power over (eta, D, w)");
    add_methods(power_cmd, o);
    add_alternative(power_cmd, o);
    power_cmd->add_option("--ln-divergence", o.ln_divergence, "ln D values (list or lo:hi:n)");
    power_cmd->add_option("--ln-w", o.ln_w, "ln w values (list or lo:hi:n)");
    power_cmd->add_option("--ln-kappa", o.ln_kappa, "ln kappa values for chi (list or lo:hi:n)");
    power_cmd->add_option("--m", o.m, "Number of tests");
    power_cmd->add_option("--alpha", o.alpha, "Level")->capture_default_str();
    power_cmd->add_option("--n-sim", o.n_sim, "Replicates per cell (default 2000)");
    power_cmd->add_option("--null-n-sim", o.null_n_sim, "Null table size for hr")->capture_default_str();

    auto* atlas_cmd = app.add_subcommand("atlas", "Where each kappa has maximal power over (eta, D)");
    add_methods(atlas_cmd, o);
    add_alternative(atlas_cmd, o);
    atlas_cmd->add_option("--ln-divergence", o.ln_divergence, "ln D grid (default -3:3:7)");
    atlas_cmd->add_option("--ln-w", o.ln_w, "ln w grid (default -6:0:4)");
    atlas_cmd->add_option("--ln-kappa", o.ln_kappa, "ln kappa grid (default -8:8:9)");
    atlas_cmd->add_option("--m", o.m, "Number of tests");
    atlas_cmd->add_option("--alpha", o.alpha, "Level")->capture_default_str();
    atlas_cmd->add_option("--n-sim", o.n_sim, "Replicates per cell (default 2000)");
    atlas_cmd->add_option("--null-n-sim", o.null_n_sim, "Null table size for hr")->capture_default_str();
    atlas_cmd->add_option("--sigma", o.sigma, "Smoothing width in grid cells")->capture_default_str();
    atlas_cmd->add_option("--confidence", o.confidence, "Max-power test confidence")->capture_default_str();
    atlas_cmd->add_option("--svg", o.svg, "Write PREFIX_<method>.svg heatmaps");

    auto* sweep_cmd = app.add_subcommand("sweep", "chi pooled p-value across a kappa grid");
    add_input(sweep_cmd, o);
    add_alternative(sweep_cmd, o);
    sweep_cmd->add_option("--ln-kappa", o.ln_kappa, "ln kappa grid (default -8:8:65)");
    sweep_cmd->add_option("--reps", o.reps, "Simulate this many vectors instead of reading input");
    sweep_cmd->add_option("--m", o.m, "Number of tests when simulating (default 100)");
    sweep_cmd->add_option("--n-sim,--null-n-sim", o.null_n_sim, "Null reference simulation size")
        ->capture_default_str();
    sweep_cmd->add_flag("--no-null-refs", o.no_null_refs, "Skip the null reference quantiles");

    auto* select_cmd = app.add_subcommand("select", "Tests contributing most at kappa_min");
    add_input(select_cmd, o);
    select_cmd->add_option("--eta", o.eta, "Share of tests to select");
    select_cmd->add_option("--kappa", o.kappa, "kappa to use instead of the sweep minimum");

    auto* gen_cmd = app.add_subcommand("generate", "Draw p-value vectors under H0, H3 or H4");
    add_alternative(gen_cmd, o);
    gen_cmd->add_option("--m", o.m, "Number of tests");
    gen_cmd->add_option("--count", o.count, "Number of vectors")->capture_default_str();

    for (auto* sub : {pool_cmd, levels_cmd, kappa_cmd, qtable_cmd, power_cmd, atlas_cmd, sweep_cmd, select_cmd,
                      gen_cmd}) {
        add_common(sub, o);
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    CLI::App* chosen = app.get_subcommands().front();
    Output output(chosen->get_name(), o.format);
    const Context ctx{o, err};
    try {
        const std::string name = chosen->get_name();
        if (name == "pool") {
            cmd_pool(ctx, output);
        } else if (name == "rejection-levels") {
            cmd_rejection_levels(ctx, output);
        } else if (name == "kappa") {
            cmd_kappa(ctx, output);
        } else if (name == "q-table") {
            cmd_q_table(ctx, output);
        } else if (name == "power") {
            cmd_power(ctx, output);
        } else if (name == "atlas") {
            cmd_atlas(ctx, output);
        } else if (name == "sweep") {
            cmd_sweep(ctx, output);
        } else if (name == "select") {
            cmd_select(ctx, output);
        } else if (name == "generate") {
            cmd_generate(ctx, output);
        }
        if (!o.out.empty()) {
            std::ofstream file(o.out);
            if (!file) throw InputError("cannot write '" + o.out + "'");
            file << output.str();
            if (!file) throw InputError("failed writing '" + o.out + "'");
        } else {
            out << output.str();
        }
        return kExitOk;
    } catch (const NumericalError& e) {
        err << "poolcore: numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const DomainError& e) {
        err << "poolcore: error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::out_of_range& e) {
        err << "poolcore: error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "poolcore: numerical error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace poolcore::cli
