#include "poolcore/report.hpp"

#include "poolcore/errors.hpp"
#include "poolcore/format.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace poolcore::report {

namespace {

std::string render(const Cell& cell, int digits) {
    if (const auto* s = std::get_if<std::string>(&cell)) return *s;
    if (const auto* i = std::get_if<long long>(&cell)) return std::to_string(*i);
    return format_sig(std::get<double>(cell), digits);
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

Cell optional_cell(const std::optional<double>& v) {
    if (v) return *v;
    return std::string("absent");
}

}  // namespace

void Table::add_row(std::vector<Cell> row) {
    if (row.size() != header_.size()) {
        throw DomainError("table row has " + std::to_string(row.size()) + " cells, expected " +
                          std::to_string(header_.size()));
    }
    rows_.push_back(std::move(row));
}

void Table::write_csv(std::ostream& out) const {
    for (std::size_t i = 0; i < header_.size(); ++i) out << (i ? "," : "") << csv_escape(header_[i]);
    out << '\n';
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_escape(render(row[i], 17));
        out << '\n';
    }
}

void Table::write_summary(std::ostream& out) const {
    std::vector<std::vector<std::string>> text;
    text.push_back(header_);
    for (const auto& row : rows_) {
        std::vector<std::string> line;
        for (const auto& c : row) line.push_back(render(c, 4));
        text.push_back(std::move(line));
    }
    std::vector<std::size_t> width(header_.size(), 0);
    for (const auto& line : text) {
        for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
    }
    for (const auto& line : text) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (i) out << "  ";
            out << line[i];
            if (i + 1 < line.size()) out << std::string(width[i] - line[i].size(), ' ');
        }
        out << '\n';
    }
}

Table power_grid_table(const PowerGrid& grid) {
    Table t({"eta", "ln_divergence", "ln_w", "method", "kappa_or_w", "power", "se", "n_sim"});
    for (std::size_t ie = 0; ie < grid.eta.size(); ++ie) {
        for (std::size_t id = 0; id < grid.ln_divergence.size(); ++id) {
            for (std::size_t iw = 0; iw < grid.ln_w.size(); ++iw) {
                for (std::size_t im = 0; im < grid.methods.size(); ++im) {
                    const auto& cell = grid.at(ie, id, iw, im);
                    const auto& method = grid.methods[im];
                    Cell power = std::string("absent");
                    Cell se = std::string("absent");
                    if (cell.reachable) {
                        power = cell.estimate.power;
                        se = cell.estimate.se;
                    }
                    Cell parameter = std::string();
                    if (!std::isnan(method.parameter())) parameter = method.parameter();
                    t.add_row({grid.eta[ie], grid.ln_divergence[id], grid.ln_w[iw], method.key(), parameter,
                               power, se, static_cast<long long>(cell.estimate.n_sim)});
                }
            }
        }
    }
    return t;
}

Table sweep_table(const KappaSweep& sweep) {
    Table t({"ln_kappa", "pooled_p"});
    for (std::size_t i = 0; i < sweep.ln_kappa.size(); ++i) t.add_row({sweep.ln_kappa[i], sweep.pooled_p[i]});
    return t;
}

Table sweep_summary_table(const KappaSweep& sweep) {
    Table t({"key", "value"});
    t.add_row({std::string("kappa_min"), sweep.kappa_min});
    t.add_row({std::string("ln_kappa_min"), sweep.ln_kappa[sweep.index_min]});
    t.add_row({std::string("p_min"), sweep.p_min});
    t.add_row({std::string("null_ref_q05"), optional_cell(sweep.null_ref_q05)});
    t.add_row({std::string("null_ref_q01"), optional_cell(sweep.null_ref_q01)});
    t.add_row({std::string("null_ref_q001"), optional_cell(sweep.null_ref_q001)});
    return t;
}

Table frequency_table(const FrequencyMap& map, const std::vector<double>& eta,
                      const std::vector<double>& ln_divergence) {
    std::vector<std::string> header{"eta\\ln_divergence"};
    for (double d : ln_divergence) header.push_back(format_sig(d));
    header.push_back("total");
    Table t(std::move(header));
    for (std::size_t r = 0; r < map.counts.rows; ++r) {
        std::vector<Cell> row{eta[r]};
        for (std::size_t c = 0; c < map.counts.cols; ++c) {
            if (map.masked(r, c)) {
                row.emplace_back(std::string("masked"));
            } else {
                row.emplace_back(map.counts(r, c));
            }
        }
        row.emplace_back(map.eta_totals[r]);
        t.add_row(std::move(row));
    }
    std::vector<Cell> totals{std::string("total")};
    double all = 0.0;
    for (double v : map.divergence_totals) {
        totals.emplace_back(v);
        all += v;
    }
    totals.emplace_back(all);
    t.add_row(std::move(totals));
    return t;
}

void write_svg_heatmap(std::ostream& out, const Matrix& values, const std::vector<double>& row_axis,
                       const std::vector<double>& col_axis, const std::string& title) {
    constexpr int cell = 16;
    constexpr int margin = 60;
    const int width = margin + static_cast<int>(values.cols) * cell + 20;
    const int height = margin + static_cast<int>(values.rows) * cell + 40;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : values.data) {
        if (std::isnan(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<text x=\"" << margin << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << title
        << "</text>\n";
    for (std::size_t r = 0; r < values.rows; ++r) {
        const int y = margin + static_cast<int>(values.rows - 1 - r) * cell;
        for (std::size_t c = 0; c < values.cols; ++c) {
            const int x = margin + static_cast<int>(c) * cell;
            const double v = values(r, c);
            std::string fill = "#bbbbbb";
            if (!std::isnan(v)) {
                const int red = static_cast<int>(std::lround(255.0 * (v - lo) / span));
                char buf[16];
                std::snprintf(buf, sizeof buf, "#%02x30%02x", red, 255 - red);
                fill = buf;
            }
            out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
                << "\" fill=\"" << fill << "\"><title>" << format_sig(row_axis[r], 4) << ", "
                << format_sig(col_axis[c], 4) << ": " << format_sig(v, 4) << "</title></rect>\n";
        }
    }
    out << "<text x=\"" << margin << "\" y=\"" << height - 10
        << "\" font-family=\"sans-serif\" font-size=\"11\">range " << format_sig(lo, 4) << " to "
        << format_sig(hi, 4) << "</text>\n";
    out << "</svg>\n";
}

}  // namespace poolcore::report
