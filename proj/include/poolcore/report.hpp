#pragma once

#include "poolcore/simulation.hpp"

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace poolcore::report {

using Cell = std::variant<std::string, double, long long>;

/// Rectangular result table rendered as CSV (17 significant digits) or as
/// an aligned human summary (4 significant digits).
class Table {
public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<Cell> row);
    const std::vector<std::string>& header() const noexcept { return header_; }
    const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }

    void write_csv(std::ostream& out) const;
    void write_summary(std::ostream& out) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

/// eta,ln_divergence,ln_w,method,kappa_or_w,power,se,n_sim; unreachable cells read "absent".
Table power_grid_table(const PowerGrid& grid);

/// ln_kappa,pooled_p
Table sweep_table(const KappaSweep& sweep);

/// key,value rows: kappa_min, ln_kappa_min, p_min, null_ref_q05/q01/q001.
Table sweep_summary_table(const KappaSweep& sweep);

/// Count matrix with eta down the rows and ln D across, totals last.
Table frequency_table(const FrequencyMap& map, const std::vector<double>& eta,
                      const std::vector<double>& ln_divergence);

/// Single-file SVG heatmap (first row at the bottom, NaN cells grey).
void write_svg_heatmap(std::ostream& out, const Matrix& values, const std::vector<double>& row_axis,
                       const std::vector<double>& col_axis, const std::string& title);

}  // namespace poolcore::report
