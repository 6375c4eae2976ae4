#include "deconfound/eval/report.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dcfd::eval {

TextTable::TextTable(std::vector<std::string> headers) : headers_(std::move(headers)) {
    if (headers_.empty()) throw std::invalid_argument("TextTable needs at least one column");
}

void TextTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != headers_.size())
        throw std::invalid_argument("TextTable row width does not match the header");
    rows_.push_back(std::move(cells));
}

std::string TextTable::str() const {
    std::vector<std::size_t> width(headers_.size());
    for (std::size_t c = 0; c < headers_.size(); ++c) width[c] = headers_[c].size();
    for (const auto& row : rows_)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());

    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c > 0) out << "  ";
            if (c == 0) {
                out << cells[c] << std::string(width[c] - cells[c].size(), ' ');
            } else {
                out << std::string(width[c] - cells[c].size(), ' ') << cells[c];
            }
        }
        out << "\n";
    };
    emit(headers_);
    std::size_t rule = 0;
    for (std::size_t c = 0; c < width.size(); ++c) rule += width[c] + (c > 0 ? 2 : 0);
    out << std::string(rule, '-') << "\n";
    for (const auto& row : rows_) emit(row);
    return out.str();
}

std::string format_double(double v, int precision) {
    if (std::isnan(v)) return "n/a";
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(precision);
    out << v;
    return out.str();
}

std::string aps_table(std::span<const ApsCorrelationRow> rows) {
    TextTable table({"feature", "r", "p", "p_adj", "sig"});
    for (const auto& row : rows) {
        table.add_row({row.feature, format_double(row.r), format_double(row.p, 4),
                       format_double(row.p_adjusted, 4), row.code});
    }
    return table.str();
}

std::string transfer_table(const TransferResult& result, const std::string& source_label,
                           const std::string& target_label) {
    std::ostringstream out;
    out << "transfer " << source_label << " -> " << target_label << "\n";
    TextTable table({"model", "target UAR"});
    table.add_row({"normal", format_double(result.normal_uar)});
    table.add_row({"adversarial", format_double(result.adversarial_uar)});
    table.add_row({"delta", format_double(result.delta)});
    out << table.str();
    if (result.t_test_defined) {
        out << "paired over " << result.speakers.size() << " speakers: t = "
            << format_double(result.t_test.t) << ", df = " << result.t_test.df
            << ", p = " << format_double(result.t_test.p, 4) << " ["
            << significance_code(result.t_test.p) << "]\n";
    } else {
        out << "paired speaker test undefined (fewer than two speakers or degenerate "
               "differences)\n";
    }
    return out.str();
}

}  // namespace dcfd::eval
