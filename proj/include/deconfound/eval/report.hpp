#pragma once

#include <span>
#include <string>
#include <vector>

#include "deconfound/eval/aps.hpp"
#include "deconfound/eval/transfer.hpp"

namespace dcfd::eval {

// Minimal fixed-width text table for terminal reports: left-aligned first
// column, right-aligned numeric columns, a dashed rule under the header.
class TextTable {
public:
    explicit TextTable(std::vector<std::string> headers);
    void add_row(std::vector<std::string> cells);  // must match header width
    std::string str() const;

private:
    std::vector<std::string> headers_;
    std::vector<std::vector<std::string>> rows_;
};

// Fixed-precision decimal ("0.427" style); NaN renders as "n/a".
std::string format_double(double v, int precision = 3);

// Lexical-correlation table: feature, r, raw p, adjusted p, code.
std::string aps_table(std::span<const ApsCorrelationRow> rows);

// Cross-domain comparison block with the per-speaker significance line.
std::string transfer_table(const TransferResult& result, const std::string& source_label,
                           const std::string& target_label);

}  // namespace dcfd::eval
