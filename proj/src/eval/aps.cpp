#include "deconfound/eval/aps.hpp"

#include <cmath>
#include <limits>

#include "deconfound/common.hpp"
#include "deconfound/eval/stats.hpp"

namespace dcfd::eval {
namespace {

bool has_variance(std::span<const double> v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] != v[0]) return true;
    return false;
}

}  // namespace

double aps(std::size_t adversarial_correct, std::size_t adversarial_runs,
           std::size_t normal_correct, std::size_t normal_runs) {
    if (adversarial_runs == 0 || normal_runs == 0)
        throw DataError("aps: both model families need at least one run");
    if (adversarial_correct > adversarial_runs || normal_correct > normal_runs)
        throw DataError("aps: correct counts exceed run counts");
    return static_cast<double>(adversarial_correct) / static_cast<double>(adversarial_runs) -
           static_cast<double>(normal_correct) / static_cast<double>(normal_runs);
}

std::vector<ApsCorrelationRow> aps_correlation_report(std::span<const ApsRecord> records) {
    const auto& names = features::lexical_feature_names();
    std::vector<ApsCorrelationRow> rows(features::kLexicalFeatureCount);

    std::vector<double> scores;
    scores.reserve(records.size());
    for (const auto& rec : records) scores.push_back(rec.aps);
    const bool score_varies = records.size() >= 3 && has_variance(scores);

    std::vector<double> defined_p;
    std::vector<std::size_t> defined_index;
    for (std::size_t f = 0; f < features::kLexicalFeatureCount; ++f) {
        ApsCorrelationRow& row = rows[f];
        row.feature = names[f];

        std::vector<double> xs;
        xs.reserve(records.size());
        for (const auto& rec : records) xs.push_back(rec.lexical.values[f]);
        if (!score_varies || !has_variance(xs)) {
            row.defined = false;
            row.r = std::numeric_limits<double>::quiet_NaN();
            row.p = std::numeric_limits<double>::quiet_NaN();
            row.p_adjusted = std::numeric_limits<double>::quiet_NaN();
            row.code = "-";
            continue;
        }
        row.defined = true;
        row.r = pearson_r(xs, scores);
        row.p = pearson_p(row.r, records.size());
        defined_p.push_back(row.p);
        defined_index.push_back(f);
    }

    if (!defined_p.empty()) {
        const std::vector<double> adjusted = bh_adjust(defined_p);
        for (std::size_t i = 0; i < defined_index.size(); ++i) {
            ApsCorrelationRow& row = rows[defined_index[i]];
            row.p_adjusted = adjusted[i];
            row.code = significance_code(row.p_adjusted);
        }
    }
    return rows;
}

}  // namespace dcfd::eval
