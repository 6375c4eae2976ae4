#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "deconfound/features/lexicon.hpp"

namespace dcfd::eval {

// Per-utterance adversarial preference score: the fraction of adversarial
// runs that classify the utterance correctly minus the fraction of normal
// runs that do. Correct in 9/15 adversarial and 6/15 normal runs -> 0.2.
double aps(std::size_t adversarial_correct, std::size_t adversarial_runs,
           std::size_t normal_correct, std::size_t normal_runs);

// One test utterance's score with its lexical profile.
struct ApsRecord {
    std::string utterance_id;
    double aps = 0.0;
    features::LexicalFeatureVector lexical;
};

// One row per lexical feature, in the fixed feature order.
struct ApsCorrelationRow {
    std::string feature;
    bool defined = false;    // false when either side is constant or n < 3
    double r = 0.0;          // Pearson r against the score
    double p = 1.0;          // raw two-sided p
    double p_adjusted = 1.0; // Benjamini-Hochberg across the defined rows
    std::string code = "-";  // significance code on the adjusted p
};

// Correlates each lexical feature with the preference score across records.
// Undefined rows (constant feature, constant score, or too few records) are
// flagged rather than raised, and are excluded from the BH family.
std::vector<ApsCorrelationRow> aps_correlation_report(std::span<const ApsRecord> records);

}  // namespace dcfd::eval
