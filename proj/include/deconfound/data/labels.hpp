#pragma once

#include <span>
#include <vector>

#include "deconfound/data/utterance.hpp"

namespace dcfd::data {

enum class Level : int { low = 0, mid = 1, high = 2 };

enum class EmotionTarget { activation, valence };

// 9-point annotation scale: low [min, 4.5], mid (4.5, 5.5], high (5.5, max].
Level bin_muse_rating(double rating);

// Five-point scale: low [1, 2.75], mid (2.75, 3.25], high (3.25, max].
Level bin_five_point_rating(double rating);

// Sum of all items with the indicated item counted twice.
double adjusted_pss(std::span<const double> items, std::size_t double_counted_index);

// Stress bins around the training-population mean:
// low (min, mean-2], mid (mean-2, mean+2], high (mean+2, max].
Level bin_stress(double adjusted_score, double population_mean);

// Mean adjusted-PSS over the distinct sessions of the given utterances
// (the binning population is the training split only).
double session_pss_mean(std::span<const Utterance* const> training);

// Keep utterances with 3 s <= duration <= 35 s.
std::vector<const Utterance*> filter_by_duration(std::span<const Utterance> utterances);

// Rating-scale selection by corpus tag: "muse"/"synthetic" use the 9-point
// rule, "iemocap"/"msp" the five-point rule.
Level bin_emotion_rating(const Utterance& utt, EmotionTarget target);

// Confound class for one utterance: PSS scores bin against the provided
// training-population mean; spontaneity maps scripted -> 0, improvised -> 1.
// Missing annotation is a data error.
int confound_class(const Utterance& utt, double pss_population_mean);

// Number of confound classes implied by the annotation kind (3 or 2).
int confound_class_count(const Utterance& utt);

// One utterance with its resolved integer labels.
struct LabeledSample {
    const Utterance* utt = nullptr;
    int emotion = 0;
    int confound = 0;
};

// Labels every utterance; the PSS population mean must come from the
// training split (pass session_pss_mean of the training utterances).
std::vector<LabeledSample> label_utterances(std::span<const Utterance* const> utterances,
                                            EmotionTarget target, double pss_population_mean);

}  // namespace dcfd::data
