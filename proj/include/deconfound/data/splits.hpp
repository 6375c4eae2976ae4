#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "deconfound/data/labels.hpp"
#include "deconfound/data/utterance.hpp"

namespace dcfd::data {

// One cross-validation fold: index lists into the utterance span handed to
// make_speaker_independent_folds. Speaker sets of the three roles are
// pairwise disjoint by construction.
struct SplitPlan {
    int fold = 0;
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

// k-fold speaker-independent cross validation. Speakers are packed into k
// groups balanced by utterance count (greedy largest-first into the lightest
// group); fold i tests on group i and splits the remaining speakers
// 80:20 (by utterance count, speaker-disjoint, seeded) into train and
// validation.
std::vector<SplitPlan> make_speaker_independent_folds(std::span<const Utterance* const> utterances,
                                                      int k, std::uint64_t seed);

// Speaker-disjoint two-way split of labeled samples; validation receives
// roughly `validation_fraction` of the utterances (at least one speaker).
std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> split_train_validation(
    std::span<const LabeledSample> samples, double validation_fraction, std::uint64_t seed);

// Partition-by-confound protocol: source = every utterance NOT at the
// held-out confound level, target = utterances at that level. Either side
// empty is a data error.
std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> partition_by_confound(
    std::span<const LabeledSample> samples, int held_out_level);

}  // namespace dcfd::data
