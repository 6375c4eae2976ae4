#include "deconfound/data/splits.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <string>

#include "deconfound/common.hpp"

namespace dcfd::data {

namespace {

struct SpeakerGroup {
    std::string speaker;
    std::vector<std::size_t> indices;  // into the utterance span
};

// Deterministic speaker inventory: sorted by id, each with its utterances.
std::vector<SpeakerGroup> collect_speakers(std::span<const Utterance* const> utterances) {
    std::map<std::string, std::vector<std::size_t>> by_speaker;
    for (std::size_t i = 0; i < utterances.size(); ++i) {
        by_speaker[utterances[i]->speaker_id].push_back(i);
    }
    std::vector<SpeakerGroup> groups;
    groups.reserve(by_speaker.size());
    for (auto& [speaker, indices] : by_speaker) {
        groups.push_back(SpeakerGroup{speaker, std::move(indices)});
    }
    return groups;
}

}  // namespace

std::vector<SplitPlan> make_speaker_independent_folds(std::span<const Utterance* const> utterances,
                                                      int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("make_speaker_independent_folds: k must be >= 2");
    std::vector<SpeakerGroup> speakers = collect_speakers(utterances);
    if (speakers.size() < static_cast<std::size_t>(k)) {
        throw DataError("fewer speakers (" + std::to_string(speakers.size()) +
                        ") than folds (" + std::to_string(k) + ")");
    }

    // Greedy balance: biggest speaker first into the currently lightest
    // group; ties resolve to the lowest group index, so packing is
    // deterministic given the inventory.
    std::vector<std::size_t> order(speakers.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return speakers[a].indices.size() > speakers[b].indices.size();
    });
    std::vector<std::vector<std::size_t>> fold_speakers(static_cast<std::size_t>(k));
    std::vector<std::size_t> fold_load(static_cast<std::size_t>(k), 0);
    for (std::size_t s : order) {
        std::size_t lightest = 0;
        for (std::size_t f = 1; f < fold_load.size(); ++f) {
            if (fold_load[f] < fold_load[lightest]) lightest = f;
        }
        fold_speakers[lightest].push_back(s);
        fold_load[lightest] += speakers[s].indices.size();
    }

    std::vector<SplitPlan> plans;
    plans.reserve(static_cast<std::size_t>(k));
    for (int fold = 0; fold < k; ++fold) {
        SplitPlan plan;
        plan.fold = fold;
        std::vector<std::size_t> remaining;
        std::size_t remaining_load = 0;
        for (std::size_t f = 0; f < fold_speakers.size(); ++f) {
            for (std::size_t s : fold_speakers[f]) {
                if (f == static_cast<std::size_t>(fold)) {
                    for (std::size_t idx : speakers[s].indices) plan.test.push_back(idx);
                } else {
                    remaining.push_back(s);
                    remaining_load += speakers[s].indices.size();
                }
            }
        }
        // Speaker-disjoint 80:20 split of the remainder; the validation set
        // fills to ~20% of remaining utterances, at least one speaker.
        std::sort(remaining.begin(), remaining.end());
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(fold)));
        std::shuffle(remaining.begin(), remaining.end(), rng);
        const double target = 0.2 * static_cast<double>(remaining_load);
        std::size_t taken = 0;
        for (std::size_t s : remaining) {
            if (taken == 0 || static_cast<double>(taken) < target) {
                for (std::size_t idx : speakers[s].indices) plan.validation.push_back(idx);
                taken += speakers[s].indices.size();
            } else {
                for (std::size_t idx : speakers[s].indices) plan.train.push_back(idx);
            }
        }
        std::sort(plan.train.begin(), plan.train.end());
        std::sort(plan.validation.begin(), plan.validation.end());
        std::sort(plan.test.begin(), plan.test.end());
        if (plan.train.empty() || plan.validation.empty() || plan.test.empty()) {
            throw DataError("fold " + std::to_string(fold) + " has an empty split role");
        }
        plans.push_back(std::move(plan));
    }
    return plans;
}

std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> split_train_validation(
    std::span<const LabeledSample> samples, double validation_fraction, std::uint64_t seed) {
    if (validation_fraction <= 0.0 || validation_fraction >= 1.0) {
        throw ConfigError("split_train_validation: fraction must be in (0, 1)");
    }
    std::map<std::string, std::vector<std::size_t>> by_speaker;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        by_speaker[samples[i].utt->speaker_id].push_back(i);
    }
    if (by_speaker.size() < 2) {
        throw DataError("split_train_validation: need at least two speakers");
    }
    std::vector<std::string> speakers;
    for (const auto& [speaker, _] : by_speaker) speakers.push_back(speaker);
    std::mt19937_64 rng(seed);
    std::shuffle(speakers.begin(), speakers.end(), rng);

    const double target = validation_fraction * static_cast<double>(samples.size());
    std::vector<LabeledSample> train, validation;
    std::size_t taken = 0;
    for (const std::string& speaker : speakers) {
        const auto& indices = by_speaker[speaker];
        if (taken == 0 || static_cast<double>(taken) < target) {
            for (std::size_t idx : indices) validation.push_back(samples[idx]);
            taken += indices.size();
        } else {
            for (std::size_t idx : indices) train.push_back(samples[idx]);
        }
    }
    if (train.empty()) {
        throw DataError("split_train_validation: validation fraction leaves no training speakers");
    }
    auto by_id = [](const LabeledSample& a, const LabeledSample& b) {
        return a.utt->id < b.utt->id;
    };
    std::sort(train.begin(), train.end(), by_id);
    std::sort(validation.begin(), validation.end(), by_id);
    return {std::move(train), std::move(validation)};
}

std::pair<std::vector<LabeledSample>, std::vector<LabeledSample>> partition_by_confound(
    std::span<const LabeledSample> samples, int held_out_level) {
    std::vector<LabeledSample> source, target;
    for (const LabeledSample& s : samples) {
        if (s.confound == held_out_level) {
            target.push_back(s);
        } else {
            source.push_back(s);
        }
    }
    if (source.empty() || target.empty()) {
        throw DataError("partition_by_confound: level " + std::to_string(held_out_level) +
                        " leaves an empty partition");
    }
    return {std::move(source), std::move(target)};
}

}  // namespace dcfd::data
