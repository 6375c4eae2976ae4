#include "deconfound/data/labels.hpp"

#include <set>
#include <string>

#include "deconfound/common.hpp"

namespace dcfd::data {

Level bin_muse_rating(double rating) {
    if (rating < 1.0 || rating > 9.0) {
        throw DataError("rating outside the 9-point scale: " + std::to_string(rating));
    }
    if (rating <= 4.5) return Level::low;
    if (rating <= 5.5) return Level::mid;
    return Level::high;
}

Level bin_five_point_rating(double rating) {
    if (rating < 1.0 || rating > 5.0) {
        throw DataError("rating outside the five-point scale: " + std::to_string(rating));
    }
    if (rating <= 2.75) return Level::low;
    if (rating <= 3.25) return Level::mid;
    return Level::high;
}

double adjusted_pss(std::span<const double> items, std::size_t double_counted_index) {
    if (items.empty()) throw DataError("adjusted_pss: empty item list");
    if (double_counted_index >= items.size()) {
        throw DataError("adjusted_pss: double-counted index out of range");
    }
    double total = 0.0;
    for (double v : items) total += v;
    return total + items[double_counted_index];
}

Level bin_stress(double adjusted_score, double population_mean) {
    if (adjusted_score <= population_mean - 2.0) return Level::low;
    if (adjusted_score <= population_mean + 2.0) return Level::mid;
    return Level::high;
}

double session_pss_mean(std::span<const Utterance* const> training) {
    std::set<std::string> seen;
    double total = 0.0;
    std::size_t n = 0;
    for (const Utterance* u : training) {
        const auto* pss = std::get_if<PssScore>(&u->confound);
        if (pss == nullptr) continue;
        if (!seen.insert(u->session_id).second) continue;
        total += pss->score;
        ++n;
    }
    if (n == 0) throw DataError("session_pss_mean: no PSS-annotated sessions in training split");
    return total / static_cast<double>(n);
}

std::vector<const Utterance*> filter_by_duration(std::span<const Utterance> utterances) {
    std::vector<const Utterance*> kept;
    kept.reserve(utterances.size());
    for (const Utterance& u : utterances) {
        if (u.duration_s >= 3.0 && u.duration_s <= 35.0) kept.push_back(&u);
    }
    return kept;
}

Level bin_emotion_rating(const Utterance& utt, EmotionTarget target) {
    const std::optional<double>& rating =
        target == EmotionTarget::activation ? utt.activation_rating : utt.valence_rating;
    if (!rating.has_value()) {
        throw DataError("utterance '" + utt.id + "' lacks the requested emotion rating");
    }
    if (utt.corpus == "iemocap" || utt.corpus == "msp") {
        return bin_five_point_rating(*rating);
    }
    return bin_muse_rating(*rating);
}

int confound_class(const Utterance& utt, double pss_population_mean) {
    if (const auto* pss = std::get_if<PssScore>(&utt.confound)) {
        return static_cast<int>(bin_stress(pss->score, pss_population_mean));
    }
    if (const auto* sp = std::get_if<SpontaneityFlag>(&utt.confound)) {
        return sp->improvised ? 1 : 0;
    }
    throw DataError("utterance '" + utt.id + "' lacks a confound annotation");
}

int confound_class_count(const Utterance& utt) {
    if (std::holds_alternative<PssScore>(utt.confound)) return 3;
    if (std::holds_alternative<SpontaneityFlag>(utt.confound)) return 2;
    throw DataError("utterance '" + utt.id + "' lacks a confound annotation");
}

std::vector<LabeledSample> label_utterances(std::span<const Utterance* const> utterances,
                                            EmotionTarget target, double pss_population_mean) {
    std::vector<LabeledSample> out;
    out.reserve(utterances.size());
    for (const Utterance* u : utterances) {
        LabeledSample s;
        s.utt = u;
        s.emotion = static_cast<int>(bin_emotion_rating(*u, target));
        s.confound = confound_class(*u, pss_population_mean);
        out.push_back(s);
    }
    return out;
}

}  // namespace dcfd::data
