#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "deconfound/netcore/tensor.hpp"

namespace dcfd::data {

// Perceived stress questionnaire total, adjusted per the instrument's
// scoring rule (one item double-counted); shared by every utterance of a
// session.
struct PssScore {
    double score = 0.0;
};

// Scripted/improvised recording condition (the binary confound).
struct SpontaneityFlag {
    bool improvised = false;
};

// monostate = no confound annotation available.
using Confound = std::variant<std::monostate, PssScore, SpontaneityFlag>;

struct Utterance {
    std::string id;
    std::string speaker_id;
    std::string session_id;
    std::string corpus;  // e.g. "muse", "iemocap", "msp", "synthetic"
    double duration_s = 0.0;

    // Acoustic features: inline tensor ([T x D]) and/or a path relative to
    // the manifest directory (raw audio .wav or a binary feature file).
    std::optional<net::Tensor> acoustic;
    std::string acoustic_path;

    std::vector<std::string> tokens;  // empty => no lexical stream

    std::optional<double> activation_rating;  // mean annotator rating
    std::optional<double> valence_rating;

    Confound confound;
};

}  // namespace dcfd::data
