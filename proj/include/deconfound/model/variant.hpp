#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "deconfound/data/labels.hpp"

namespace dcfd::model {

enum class TrainingMode { normal, adversarial };
enum class Modality { acoustic, lexical, multimodal };

using data::EmotionTarget;

// Per-stream trunk hyperparameters. The hyperparameter grid:
// conv layers {3,4}, kernel width {2,3}, conv width {32,64,128},
// pool width {2}, recurrent layers {2,3}, recurrent width {32}.
struct BranchSpec {
    std::size_t input_dim = 0;  // feature width entering the conv stack
    std::size_t conv_layers = 3;
    std::size_t kernel_width = 2;
    std::size_t conv_width = 32;
    std::size_t pool_width = 2;
    std::size_t gru_layers = 2;
    std::size_t gru_width = 32;

    // Shortest input sequence the conv stack accepts.
    std::size_t min_sequence_length() const { return conv_layers * (kernel_width - 1) + 1; }
};

// Classifier-head hyperparameters (shared topology for the emotion head and
// the mirrored confound head). Grid: dense layers {1,2}, width {32,64}.
struct HeadSpec {
    std::size_t dense_layers = 1;
    std::size_t dense_width = 32;
};

// Full model-variant identity: one of the 12 (mode, target, modality)
// combinations plus its hyperparameters. The fingerprint of the canonical
// serialization ties checkpoints and run-ledger records to this spec.
struct VariantSpec {
    TrainingMode mode = TrainingMode::normal;
    EmotionTarget target = EmotionTarget::activation;
    Modality modality = Modality::acoustic;

    std::optional<BranchSpec> acoustic;  // present iff the modality uses the stream
    std::optional<BranchSpec> lexical;
    HeadSpec head;
    std::optional<double> lambda;  // present iff mode == adversarial

    std::size_t emotion_classes = 3;
    std::size_t confound_classes = 3;

    // When set, every hyperparameter must come from the declared grid.
    bool grid_mode = false;

    void validate() const;  // throws ConfigError on violations
    std::string canonical_string() const;
    std::uint64_t fingerprint() const;
};

const char* to_string(TrainingMode m);
const char* to_string(Modality m);
const char* to_string(EmotionTarget t);
TrainingMode training_mode_from_string(const std::string& s);
Modality modality_from_string(const std::string& s);
EmotionTarget emotion_target_from_string(const std::string& s);

// Full hyperparameter grid for one (mode, target, modality) family.
// Unimodal families enumerate 96 (normal) or 288 (adversarial) specs;
// multimodal branches vary independently: 2304 / 6912.
std::vector<VariantSpec> enumerate_grid(TrainingMode mode, EmotionTarget target,
                                        Modality modality, std::size_t acoustic_dim,
                                        std::size_t lexical_dim, std::size_t emotion_classes = 3,
                                        std::size_t confound_classes = 3);

// The 12 (mode, target, modality) combinations sharing the given
// hyperparameters; used to sweep the full variant space.
std::vector<VariantSpec> twelve_variants(const BranchSpec& acoustic_template,
                                         const BranchSpec& lexical_template, const HeadSpec& head,
                                         double lambda, std::size_t emotion_classes = 3,
                                         std::size_t confound_classes = 3);

}  // namespace dcfd::model
