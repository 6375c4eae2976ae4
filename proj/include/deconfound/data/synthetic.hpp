#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deconfound/data/utterance.hpp"
#include "deconfound/features/embedding.hpp"

namespace dcfd::data {

// Confounded-corpus generator configuration. Per utterance the generator
// draws an emotion class e from the emotion priors, then a confound class:
// with probability `correlation` (rho) it is map(e) = e mod n_confound, else
// an independent draw from the confound priors. Acoustic frames are
// x_t = mu_e + nu_c + speaker_offset + noise; tokens mix class-specific
// content words with filler/adverb markers whose rate rises with the
// confound level when lexical_shift > 0.
struct SyntheticConfig {
    std::size_t speakers = 40;
    std::size_t utterances_per_speaker = 15;

    std::size_t acoustic_dim = 40;
    std::size_t min_frames = 10;
    std::size_t max_frames = 20;
    std::size_t min_tokens = 6;
    std::size_t max_tokens = 14;
    double min_duration_s = 4.0;
    double max_duration_s = 10.0;

    std::vector<double> emotion_priors{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    std::vector<double> confound_priors{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    // false: three-level stress confound annotated as per-session PSS scores;
    // true: binary scripted/improvised flag (confound_priors must then have 2 entries).
    bool spontaneity_confound = false;

    double correlation = 0.0;  // rho in [0, 1]

    // Confound shift magnitudes per modality. Zero means the confound leaves
    // no trace in that modality.
    double acoustic_shift = 0.0;
    double lexical_shift = 0.0;

    // Signal strength knobs (defaults give a comfortably learnable corpus).
    double emotion_signal = 0.5;          // acoustic class-mean scale
    double lexical_emotion_signal = 0.8;  // P(content token is class-specific)
    double speaker_offset_scale = 0.3;
    double noise_scale = 1.0;
    double marker_base_rate = 0.08;  // filler/adverb rate at confound level 0

    std::uint64_t seed = 1;
};

// Deterministic generator: identical configs yield identical corpora.
std::vector<Utterance> generate_synthetic_corpus(const SyntheticConfig& cfg);

// The closed vocabulary the generator draws from (markers + content words).
const std::vector<std::string>& synthetic_vocabulary();

// Seeded random embedding table covering the synthetic vocabulary plus the
// <unk> token.
features::EmbeddingTable synthetic_embedding_table(std::size_t dim, std::uint64_t seed);

}  // namespace dcfd::data
