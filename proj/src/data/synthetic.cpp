#include "deconfound/data/synthetic.hpp"

#include <cmath>
#include <map>
#include <random>
#include <string>

#include "deconfound/common.hpp"

namespace dcfd::data {

namespace {

// Confound markers: filler and adverb tokens whose rate tracks the confound
// level. Content words are class-flavored (and overlap the word-category
// lexicon so lexical analyses have live features) plus neutral padding.
const std::vector<std::string> kMarkers = {"uh", "um", "like", "really", "very"};
const std::vector<std::vector<std::string>> kContent = {
    {"sad", "bad", "terrible"},
    {"okay", "well", "fine"},
    {"happy", "great", "wow"},
};
const std::vector<std::string> kCommon = {"the", "a", "and"};

void validate_priors(const std::vector<double>& priors, std::size_t expected, const char* what) {
    if (priors.size() != expected) {
        throw ConfigError(std::string(what) + ": expected " + std::to_string(expected) +
                          " prior entries, got " + std::to_string(priors.size()));
    }
    double total = 0.0;
    for (double p : priors) {
        if (p < 0.0) throw ConfigError(std::string(what) + ": negative prior");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ConfigError(std::string(what) + ": priors must sum to 1");
    }
}

std::size_t draw_class(std::mt19937_64& rng, const std::vector<double>& priors) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double x = u(rng);
    double acc = 0.0;
    for (std::size_t c = 0; c < priors.size(); ++c) {
        acc += priors[c];
        if (x < acc) return c;
    }
    return priors.size() - 1;
}

}  // namespace

const std::vector<std::string>& synthetic_vocabulary() {
    static const std::vector<std::string> vocab = [] {
        std::vector<std::string> v = kMarkers;
        for (const auto& cls : kContent) v.insert(v.end(), cls.begin(), cls.end());
        v.insert(v.end(), kCommon.begin(), kCommon.end());
        return v;
    }();
    return vocab;
}

features::EmbeddingTable synthetic_embedding_table(std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::unordered_map<std::string, std::vector<double>> vectors;
    auto draw = [&] {
        std::vector<double> v(dim);
        for (double& x : v) x = g(rng);
        return v;
    };
    for (const std::string& tok : synthetic_vocabulary()) vectors[tok] = draw();
    vectors[features::kUnkToken] = draw();
    return features::EmbeddingTable(dim, std::move(vectors));
}

std::vector<Utterance> generate_synthetic_corpus(const SyntheticConfig& cfg) {
    if (cfg.speakers == 0 || cfg.utterances_per_speaker == 0) {
        throw ConfigError("synthetic: speakers and utterances_per_speaker must be >= 1");
    }
    if (cfg.correlation < 0.0 || cfg.correlation > 1.0) {
        throw ConfigError("synthetic: correlation must lie in [0, 1]");
    }
    if (cfg.acoustic_dim == 0) throw ConfigError("synthetic: acoustic_dim must be >= 1");
    if (cfg.min_frames == 0 || cfg.min_frames > cfg.max_frames) {
        throw ConfigError("synthetic: bad frame-count range");
    }
    if (cfg.min_tokens == 0 || cfg.min_tokens > cfg.max_tokens) {
        throw ConfigError("synthetic: bad token-count range");
    }
    if (cfg.min_duration_s <= 0.0 || cfg.min_duration_s > cfg.max_duration_s) {
        throw ConfigError("synthetic: bad duration range");
    }
    if (cfg.acoustic_shift < 0.0 || cfg.lexical_shift < 0.0) {
        throw ConfigError("synthetic: shift magnitudes must be >= 0");
    }
    validate_priors(cfg.emotion_priors, 3, "synthetic emotion priors");
    const std::size_t n_conf = cfg.spontaneity_confound ? 2 : 3;
    validate_priors(cfg.confound_priors, n_conf, "synthetic confound priors");

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const std::size_t D = cfg.acoustic_dim;
    auto draw_direction = [&](double scale) {
        std::vector<double> v(D);
        for (double& x : v) x = scale * gauss(rng);
        return v;
    };

    // Class geometry is drawn once per corpus.
    std::vector<std::vector<double>> mu;     // emotion means
    std::vector<std::vector<double>> nu;     // confound shifts
    std::vector<std::vector<double>> spk;    // persistent speaker offsets
    for (std::size_t e = 0; e < 3; ++e) mu.push_back(draw_direction(cfg.emotion_signal));
    for (std::size_t c = 0; c < n_conf; ++c) nu.push_back(draw_direction(cfg.acoustic_shift));
    for (std::size_t s = 0; s < cfg.speakers; ++s) {
        spk.push_back(draw_direction(cfg.speaker_offset_scale));
    }

    // Session-level stress scores: one draw per (speaker, level) session so
    // every utterance of a session shares the same PSS total.
    std::map<std::pair<std::size_t, std::size_t>, double> session_pss;

    const double rating_base[3] = {3.0, 5.0, 7.0};
    const double pss_base[3] = {13.0, 17.0, 21.0};

    std::vector<Utterance> corpus;
    corpus.reserve(cfg.speakers * cfg.utterances_per_speaker);
    std::size_t counter = 0;
    for (std::size_t s = 0; s < cfg.speakers; ++s) {
        for (std::size_t k = 0; k < cfg.utterances_per_speaker; ++k) {
            const std::size_t e = draw_class(rng, cfg.emotion_priors);
            std::size_t c;
            if (unit(rng) < cfg.correlation) {
                c = e % n_conf;  // deterministic map of the emotion class
            } else {
                c = draw_class(rng, cfg.confound_priors);
            }

            Utterance utt;
            utt.id = "u" + std::to_string(100000 + counter++).substr(1);
            utt.speaker_id = "spk" + std::to_string(100 + s).substr(1);
            utt.session_id = utt.speaker_id + "-c" + std::to_string(c);
            utt.corpus = "synthetic";

            // Acoustic stream.
            std::uniform_int_distribution<std::size_t> frame_count(cfg.min_frames, cfg.max_frames);
            const std::size_t T = frame_count(rng);
            net::Tensor ac({T, D});
            for (std::size_t t = 0; t < T; ++t) {
                for (std::size_t d = 0; d < D; ++d) {
                    ac.at(t, d) =
                        mu[e][d] + nu[c][d] + spk[s][d] + cfg.noise_scale * gauss(rng);
                }
            }
            utt.acoustic = std::move(ac);

            // Lexical stream: markers (fillers/adverbs) vs content words.
            std::uniform_int_distribution<std::size_t> token_count(cfg.min_tokens, cfg.max_tokens);
            const std::size_t L = token_count(rng);
            const double level_frac =
                n_conf > 1 ? static_cast<double>(c) / static_cast<double>(n_conf - 1) : 0.0;
            const double p_marker =
                std::min(0.85, cfg.marker_base_rate + cfg.lexical_shift * level_frac);
            for (std::size_t i = 0; i < L; ++i) {
                if (unit(rng) < p_marker) {
                    std::uniform_int_distribution<std::size_t> pick(0, kMarkers.size() - 1);
                    utt.tokens.push_back(kMarkers[pick(rng)]);
                } else if (unit(rng) < cfg.lexical_emotion_signal) {
                    std::uniform_int_distribution<std::size_t> pick(0, kContent[e].size() - 1);
                    utt.tokens.push_back(kContent[e][pick(rng)]);
                } else {
                    std::uniform_int_distribution<std::size_t> pick(0, kCommon.size() - 1);
                    utt.tokens.push_back(kCommon[pick(rng)]);
                }
            }

            std::uniform_real_distribution<double> duration(cfg.min_duration_s,
                                                            cfg.max_duration_s);
            utt.duration_s = duration(rng);

            // Ratings jitter stays inside the bin: 3/5/7 +- 0.4 on the
            // 9-point scale round-trips through bin_muse_rating exactly.
            std::uniform_real_distribution<double> rating_jitter(-0.4, 0.4);
            utt.activation_rating = rating_base[e] + rating_jitter(rng);
            utt.valence_rating = rating_base[e] + rating_jitter(rng);

            if (cfg.spontaneity_confound) {
                utt.confound = SpontaneityFlag{c == 1};
            } else {
                auto key = std::make_pair(s, c);
                auto it = session_pss.find(key);
                if (it == session_pss.end()) {
                    std::uniform_real_distribution<double> pss_jitter(-1.0, 1.0);
                    it = session_pss.emplace(key, pss_base[c] + pss_jitter(rng)).first;
                }
                utt.confound = PssScore{it->second};
            }
            corpus.push_back(std::move(utt));
        }
    }
    return corpus;
}

}  // namespace dcfd::data
