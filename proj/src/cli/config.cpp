#include <fstream>
#include <sstream>

#include "deconfound/common.hpp"
#include "deconfound/data/manifest.hpp"
#include "internal.hpp"

namespace dcfd::cli {

ordered_json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    try {
        ordered_json j = ordered_json::parse(in);
        if (!j.is_object()) throw ConfigError("config root must be a JSON object");
        return j;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
}

void apply_override(ordered_json& config, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("--set expects key=value, got: " + assignment);
    const std::string dotted = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);

    ordered_json value;
    try {
        value = ordered_json::parse(raw);
    } catch (const std::exception&) {
        value = raw;  // unquoted strings are taken literally
    }

    ordered_json* node = &config;
    std::stringstream keys(dotted);
    std::string key;
    std::vector<std::string> parts;
    while (std::getline(keys, key, '.')) {
        if (key.empty()) throw ConfigError("--set key has an empty segment: " + dotted);
        parts.push_back(key);
    }
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->contains(parts[i]) || !(*node)[parts[i]].is_object())
            (*node)[parts[i]] = ordered_json::object();
        node = &(*node)[parts[i]];
    }
    (*node)[parts.back()] = std::move(value);
}

std::string hash_of_config(const ordered_json& config) {
    // Key-sorted dump so semantically identical configs hash identically.
    const nlohmann::json canonical = nlohmann::json::parse(config.dump());
    return to_hex(fnv1a64(canonical.dump()));
}

const ordered_json& require(const ordered_json& config, const std::string& key) {
    if (!config.contains(key)) throw ConfigError("config key missing: " + key);
    return config.at(key);
}

std::string require_string(const ordered_json& config, const std::string& key) {
    const ordered_json& v = require(config, key);
    if (!v.is_string()) throw ConfigError("config key " + key + " must be a string");
    return v.get<std::string>();
}

namespace {

template <typename T>
T value_or(const ordered_json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const std::exception& e) {
        throw ConfigError("config key " + key + ": " + e.what());
    }
}

std::vector<double> priors_or(const ordered_json& j, const std::string& key,
                              std::vector<double> fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<std::vector<double>>();
    } catch (const std::exception& e) {
        throw ConfigError("config key " + key + ": " + e.what());
    }
}

}  // namespace

data::SyntheticConfig parse_corpus(const ordered_json& j, std::uint64_t default_seed) {
    if (!j.is_object()) throw ConfigError("corpus config must be an object");
    data::SyntheticConfig cfg;
    cfg.speakers = value_or<std::size_t>(j, "speakers", cfg.speakers);
    cfg.utterances_per_speaker =
        value_or<std::size_t>(j, "utterances_per_speaker", cfg.utterances_per_speaker);
    cfg.acoustic_dim = value_or<std::size_t>(j, "acoustic_dim", cfg.acoustic_dim);
    cfg.min_frames = value_or<std::size_t>(j, "min_frames", cfg.min_frames);
    cfg.max_frames = value_or<std::size_t>(j, "max_frames", cfg.max_frames);
    cfg.min_tokens = value_or<std::size_t>(j, "min_tokens", cfg.min_tokens);
    cfg.max_tokens = value_or<std::size_t>(j, "max_tokens", cfg.max_tokens);
    cfg.min_duration_s = value_or<double>(j, "min_duration_s", cfg.min_duration_s);
    cfg.max_duration_s = value_or<double>(j, "max_duration_s", cfg.max_duration_s);
    cfg.emotion_priors = priors_or(j, "emotion_priors", cfg.emotion_priors);
    cfg.confound_priors = priors_or(j, "confound_priors", cfg.confound_priors);
    cfg.spontaneity_confound =
        value_or<bool>(j, "spontaneity_confound", cfg.spontaneity_confound);
    cfg.correlation = value_or<double>(j, "correlation", cfg.correlation);
    cfg.acoustic_shift = value_or<double>(j, "acoustic_shift", cfg.acoustic_shift);
    cfg.lexical_shift = value_or<double>(j, "lexical_shift", cfg.lexical_shift);
    cfg.emotion_signal = value_or<double>(j, "emotion_signal", cfg.emotion_signal);
    cfg.lexical_emotion_signal =
        value_or<double>(j, "lexical_emotion_signal", cfg.lexical_emotion_signal);
    cfg.speaker_offset_scale =
        value_or<double>(j, "speaker_offset_scale", cfg.speaker_offset_scale);
    cfg.noise_scale = value_or<double>(j, "noise_scale", cfg.noise_scale);
    cfg.marker_base_rate = value_or<double>(j, "marker_base_rate", cfg.marker_base_rate);
    cfg.seed = value_or<std::uint64_t>(j, "seed", default_seed);
    return cfg;
}

train::TrainConfig parse_train_config(const ordered_json& config, std::size_t jobs) {
    train::TrainConfig tc;
    tc.jobs = jobs;
    if (!config.contains("train")) return tc;
    const ordered_json& j = config.at("train");
    if (!j.is_object()) throw ConfigError("config key train must be an object");
    tc.max_epochs = value_or<std::size_t>(j, "max_epochs", tc.max_epochs);
    tc.patience = value_or<std::size_t>(j, "patience", tc.patience);
    tc.batch_size = value_or<std::size_t>(j, "batch_size", tc.batch_size);
    tc.optimizer.learning_rate = value_or<double>(j, "learning_rate", tc.optimizer.learning_rate);
    tc.optimizer.decay = value_or<double>(j, "decay", tc.optimizer.decay);
    tc.optimizer.epsilon = value_or<double>(j, "epsilon", tc.optimizer.epsilon);
    tc.chance_uar_tolerance =
        value_or<double>(j, "chance_uar_tolerance", tc.chance_uar_tolerance);
    if (j.contains("seeds")) {
        try {
            tc.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config key train.seeds: ") + e.what());
        }
        if (tc.seeds.empty()) throw ConfigError("train.seeds must be non-empty");
    }
    return tc;
}

namespace {

model::BranchSpec parse_branch(const ordered_json& j, std::size_t default_input_dim) {
    model::BranchSpec b;
    b.input_dim = value_or<std::size_t>(j, "input_dim", std::size_t{0});
    if (b.input_dim == 0) b.input_dim = default_input_dim;
    b.conv_layers = value_or<std::size_t>(j, "conv_layers", b.conv_layers);
    b.kernel_width = value_or<std::size_t>(j, "kernel_width", b.kernel_width);
    b.conv_width = value_or<std::size_t>(j, "conv_width", b.conv_width);
    b.pool_width = value_or<std::size_t>(j, "pool_width", b.pool_width);
    b.gru_layers = value_or<std::size_t>(j, "gru_layers", b.gru_layers);
    b.gru_width = value_or<std::size_t>(j, "gru_width", b.gru_width);
    return b;
}

}  // namespace

model::VariantSpec parse_spec(const ordered_json& config, model::TrainingMode mode,
                              std::optional<double> lambda, std::size_t acoustic_dim,
                              std::size_t lexical_dim) {
    model::VariantSpec spec;
    spec.mode = mode;
    spec.target = model::emotion_target_from_string(
        value_or<std::string>(config, "target", "activation"));
    spec.modality =
        model::modality_from_string(value_or<std::string>(config, "modality", "multimodal"));

    const ordered_json spec_json =
        config.contains("spec") ? config.at("spec") : ordered_json::object();
    if (!spec_json.is_object()) throw ConfigError("config key spec must be an object");

    if (spec.modality != model::Modality::lexical) {
        if (acoustic_dim == 0)
            throw ConfigError("acoustic stream requested but the data has no acoustic features");
        spec.acoustic = parse_branch(
            spec_json.contains("acoustic") ? spec_json.at("acoustic") : ordered_json::object(),
            acoustic_dim);
    }
    if (spec.modality != model::Modality::acoustic) {
        if (lexical_dim == 0)
            throw ConfigError("lexical stream requested but no embedding table is available");
        spec.lexical = parse_branch(
            spec_json.contains("lexical") ? spec_json.at("lexical") : ordered_json::object(),
            lexical_dim);
    }
    if (spec_json.contains("head")) {
        const ordered_json& h = spec_json.at("head");
        spec.head.dense_layers = value_or<std::size_t>(h, "dense_layers", spec.head.dense_layers);
        spec.head.dense_width = value_or<std::size_t>(h, "dense_width", spec.head.dense_width);
    }
    if (mode == model::TrainingMode::adversarial) {
        if (lambda)
            spec.lambda = *lambda;
        else
            spec.lambda = value_or<double>(spec_json, "lambda", 0.6);
    }
    spec.emotion_classes = value_or<std::size_t>(spec_json, "emotion_classes", std::size_t{3});
    spec.confound_classes = value_or<std::size_t>(spec_json, "confound_classes", std::size_t{3});
    spec.validate();
    return spec;
}

std::vector<model::VariantSpec> analysis_normal_candidates(const ordered_json& config,
                                                           std::size_t acoustic_dim,
                                                           std::size_t lexical_dim) {
    return {parse_spec(config, model::TrainingMode::normal, std::nullopt, acoustic_dim,
                       lexical_dim)};
}

std::vector<model::VariantSpec> analysis_adversarial_candidates(const ordered_json& config,
                                                                std::size_t acoustic_dim,
                                                                std::size_t lexical_dim) {
    std::vector<double> lambdas{0.3, 0.6, 0.8};
    if (config.contains("lambda_grid")) {
        try {
            lambdas = config.at("lambda_grid").get<std::vector<double>>();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config key lambda_grid: ") + e.what());
        }
        if (lambdas.empty()) throw ConfigError("lambda_grid must be non-empty");
    }
    std::vector<model::VariantSpec> out;
    for (const double lambda : lambdas)
        out.push_back(parse_spec(config, model::TrainingMode::adversarial, lambda, acoustic_dim,
                                 lexical_dim));
    return out;
}

void write_output(const Invocation& inv, const std::string& relative_path,
                  const std::string& content) {
    const std::filesystem::path path = inv.out / relative_path;
    std::filesystem::create_directories(path.parent_path());
    data::write_text_atomic(path, content);
}

void write_config_lock(const Invocation& inv) {
    ordered_json lock;
    lock["config_hash"] = inv.config_hash;
    lock["config"] = inv.config;
    write_output(inv, "config.lock.json", lock.dump(2) + "\n");
}

}  // namespace dcfd::cli
