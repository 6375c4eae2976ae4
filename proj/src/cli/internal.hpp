#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deconfound/data/synthetic.hpp"
#include "deconfound/model/variant.hpp"
#include "deconfound/train/trainer.hpp"

namespace dcfd::cli {

using ordered_json = nlohmann::ordered_json;

// One parsed invocation: the merged config (file first, then --set overrides,
// then the dedicated global flags) plus the derived output directory, seed,
// and config hash that stamp every artifact.
struct Invocation {
    ordered_json config;
    std::filesystem::path out;
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    std::string config_hash;  // hex of the canonical merged config
};

int cmd_synthesize(const Invocation& inv);
int cmd_featurize(const Invocation& inv);
int cmd_train(const Invocation& inv);
int cmd_evaluate(const Invocation& inv);
int cmd_analyze(const Invocation& inv);

// --- config plumbing -------------------------------------------------------

ordered_json load_config_file(const std::filesystem::path& path);

// Applies one "key=value" override; dotted keys descend into objects and the
// value is parsed as JSON (falling back to a plain string).
void apply_override(ordered_json& config, const std::string& assignment);

std::string hash_of_config(const ordered_json& config);

// Required/optional field access with config-error diagnostics.
const ordered_json& require(const ordered_json& config, const std::string& key);
std::string require_string(const ordered_json& config, const std::string& key);

data::SyntheticConfig parse_corpus(const ordered_json& j, std::uint64_t default_seed);
train::TrainConfig parse_train_config(const ordered_json& config, std::size_t jobs);

// Builds the variant from config["spec"] (+ mode/target/modality keys).
// Branch input dims of 0 are filled from the data (acoustic feature width /
// embedding dimension).
model::VariantSpec parse_spec(const ordered_json& config, model::TrainingMode mode,
                              std::optional<double> lambda, std::size_t acoustic_dim,
                              std::size_t lexical_dim);

// Candidate lists for the analysis studies: one normal spec and one
// adversarial spec per "lambda_grid" entry (default {0.3, 0.6, 0.8}).
std::vector<model::VariantSpec> analysis_normal_candidates(const ordered_json& config,
                                                           std::size_t acoustic_dim,
                                                           std::size_t lexical_dim);
std::vector<model::VariantSpec> analysis_adversarial_candidates(const ordered_json& config,
                                                                std::size_t acoustic_dim,
                                                                std::size_t lexical_dim);

// Writes `content` atomically under inv.out, creating directories as needed.
void write_output(const Invocation& inv, const std::string& relative_path,
                  const std::string& content);

// Stamps <out>/config.lock.json with the merged config and its hash.
void write_config_lock(const Invocation& inv);

}  // namespace dcfd::cli
