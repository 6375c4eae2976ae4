#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deconfound/data/labels.hpp"
#include "deconfound/features/embedding.hpp"
#include "deconfound/model/network.hpp"
#include "deconfound/train/optimizer.hpp"

namespace dcfd::train {

// A labeled sample with its model-ready inputs. The acoustic tensor is
// borrowed from the utterance; the lexical stream is embedded once up front.
struct PreparedSample {
    const data::LabeledSample* labeled = nullptr;
    const net::Tensor* acoustic = nullptr;  // null when the modality skips it
    std::optional<net::Tensor> lexical;     // [tokens x dim]
};

std::vector<PreparedSample> prepare_samples(std::span<const data::LabeledSample> samples,
                                            model::Modality modality,
                                            const features::EmbeddingTable* embeddings);

model::SampleInput input_for(const PreparedSample& s);

// Inverse train-class-frequency weights normalized to mean 1, over the
// emotion labels (confound = false) or confound labels (confound = true).
// A class with no training examples is a numeric error.
net::Tensor class_weights(std::span<const PreparedSample> train, std::size_t n_classes,
                          bool confound);
net::Tensor class_weights_from_labels(std::span<const int> labels, std::size_t n_classes);

struct TrainConfig {
    std::size_t max_epochs = 50;
    std::size_t patience = 5;
    std::size_t batch_size = 32;
    RmsPropConfig optimizer;
    // Adversarial checkpoints are admissible when the best epoch's validation
    // confound UAR lies within this half-width of chance (1 / classes).
    double chance_uar_tolerance = 0.05;
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    std::size_t jobs = 1;
};

struct EpochStats {
    double train_loss = 0.0;        // epoch mean of the per-sample joint loss
    double val_emotion_loss = 0.0;  // early-stopping monitor
    double val_emotion_uar = 0.0;
    std::optional<double> val_confound_uar;  // adversarial only
};

struct RunRecord {
    model::VariantSpec spec;
    std::uint64_t seed = 0;
    std::vector<EpochStats> trace;  // one entry per trained epoch
    std::size_t best_epoch = 0;     // 1-based; the restored weights' epoch
    bool admissible = true;         // adversarial: best epoch within the chance band
    model::NetworkParams best_params;

    std::vector<int> val_true, val_pred;  // emotion on validation, restored weights
    double val_emotion_uar = 0.0;

    std::vector<int> test_true, test_pred;  // emotion on test
    std::vector<std::vector<double>> test_emotion_probs;
    double test_emotion_uar = 0.0;

    // Adversarial only: the model's own confound head read out on test.
    std::vector<int> test_confound_true;
    std::vector<std::vector<double>> test_confound_probs;
    std::optional<double> test_confound_uar;
};

// Trains one variant once: weighted cross-entropy, RMSProp, patience-based
// early stopping on validation emotion loss, best-weight restore. For
// adversarial variants the confound loss (behind gradient reversal) is added
// to the emotion loss.
RunRecord train_run(const model::VariantSpec& spec, std::span<const PreparedSample> train,
                    std::span<const PreparedSample> validation,
                    std::span<const PreparedSample> test, const TrainConfig& config,
                    std::uint64_t seed);

// One run per config.seeds entry; runs are independent and may execute on
// config.jobs threads, but results always come back in seed order.
std::vector<RunRecord> train_seeds(const model::VariantSpec& spec,
                                   std::span<const PreparedSample> train,
                                   std::span<const PreparedSample> validation,
                                   std::span<const PreparedSample> test,
                                   const TrainConfig& config);

struct EnsembleResult {
    std::vector<int> test_true;
    std::vector<int> test_pred;  // argmax of seed-mean probabilities; ties -> lower index
    double test_uar = 0.0;
};

// Averages the seed runs' test probabilities. All runs must come from the
// same variant and identical test sets.
EnsembleResult ensemble_predict(std::span<const RunRecord> runs);

// Trains every candidate with config.seeds and picks a winner.
// Normal mode: highest mean validation emotion UAR. Adversarial mode:
// admissibility first (every seed's best checkpoint inside the chance band),
// then mean validation emotion UAR among admissible candidates; if none is
// admissible the search fails with a numeric error naming the nearest miss.
struct GridSelection {
    std::size_t index = 0;  // into the candidate list
    model::VariantSpec spec;
    std::vector<RunRecord> runs;  // the winning candidate's seed runs
    double mean_val_emotion_uar = 0.0;
};

GridSelection grid_search(std::span<const model::VariantSpec> candidates,
                          std::span<const PreparedSample> train,
                          std::span<const PreparedSample> validation,
                          std::span<const PreparedSample> test, const TrainConfig& config);

// How the confound is probed on a trained model.
//   retrain_head: freeze the embedding sub-network, train a fresh confound
//     head (head grid when the run used grid mode) with the standard recipe,
//     report its test UAR.
//   joint_head_readout: report the model's own confound head on test
//     (adversarial runs only).
enum class ProbeMode { retrain_head, joint_head_readout };

struct ProbeResult {
    ProbeMode mode = ProbeMode::retrain_head;
    double test_confound_uar = 0.0;
    model::HeadSpec head;  // retrain mode: the head selected by validation UAR
};

ProbeResult probe_confound(const RunRecord& run, std::span<const PreparedSample> train,
                           std::span<const PreparedSample> validation,
                           std::span<const PreparedSample> test, const TrainConfig& config,
                           ProbeMode mode, std::uint64_t seed);

// Append-free JSONL run ledger; rewriting the same runs yields byte-identical
// files. checkpoint_paths must be empty or match runs in length;
// config_hash_hex (the experiment config hash) is carried on every line when
// non-empty.
void write_run_ledger(const std::filesystem::path& path, std::span<const RunRecord> runs,
                      std::span<const std::string> checkpoint_paths,
                      const std::string& config_hash_hex = "");

struct LedgerEntry {
    std::string fingerprint_hex;
    std::string mode, target, modality;
    std::string spec_json;  // full variant spec, reparseable
    std::optional<double> lambda;
    std::uint64_t seed = 0;
    std::size_t best_epoch = 0;
    bool admissible = true;
    std::size_t epochs = 0;
    double val_emotion_uar = 0.0;
    double test_emotion_uar = 0.0;
    std::optional<double> test_confound_uar;
    std::string checkpoint;    // empty if none was recorded
    std::string config_hash;   // empty if none was recorded
};

std::vector<LedgerEntry> read_run_ledger(const std::filesystem::path& path);

}  // namespace dcfd::train
