#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "deconfound/data/splits.hpp"
#include "deconfound/data/synthetic.hpp"
#include "deconfound/eval/aps.hpp"
#include "deconfound/eval/transfer.hpp"
#include "deconfound/features/lexicon.hpp"
#include "deconfound/train/trainer.hpp"

namespace dcfd::analysis {

// A generated corpus bundled with everything the studies need: the
// duration-filtered view, resolved labels, the synthetic embedding table,
// and the PSS population mean used for binning (over the full filtered
// corpus so every protocol leg bins identically).
struct StudyCorpus {
    data::SyntheticConfig config;
    std::vector<data::Utterance> utterances;
    std::vector<const data::Utterance*> kept;
    std::vector<data::LabeledSample> labeled;
    features::EmbeddingTable embeddings;
    double pss_mean = 0.0;  // 0 when the confound is the spontaneity flag
};

StudyCorpus make_study_corpus(const data::SyntheticConfig& config, data::EmotionTarget target,
                              std::size_t embedding_dim);

// Stable storage for one split: prepared samples point into `labeled`,
// which points into the corpus' utterances.
struct PreparedSplit {
    std::vector<data::LabeledSample> labeled;
    std::vector<train::PreparedSample> prepared;
};

PreparedSplit make_prepared(std::span<const data::LabeledSample> samples,
                            model::Modality modality, const features::EmbeddingTable* table);

struct SplitTriple {
    PreparedSplit train, validation, test;
};

// Fold 0 of a k-fold speaker-independent plan over the corpus.
SplitTriple fold_split(const StudyCorpus& corpus, model::Modality modality, int k_folds,
                       std::uint64_t seed);

// In-domain deconfounding study: trains both families (each candidate list
// goes through the standard grid selection), then probes the confound on the
// frozen representations. Retrained-probe and joint-head readouts are means
// over the winning candidate's seed runs.
struct ProbeStudyResult {
    model::VariantSpec normal_spec, adversarial_spec;  // selected candidates
    std::vector<train::RunRecord> normal_runs, adversarial_runs;
    double normal_mean_test_uar = 0.0;  // seed-mean emotion UAR on test
    double adversarial_mean_test_uar = 0.0;
    double normal_ensemble_uar = 0.0;  // seed-averaged-probability ensembles
    double adversarial_ensemble_uar = 0.0;
    double normal_probe_uar = 0.0;       // retrained-head probe means
    double adversarial_probe_uar = 0.0;
    double adversarial_joint_uar = 0.0;  // own-confound-head readout mean
};

ProbeStudyResult probe_study(const StudyCorpus& corpus,
                             std::span<const model::VariantSpec> normal_candidates,
                             std::span<const model::VariantSpec> adversarial_candidates,
                             const train::TrainConfig& config, int k_folds,
                             std::uint64_t split_seed);

// Confound-transfer study: train on every level except `held_out_level`,
// test on that level. Seed-aligned target UARs feed the paired t-test; the
// ensemble comparison adds the per-speaker view.
struct TransferStudyResult {
    int held_out_level = 0;
    std::vector<double> normal_seed_uars, adversarial_seed_uars;
    double normal_mean_uar = 0.0, adversarial_mean_uar = 0.0;
    double delta = 0.0;  // adversarial mean - normal mean
    bool t_test_defined = false;
    eval::TTestResult t_test;  // paired across seeds
    eval::TransferResult ensemble_comparison;
};

TransferStudyResult transfer_study(const StudyCorpus& corpus,
                                   std::span<const model::VariantSpec> normal_candidates,
                                   std::span<const model::VariantSpec> adversarial_candidates,
                                   int held_out_level, double validation_fraction,
                                   const train::TrainConfig& config, std::uint64_t split_seed);

// Cross-corpus transfer: train and validate on the source corpus, test on
// the full target corpus. Structure mirrors the level-transfer study.
struct CrossCorpusStudyResult {
    std::vector<double> normal_seed_uars, adversarial_seed_uars;
    double normal_mean_uar = 0.0, adversarial_mean_uar = 0.0;
    double delta = 0.0;
    bool t_test_defined = false;
    eval::TTestResult t_test;  // paired across seeds
    eval::TransferResult ensemble_comparison;
};

CrossCorpusStudyResult cross_corpus_study(const StudyCorpus& source, const StudyCorpus& target,
                                          std::span<const model::VariantSpec> normal_candidates,
                                          std::span<const model::VariantSpec> adversarial_candidates,
                                          double validation_fraction,
                                          const train::TrainConfig& config,
                                          std::uint64_t split_seed);

// Cross-corpus APS study: both families train `runs_per_model` times
// (seeds 1..n) on the source corpus and vote on the target corpus; per-
// utterance preference scores are correlated with the lexical profile.
// Fewer than 15 runs per model is refused.
struct ApsStudyResult {
    std::size_t runs_per_model = 0;
    std::vector<eval::ApsRecord> records;
    std::vector<eval::ApsCorrelationRow> correlations;
};

ApsStudyResult aps_study(const StudyCorpus& source, const StudyCorpus& target,
                         const model::VariantSpec& normal_spec,
                         const model::VariantSpec& adversarial_spec,
                         const features::CategoryLexicon& lexicon,
                         const train::TrainConfig& config, std::size_t runs_per_model,
                         double validation_fraction, std::uint64_t split_seed);

// Per-confound-group emotion confusion shift between the two families'
// ensembles on a shared test split (percent, adversarial minus normal).
struct ConfusionDeltaResult {
    std::vector<int> levels;  // confound levels present in the test split
    std::vector<std::vector<double>> deltas;  // per level, row-major C_e x C_e
};

ConfusionDeltaResult confusion_delta_study(std::span<const data::LabeledSample> test_labeled,
                                           std::span<const train::RunRecord> normal_runs,
                                           std::span<const train::RunRecord> adversarial_runs);

}  // namespace dcfd::analysis
