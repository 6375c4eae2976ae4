#include "deconfound/analysis/studies.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "deconfound/common.hpp"
#include "deconfound/eval/metrics.hpp"

namespace dcfd::analysis {
namespace {

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

model::Modality common_modality(std::span<const model::VariantSpec> normal,
                                std::span<const model::VariantSpec> adversarial) {
    if (normal.empty() || adversarial.empty())
        throw ConfigError("study: both candidate lists must be non-empty");
    const model::Modality modality = normal.front().modality;
    for (const auto& s : normal) {
        if (s.mode != model::TrainingMode::normal)
            throw ConfigError("study: the first candidate list must be normal-mode variants");
        if (s.modality != modality)
            throw ConfigError("study: all candidates must share one modality");
    }
    for (const auto& s : adversarial) {
        if (s.mode != model::TrainingMode::adversarial)
            throw ConfigError("study: the second candidate list must be adversarial variants");
        if (s.modality != modality)
            throw ConfigError("study: all candidates must share one modality");
    }
    return modality;
}

}  // namespace

StudyCorpus make_study_corpus(const data::SyntheticConfig& config, data::EmotionTarget target,
                              std::size_t embedding_dim) {
    StudyCorpus corpus{
        config,
        data::generate_synthetic_corpus(config),
        {},
        {},
        data::synthetic_embedding_table(embedding_dim,
                                        mix_seed(config.seed, fnv1a64("study.embeddings"))),
        0.0};
    corpus.kept = data::filter_by_duration(corpus.utterances);
    if (corpus.kept.empty())
        throw DataError("study corpus: duration filter removed every utterance");
    if (!config.spontaneity_confound) corpus.pss_mean = data::session_pss_mean(corpus.kept);
    corpus.labeled = data::label_utterances(corpus.kept, target, corpus.pss_mean);
    return corpus;
}

PreparedSplit make_prepared(std::span<const data::LabeledSample> samples,
                            model::Modality modality, const features::EmbeddingTable* table) {
    PreparedSplit split;
    split.labeled.assign(samples.begin(), samples.end());
    split.prepared = train::prepare_samples(split.labeled, modality, table);
    return split;
}

SplitTriple fold_split(const StudyCorpus& corpus, model::Modality modality, int k_folds,
                       std::uint64_t seed) {
    const auto plans = data::make_speaker_independent_folds(corpus.kept, k_folds, seed);
    const data::SplitPlan& plan = plans.front();
    auto subset = [&](const std::vector<std::size_t>& idx) {
        std::vector<data::LabeledSample> out;
        out.reserve(idx.size());
        for (const std::size_t i : idx) out.push_back(corpus.labeled[i]);
        return out;
    };
    SplitTriple triple;
    triple.train = make_prepared(subset(plan.train), modality, &corpus.embeddings);
    triple.validation = make_prepared(subset(plan.validation), modality, &corpus.embeddings);
    triple.test = make_prepared(subset(plan.test), modality, &corpus.embeddings);
    return triple;
}

ProbeStudyResult probe_study(const StudyCorpus& corpus,
                             std::span<const model::VariantSpec> normal_candidates,
                             std::span<const model::VariantSpec> adversarial_candidates,
                             const train::TrainConfig& config, int k_folds,
                             std::uint64_t split_seed) {
    const model::Modality modality = common_modality(normal_candidates, adversarial_candidates);
    const SplitTriple split = fold_split(corpus, modality, k_folds, split_seed);

    train::GridSelection normal =
        train::grid_search(normal_candidates, split.train.prepared, split.validation.prepared,
                           split.test.prepared, config);
    train::GridSelection adversarial =
        train::grid_search(adversarial_candidates, split.train.prepared,
                           split.validation.prepared, split.test.prepared, config);

    ProbeStudyResult res;
    res.normal_spec = normal.spec;
    res.adversarial_spec = adversarial.spec;

    std::vector<double> n_test, a_test, n_probe, a_probe, a_joint;
    for (const auto& run : normal.runs) {
        n_test.push_back(run.test_emotion_uar);
        n_probe.push_back(train::probe_confound(run, split.train.prepared,
                                                split.validation.prepared, split.test.prepared,
                                                config, train::ProbeMode::retrain_head, run.seed)
                              .test_confound_uar);
    }
    for (const auto& run : adversarial.runs) {
        a_test.push_back(run.test_emotion_uar);
        a_probe.push_back(train::probe_confound(run, split.train.prepared,
                                                split.validation.prepared, split.test.prepared,
                                                config, train::ProbeMode::retrain_head, run.seed)
                              .test_confound_uar);
        a_joint.push_back(train::probe_confound(run, split.train.prepared,
                                                split.validation.prepared, split.test.prepared,
                                                config, train::ProbeMode::joint_head_readout,
                                                run.seed)
                              .test_confound_uar);
    }

    res.normal_mean_test_uar = mean_of(n_test);
    res.adversarial_mean_test_uar = mean_of(a_test);
    res.normal_probe_uar = mean_of(n_probe);
    res.adversarial_probe_uar = mean_of(a_probe);
    res.adversarial_joint_uar = mean_of(a_joint);
    res.normal_ensemble_uar = train::ensemble_predict(normal.runs).test_uar;
    res.adversarial_ensemble_uar = train::ensemble_predict(adversarial.runs).test_uar;
    res.normal_runs = std::move(normal.runs);
    res.adversarial_runs = std::move(adversarial.runs);
    return res;
}

TransferStudyResult transfer_study(const StudyCorpus& corpus,
                                   std::span<const model::VariantSpec> normal_candidates,
                                   std::span<const model::VariantSpec> adversarial_candidates,
                                   int held_out_level, double validation_fraction,
                                   const train::TrainConfig& config, std::uint64_t split_seed) {
    const model::Modality modality = common_modality(normal_candidates, adversarial_candidates);
    auto [source, target] = data::partition_by_confound(corpus.labeled, held_out_level);

    // The confound head trains on the source-domain levels only, so its
    // classes are the dense re-indexing of the levels actually present.
    std::set<int> present_set;
    for (const auto& s : source) present_set.insert(s.confound);
    if (present_set.size() < 2)
        throw DataError("transfer study: source domain has fewer than two confound levels");
    std::map<int, int> remap;
    for (const int level : present_set)
        remap.emplace(level, static_cast<int>(remap.size()));
    for (auto& s : source) s.confound = remap.at(s.confound);
    // Target samples sit entirely at the held-out level; their confound
    // label is outside the trained classes and never used, so park it at 0.
    for (auto& s : target) s.confound = 0;

    auto [train_labeled, val_labeled] =
        data::split_train_validation(source, validation_fraction, split_seed);
    const PreparedSplit train_split = make_prepared(train_labeled, modality, &corpus.embeddings);
    const PreparedSplit val_split = make_prepared(val_labeled, modality, &corpus.embeddings);
    const PreparedSplit test_split = make_prepared(target, modality, &corpus.embeddings);

    auto adjusted = [&](std::span<const model::VariantSpec> specs) {
        std::vector<model::VariantSpec> out(specs.begin(), specs.end());
        for (auto& s : out) {
            s.confound_classes = present_set.size();
            s.validate();
        }
        return out;
    };
    const std::vector<model::VariantSpec> normal_adj = adjusted(normal_candidates);
    const std::vector<model::VariantSpec> adversarial_adj = adjusted(adversarial_candidates);

    train::GridSelection normal = train::grid_search(
        normal_adj, train_split.prepared, val_split.prepared, test_split.prepared, config);
    train::GridSelection adversarial = train::grid_search(
        adversarial_adj, train_split.prepared, val_split.prepared, test_split.prepared, config);

    TransferStudyResult res;
    res.held_out_level = held_out_level;
    for (const auto& run : normal.runs) res.normal_seed_uars.push_back(run.test_emotion_uar);
    for (const auto& run : adversarial.runs)
        res.adversarial_seed_uars.push_back(run.test_emotion_uar);
    res.normal_mean_uar = mean_of(res.normal_seed_uars);
    res.adversarial_mean_uar = mean_of(res.adversarial_seed_uars);
    res.delta = res.adversarial_mean_uar - res.normal_mean_uar;

    if (res.normal_seed_uars.size() >= 2) {
        try {
            res.t_test = eval::paired_t_test(res.adversarial_seed_uars, res.normal_seed_uars);
            res.t_test_defined = true;
        } catch (const NumericError&) {
            res.t_test_defined = false;
        }
    }

    eval::TransferInputs inputs;
    inputs.truth = normal.runs.front().test_true;
    inputs.normal_pred = train::ensemble_predict(normal.runs).test_pred;
    inputs.adversarial_pred = train::ensemble_predict(adversarial.runs).test_pred;
    for (const auto& s : test_split.labeled) inputs.speakers.push_back(s.utt->speaker_id);
    inputs.classes = normal.spec.emotion_classes;
    res.ensemble_comparison = eval::transfer_compare(inputs);
    return res;
}

CrossCorpusStudyResult cross_corpus_study(const StudyCorpus& source, const StudyCorpus& target,
                                          std::span<const model::VariantSpec> normal_candidates,
                                          std::span<const model::VariantSpec> adversarial_candidates,
                                          double validation_fraction,
                                          const train::TrainConfig& config,
                                          std::uint64_t split_seed) {
    const model::Modality modality = common_modality(normal_candidates, adversarial_candidates);
    const std::size_t confound_classes = adversarial_candidates.front().confound_classes;

    auto [train_labeled, val_labeled] =
        data::split_train_validation(source.labeled, validation_fraction, split_seed);
    std::vector<data::LabeledSample> target_labeled = target.labeled;
    // The target corpus' confound annotation may not line up with the source
    // classes the head trained on; out-of-range labels are parked at 0 (the
    // target side only contributes emotion metrics).
    for (auto& s : target_labeled)
        if (s.confound < 0 || static_cast<std::size_t>(s.confound) >= confound_classes)
            s.confound = 0;

    const PreparedSplit train_split = make_prepared(train_labeled, modality, &source.embeddings);
    const PreparedSplit val_split = make_prepared(val_labeled, modality, &source.embeddings);
    const PreparedSplit test_split = make_prepared(target_labeled, modality, &source.embeddings);

    train::GridSelection normal = train::grid_search(
        normal_candidates, train_split.prepared, val_split.prepared, test_split.prepared, config);
    train::GridSelection adversarial =
        train::grid_search(adversarial_candidates, train_split.prepared, val_split.prepared,
                           test_split.prepared, config);

    CrossCorpusStudyResult res;
    for (const auto& run : normal.runs) res.normal_seed_uars.push_back(run.test_emotion_uar);
    for (const auto& run : adversarial.runs)
        res.adversarial_seed_uars.push_back(run.test_emotion_uar);
    res.normal_mean_uar = mean_of(res.normal_seed_uars);
    res.adversarial_mean_uar = mean_of(res.adversarial_seed_uars);
    res.delta = res.adversarial_mean_uar - res.normal_mean_uar;
    if (res.normal_seed_uars.size() >= 2) {
        try {
            res.t_test = eval::paired_t_test(res.adversarial_seed_uars, res.normal_seed_uars);
            res.t_test_defined = true;
        } catch (const NumericError&) {
            res.t_test_defined = false;
        }
    }

    eval::TransferInputs inputs;
    inputs.truth = normal.runs.front().test_true;
    inputs.normal_pred = train::ensemble_predict(normal.runs).test_pred;
    inputs.adversarial_pred = train::ensemble_predict(adversarial.runs).test_pred;
    for (const auto& s : test_split.labeled) inputs.speakers.push_back(s.utt->speaker_id);
    inputs.classes = normal.spec.emotion_classes;
    res.ensemble_comparison = eval::transfer_compare(inputs);
    return res;
}

ApsStudyResult aps_study(const StudyCorpus& source, const StudyCorpus& target,
                         const model::VariantSpec& normal_spec,
                         const model::VariantSpec& adversarial_spec,
                         const features::CategoryLexicon& lexicon,
                         const train::TrainConfig& config, std::size_t runs_per_model,
                         double validation_fraction, std::uint64_t split_seed) {
    if (runs_per_model < 15)
        throw ConfigError("aps_study: the score needs at least 15 runs per model");
    const model::VariantSpec normal_list[] = {normal_spec};
    const model::VariantSpec adversarial_list[] = {adversarial_spec};
    const model::Modality modality = common_modality(normal_list, adversarial_list);

    auto [train_labeled, val_labeled] =
        data::split_train_validation(source.labeled, validation_fraction, split_seed);
    // The source corpus' embedding table is the shared lexical resource for
    // both corpora (identical closed vocabulary).
    const PreparedSplit train_split = make_prepared(train_labeled, modality, &source.embeddings);
    const PreparedSplit val_split = make_prepared(val_labeled, modality, &source.embeddings);
    const PreparedSplit test_split = make_prepared(target.labeled, modality, &source.embeddings);

    train::TrainConfig run_config = config;
    run_config.seeds.clear();
    for (std::size_t s = 1; s <= runs_per_model; ++s) run_config.seeds.push_back(s);

    const std::vector<train::RunRecord> normal_runs = train::train_seeds(
        normal_spec, train_split.prepared, val_split.prepared, test_split.prepared, run_config);
    const std::vector<train::RunRecord> adversarial_runs =
        train::train_seeds(adversarial_spec, train_split.prepared, val_split.prepared,
                           test_split.prepared, run_config);

    ApsStudyResult res;
    res.runs_per_model = runs_per_model;
    const std::size_t n = test_split.prepared.size();
    res.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t normal_correct = 0, adversarial_correct = 0;
        for (const auto& run : normal_runs)
            if (run.test_pred[i] == run.test_true[i]) ++normal_correct;
        for (const auto& run : adversarial_runs)
            if (run.test_pred[i] == run.test_true[i]) ++adversarial_correct;

        const data::Utterance& utt = *test_split.labeled[i].utt;
        eval::ApsRecord rec;
        rec.utterance_id = utt.id;
        rec.aps = eval::aps(adversarial_correct, runs_per_model, normal_correct, runs_per_model);
        rec.lexical = features::lexical_category_vector(utt.tokens, lexicon, utt.duration_s);
        res.records.push_back(std::move(rec));
    }
    res.correlations = eval::aps_correlation_report(res.records);
    return res;
}

ConfusionDeltaResult confusion_delta_study(std::span<const data::LabeledSample> test_labeled,
                                           std::span<const train::RunRecord> normal_runs,
                                           std::span<const train::RunRecord> adversarial_runs) {
    const train::EnsembleResult normal = train::ensemble_predict(normal_runs);
    const train::EnsembleResult adversarial = train::ensemble_predict(adversarial_runs);
    if (normal.test_true != adversarial.test_true)
        throw DataError("confusion_delta_study: the families saw different test sets");
    if (normal.test_true.size() != test_labeled.size())
        throw DataError("confusion_delta_study: labeled test set does not match the runs");
    for (std::size_t i = 0; i < test_labeled.size(); ++i)
        if (test_labeled[i].emotion != normal.test_true[i])
            throw DataError("confusion_delta_study: label order mismatch at index " +
                            std::to_string(i));

    const std::size_t classes = normal_runs.front().spec.emotion_classes;
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < test_labeled.size(); ++i)
        groups[test_labeled[i].confound].push_back(i);

    ConfusionDeltaResult res;
    for (const auto& [level, idx] : groups) {
        eval::ConfusionMatrix cm_normal(classes), cm_adversarial(classes);
        for (const std::size_t i : idx) {
            cm_normal.add(static_cast<std::size_t>(normal.test_true[i]),
                          static_cast<std::size_t>(normal.test_pred[i]));
            cm_adversarial.add(static_cast<std::size_t>(adversarial.test_true[i]),
                               static_cast<std::size_t>(adversarial.test_pred[i]));
        }
        res.levels.push_back(level);
        res.deltas.push_back(eval::confusion_delta(cm_normal, cm_adversarial));
    }
    return res;
}

}  // namespace dcfd::analysis
