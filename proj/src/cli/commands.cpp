#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "deconfound/analysis/studies.hpp"
#include "deconfound/common.hpp"
#include "deconfound/data/labels.hpp"
#include "deconfound/data/manifest.hpp"
#include "deconfound/data/splits.hpp"
#include "deconfound/data/synthetic.hpp"
#include "deconfound/eval/metrics.hpp"
#include "deconfound/eval/report.hpp"
#include "deconfound/eval/stats.hpp"
#include "deconfound/features/embedding.hpp"
#include "deconfound/features/lexicon.hpp"
#include "deconfound/features/mfb.hpp"
#include "deconfound/model/checkpoint.hpp"
#include "deconfound/model/serialize.hpp"
#include "deconfound/train/parallel.hpp"
#include "deconfound/train/trainer.hpp"
#include "internal.hpp"

namespace dcfd::cli {

namespace {

template <typename T>
T config_or(const ordered_json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const std::exception& e) {
        throw ConfigError("config key " + key + ": " + e.what());
    }
}

std::string fmt(double v, int precision = 3) { return eval::format_double(v, precision); }

std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(
        std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

// Manifest-backed inputs shared by train/evaluate/analyze q6.
struct LoadedData {
    std::vector<data::Utterance> utterances;
    std::vector<const data::Utterance*> kept;
    std::optional<features::EmbeddingTable> embeddings;
    std::size_t acoustic_dim = 0;
    std::size_t lexical_dim = 0;
};

LoadedData load_data(const Invocation& inv, const std::string& manifest_key) {
    LoadedData d;
    d.utterances = data::read_manifest(require_string(inv.config, manifest_key), true);
    d.kept = data::filter_by_duration(d.utterances);
    if (d.kept.empty())
        throw DataError("manifest has no utterances inside the duration range");
    for (const data::Utterance* u : d.kept) {
        if (u->acoustic) {
            d.acoustic_dim = u->acoustic->shape()[1];
            break;
        }
    }
    if (inv.config.contains("embedding_file")) {
        d.embeddings = features::load_embedding_table(require_string(inv.config, "embedding_file"));
        d.lexical_dim = d.embeddings->dim();
    }
    return d;
}

bool corpus_has_pss(std::span<const data::Utterance* const> kept) {
    for (const data::Utterance* u : kept)
        if (std::holds_alternative<data::PssScore>(u->confound)) return true;
    return false;
}

// Confound cardinality of the data (3 for PSS bins, 2 for spontaneity);
// 0 when no utterance carries an annotation.
std::size_t data_confound_classes(std::span<const data::Utterance* const> kept) {
    for (const data::Utterance* u : kept)
        if (!std::holds_alternative<std::monostate>(u->confound))
            return static_cast<std::size_t>(data::confound_class_count(*u));
    return 0;
}

data::EmotionTarget target_from_config(const ordered_json& config) {
    return model::emotion_target_from_string(
        config_or<std::string>(config, "target", "activation"));
}

std::filesystem::path resolve_against(const std::filesystem::path& base,
                                      const std::filesystem::path& p) {
    return p.is_relative() ? base / p : p;
}

}  // namespace

// --- synthesize -------------------------------------------------------------

int cmd_synthesize(const Invocation& inv) {
    const ordered_json corpus_json =
        inv.config.contains("corpus") ? inv.config.at("corpus") : ordered_json::object();
    const data::SyntheticConfig cfg = parse_corpus(corpus_json, inv.seed);
    std::vector<data::Utterance> utterances = data::generate_synthetic_corpus(cfg);

    const auto embedding_dim = config_or<std::size_t>(inv.config, "embedding_dim", 16);
    const features::EmbeddingTable table = data::synthetic_embedding_table(embedding_dim, cfg.seed);

    std::filesystem::create_directories(inv.out);
    data::write_manifest(inv.out / "manifest.jsonl", utterances, "features");
    features::save_embedding_table(inv.out / "embeddings.txt", table);
    write_config_lock(inv);

    std::cout << "synthesized " << utterances.size() << " utterances from " << cfg.speakers
              << " speakers -> " << (inv.out / "manifest.jsonl").string() << "\n";
    return 0;
}

// --- featurize --------------------------------------------------------------

int cmd_featurize(const Invocation& inv) {
    const std::filesystem::path manifest_path = require_string(inv.config, "manifest");
    std::vector<data::Utterance> utterances = data::read_manifest(manifest_path, true);
    const std::filesystem::path base = manifest_path.parent_path();

    std::size_t extracted = 0;
    for (data::Utterance& utt : utterances) {
        if (!utt.acoustic && !utt.acoustic_path.empty()) {
            const std::filesystem::path p = resolve_against(base, utt.acoustic_path);
            if (p.extension() != ".wav")
                throw DataError("utterance '" + utt.id + "': unsupported acoustic file " +
                                p.string());
            utt.acoustic = features::compute_mfb(data::read_wav(p));
            ++extracted;
        }
        // Every inline tensor is re-written (normalized) under the output
        // directory, so stale input-relative paths must not survive.
        if (utt.acoustic) utt.acoustic_path.clear();
    }

    std::map<std::string, std::vector<net::Tensor*>> by_session;
    for (data::Utterance& utt : utterances)
        if (utt.acoustic) by_session[utt.session_id].push_back(&*utt.acoustic);
    features::znormalize(by_session);

    if (inv.config.contains("lexicon")) {
        const features::CategoryLexicon lexicon =
            features::load_lexicon(require_string(inv.config, "lexicon"));
        std::string lines;
        for (const data::Utterance& utt : utterances) {
            const features::LexicalFeatureVector v =
                features::lexical_category_vector(utt.tokens, lexicon, utt.duration_s);
            ordered_json row;
            row["id"] = utt.id;
            for (std::size_t i = 0; i < features::kLexicalFeatureCount; ++i)
                row[features::lexical_feature_names()[i]] = v.values[i];
            lines += row.dump();
            lines += '\n';
        }
        write_output(inv, "lexical.jsonl", lines);
    }

    std::filesystem::create_directories(inv.out);
    data::write_manifest(inv.out / "manifest.jsonl", utterances, "features");
    write_config_lock(inv);

    std::cout << "featurized " << extracted << " waveform(s), normalized "
              << by_session.size() << " session(s) -> "
              << (inv.out / "manifest.jsonl").string() << "\n";
    return 0;
}

// --- train ------------------------------------------------------------------

int cmd_train(const Invocation& inv) {
    const LoadedData d = load_data(inv, "manifest");
    const data::EmotionTarget target = target_from_config(inv.config);
    const model::TrainingMode mode = model::training_mode_from_string(
        config_or<std::string>(inv.config, "mode", "normal"));
    const model::Modality modality = model::modality_from_string(
        config_or<std::string>(inv.config, "modality", "multimodal"));

    const int folds = config_or<int>(inv.config, "folds", 5);
    const int fold = config_or<int>(inv.config, "fold", 0);
    if (folds < 2) throw ConfigError("folds must be >= 2");
    if (fold < 0 || fold >= folds) throw ConfigError("fold must lie in [0, folds)");

    const std::vector<data::SplitPlan> plans =
        data::make_speaker_independent_folds(d.kept, folds, inv.seed);
    const data::SplitPlan& plan = plans[static_cast<std::size_t>(fold)];

    const auto subset = [&](const std::vector<std::size_t>& idx) {
        std::vector<const data::Utterance*> out;
        out.reserve(idx.size());
        for (const std::size_t i : idx) out.push_back(d.kept[i]);
        return out;
    };
    const std::vector<const data::Utterance*> train_utts = subset(plan.train);
    const std::vector<const data::Utterance*> val_utts = subset(plan.validation);
    const std::vector<const data::Utterance*> test_utts = subset(plan.test);

    // PSS bins use the fold's training sessions as the population.
    const double pss_mean =
        corpus_has_pss(d.kept) ? data::session_pss_mean(train_utts) : 0.0;
    const std::vector<data::LabeledSample> train_labeled =
        data::label_utterances(train_utts, target, pss_mean);
    const std::vector<data::LabeledSample> val_labeled =
        data::label_utterances(val_utts, target, pss_mean);
    const std::vector<data::LabeledSample> test_labeled =
        data::label_utterances(test_utts, target, pss_mean);

    const features::EmbeddingTable* table = d.embeddings ? &*d.embeddings : nullptr;
    const std::vector<train::PreparedSample> train_prepared =
        train::prepare_samples(train_labeled, modality, table);
    const std::vector<train::PreparedSample> val_prepared =
        train::prepare_samples(val_labeled, modality, table);
    const std::vector<train::PreparedSample> test_prepared =
        train::prepare_samples(test_labeled, modality, table);

    const train::TrainConfig tc = parse_train_config(inv.config, inv.jobs);
    const std::size_t n_confound = data_confound_classes(d.kept);

    std::vector<train::RunRecord> runs;
    if (config_or<bool>(inv.config, "grid", false)) {
        const std::vector<model::VariantSpec> candidates = model::enumerate_grid(
            mode, target, modality, d.acoustic_dim, d.lexical_dim, 3,
            n_confound == 0 ? 3 : n_confound);
        train::GridSelection selection =
            train::grid_search(candidates, train_prepared, val_prepared, test_prepared, tc);
        std::cout << "selected grid point " << selection.index << "/" << candidates.size()
                  << ": " << selection.spec.canonical_string() << " (mean val UAR "
                  << fmt(selection.mean_val_emotion_uar) << ")\n";
        runs = std::move(selection.runs);
    } else {
        model::VariantSpec spec =
            parse_spec(inv.config, mode, std::nullopt, d.acoustic_dim, d.lexical_dim);
        const bool user_set_classes =
            inv.config.contains("spec") && inv.config.at("spec").contains("confound_classes");
        if (!user_set_classes && n_confound != 0) {
            spec.confound_classes = n_confound;
            spec.validate();
        }
        runs = train::train_seeds(spec, train_prepared, val_prepared, test_prepared, tc);
    }

    std::filesystem::create_directories(inv.out / "checkpoints");
    std::vector<std::string> checkpoint_paths;
    checkpoint_paths.reserve(runs.size());
    for (const train::RunRecord& run : runs) {
        const std::string rel = "checkpoints/" + to_hex(run.spec.fingerprint()) + "_seed" +
                                std::to_string(run.seed) + ".ckpt";
        model::save_checkpoint(inv.out / rel, run.best_params);
        checkpoint_paths.push_back(rel);
    }
    train::write_run_ledger(inv.out / "runs.jsonl", runs, checkpoint_paths, inv.config_hash);
    write_config_lock(inv);

    const train::EnsembleResult ensemble = train::ensemble_predict(runs);
    eval::TextTable table_out({"seed", "epochs", "best", "val uar", "test uar", "admissible"});
    for (const train::RunRecord& run : runs)
        table_out.add_row({std::to_string(run.seed), std::to_string(run.trace.size()),
                           std::to_string(run.best_epoch), fmt(run.val_emotion_uar),
                           fmt(run.test_emotion_uar), run.admissible ? "yes" : "no"});
    std::cout << table_out.str() << "ensemble test UAR " << fmt(ensemble.test_uar) << "\n"
              << "ledger: " << (inv.out / "runs.jsonl").string() << "\n";
    return 0;
}

// --- evaluate ---------------------------------------------------------------

int cmd_evaluate(const Invocation& inv) {
    const std::filesystem::path ledger_path = require_string(inv.config, "ledger");
    const std::vector<train::LedgerEntry> entries = train::read_run_ledger(ledger_path);
    const std::filesystem::path ledger_dir = ledger_path.parent_path();

    std::vector<model::VariantSpec> specs;
    specs.reserve(entries.size());
    for (const train::LedgerEntry& e : entries) {
        if (e.target != entries.front().target)
            throw ConfigError("ledger mixes emotion targets; evaluate them separately");
        if (e.checkpoint.empty())
            throw DataError("ledger entry for seed " + std::to_string(e.seed) +
                            " records no checkpoint");
        specs.push_back(model::variant_from_json(e.spec_json));
    }

    const LoadedData d = load_data(inv, "manifest");
    const data::EmotionTarget target =
        model::emotion_target_from_string(entries.front().target);
    const double pss_mean = corpus_has_pss(d.kept) ? data::session_pss_mean(d.kept) : 0.0;
    const std::vector<data::LabeledSample> labeled =
        data::label_utterances(d.kept, target, pss_mean);
    const features::EmbeddingTable* table = d.embeddings ? &*d.embeddings : nullptr;

    // One prepared view per distinct modality; preparation raises the
    // modality error when the manifest lacks a stream a model needs.
    std::map<model::Modality, std::vector<train::PreparedSample>> prepared;
    for (const model::VariantSpec& spec : specs)
        if (!prepared.count(spec.modality))
            prepared.emplace(spec.modality, train::prepare_samples(labeled, spec.modality, table));

    std::vector<int> truth;
    truth.reserve(labeled.size());
    for (const data::LabeledSample& s : labeled) truth.push_back(s.emotion);

    std::vector<std::vector<std::vector<double>>> probs(entries.size());
    std::vector<double> run_uars(entries.size(), 0.0);
    train::parallel_for(entries.size(), inv.jobs, [&](std::size_t i) {
        const model::VariantSpec& spec = specs[i];
        const model::NetworkParams params = model::load_checkpoint(
            resolve_against(ledger_dir, entries[i].checkpoint), spec);
        const std::vector<train::PreparedSample>& samples = prepared.at(spec.modality);
        std::vector<int> preds;
        preds.reserve(samples.size());
        probs[i].reserve(samples.size());
        for (const train::PreparedSample& s : samples) {
            const model::ForwardOutput out = model::predict(spec, params, train::input_for(s));
            probs[i].push_back(out.emotion_probs.values());
            preds.push_back(static_cast<int>(argmax(probs[i].back())));
        }
        run_uars[i] = eval::uar_from_labels(truth, preds, spec.emotion_classes);
    });

    // Seed-averaged ensemble per distinct model fingerprint.
    std::vector<std::string> fingerprint_order;
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        auto [it, inserted] = groups.try_emplace(entries[i].fingerprint_hex);
        if (inserted) fingerprint_order.push_back(entries[i].fingerprint_hex);
        it->second.push_back(i);
    }

    ordered_json report;
    report["manifest"] = require_string(inv.config, "manifest");
    report["config_hash"] = inv.config_hash;
    report["runs"] = ordered_json::array();
    eval::TextTable run_table({"model", "mode", "seed", "test uar"});
    for (std::size_t i = 0; i < entries.size(); ++i) {
        ordered_json row;
        row["fingerprint"] = entries[i].fingerprint_hex;
        row["mode"] = entries[i].mode;
        if (entries[i].lambda) row["lambda"] = *entries[i].lambda;
        row["seed"] = entries[i].seed;
        row["test_emotion_uar"] = run_uars[i];
        report["runs"].push_back(std::move(row));
        run_table.add_row({entries[i].fingerprint_hex.substr(0, 8), entries[i].mode,
                           std::to_string(entries[i].seed), fmt(run_uars[i])});
    }

    report["ensembles"] = ordered_json::array();
    eval::TextTable ens_table({"model", "mode", "runs", "ensemble uar"});
    for (const std::string& fp : fingerprint_order) {
        const std::vector<std::size_t>& group = groups.at(fp);
        const std::size_t n = probs[group.front()].size();
        const std::size_t classes = specs[group.front()].emotion_classes;
        std::vector<int> preds(n);
        for (std::size_t s = 0; s < n; ++s) {
            std::vector<double> mean(classes, 0.0);
            for (const std::size_t i : group)
                for (std::size_t c = 0; c < classes; ++c) mean[c] += probs[i][s][c];
            for (double& v : mean) v /= static_cast<double>(group.size());
            preds[s] = static_cast<int>(argmax(mean));
        }
        const double ens_uar = eval::uar_from_labels(truth, preds, classes);
        ordered_json row;
        row["fingerprint"] = fp;
        row["mode"] = entries[group.front()].mode;
        row["runs"] = group.size();
        row["ensemble_uar"] = ens_uar;
        report["ensembles"].push_back(std::move(row));
        ens_table.add_row({fp.substr(0, 8), entries[group.front()].mode,
                           std::to_string(group.size()), fmt(ens_uar)});
    }

    const std::string text = "evaluation on " + require_string(inv.config, "manifest") + "\n\n" +
                             run_table.str() + "\n" + ens_table.str();
    write_output(inv, "evaluation.txt", text);
    write_output(inv, "evaluation.json", report.dump(2) + "\n");
    write_config_lock(inv);
    std::cout << text;
    return 0;
}

// --- analyze ----------------------------------------------------------------

namespace {

analysis::StudyCorpus study_corpus(const Invocation& inv, const std::string& key) {
    const data::SyntheticConfig cfg = parse_corpus(require(inv.config, key), inv.seed);
    const auto embedding_dim = config_or<std::size_t>(inv.config, "embedding_dim", 16);
    return analysis::make_study_corpus(cfg, target_from_config(inv.config), embedding_dim);
}

// Candidate pair for a study corpus; confound cardinality follows the corpus
// unless the config pins it explicitly.
struct Candidates {
    std::vector<model::VariantSpec> normal;
    std::vector<model::VariantSpec> adversarial;
};

Candidates study_candidates(const Invocation& inv, const analysis::StudyCorpus& corpus) {
    Candidates c;
    c.normal = analysis_normal_candidates(inv.config, corpus.config.acoustic_dim,
                                          corpus.embeddings.dim());
    c.adversarial = analysis_adversarial_candidates(inv.config, corpus.config.acoustic_dim,
                                                    corpus.embeddings.dim());
    const bool user_set = inv.config.contains("spec") &&
                          inv.config.at("spec").contains("confound_classes");
    if (!user_set && corpus.config.spontaneity_confound) {
        for (std::vector<model::VariantSpec>* list : {&c.normal, &c.adversarial})
            for (model::VariantSpec& spec : *list) {
                spec.confound_classes = 2;
                spec.validate();
            }
    }
    return c;
}

model::Modality shared_modality(const Candidates& c) {
    const model::Modality m = c.normal.front().modality;
    for (const std::vector<model::VariantSpec>* list : {&c.normal, &c.adversarial})
        for (const model::VariantSpec& spec : *list)
            if (spec.modality != m)
                throw ConfigError("analysis candidates must share one modality");
    return m;
}

void emit(const Invocation& inv, const std::string& question, const std::string& text,
          const ordered_json& json_report) {
    write_output(inv, question + ".txt", text);
    write_output(inv, question + ".json", json_report.dump(2) + "\n");
    write_config_lock(inv);
    std::cout << text;
}

ordered_json t_test_json(bool defined, const eval::TTestResult& t) {
    ordered_json j;
    j["defined"] = defined;
    if (defined) {
        j["t"] = t.t;
        j["df"] = t.df;
        j["p"] = t.p;
    }
    return j;
}

int analyze_probe(const Invocation& inv) {
    const analysis::StudyCorpus corpus = study_corpus(inv, "corpus");
    const Candidates c = study_candidates(inv, corpus);
    const train::TrainConfig tc = parse_train_config(inv.config, inv.jobs);
    const int folds = config_or<int>(inv.config, "folds", 5);
    const analysis::ProbeStudyResult res =
        analysis::probe_study(corpus, c.normal, c.adversarial, tc, folds, inv.seed);

    eval::TextTable t({"model", "emotion uar", "ensemble uar", "probe uar", "joint uar"});
    t.add_row({"normal", fmt(res.normal_mean_test_uar), fmt(res.normal_ensemble_uar),
               fmt(res.normal_probe_uar), "n/a"});
    t.add_row({"adversarial", fmt(res.adversarial_mean_test_uar),
               fmt(res.adversarial_ensemble_uar), fmt(res.adversarial_probe_uar),
               fmt(res.adversarial_joint_uar)});
    const std::string text =
        "q1: in-domain emotion performance and confound leakage\n\n" + t.str();

    ordered_json j;
    j["question"] = "q1";
    j["normal"] = {{"spec", res.normal_spec.canonical_string()},
                   {"mean_test_uar", res.normal_mean_test_uar},
                   {"ensemble_uar", res.normal_ensemble_uar},
                   {"probe_uar", res.normal_probe_uar}};
    j["adversarial"] = {{"spec", res.adversarial_spec.canonical_string()},
                        {"mean_test_uar", res.adversarial_mean_test_uar},
                        {"ensemble_uar", res.adversarial_ensemble_uar},
                        {"probe_uar", res.adversarial_probe_uar},
                        {"joint_head_uar", res.adversarial_joint_uar}};
    emit(inv, "q1", text, j);
    return 0;
}

int analyze_ledger_delta(const Invocation& inv) {
    const std::vector<train::LedgerEntry> normal =
        train::read_run_ledger(require_string(inv.config, "normal_ledger"));
    const std::vector<train::LedgerEntry> adversarial =
        train::read_run_ledger(require_string(inv.config, "adversarial_ledger"));

    const auto mean_uar = [](std::span<const train::LedgerEntry> entries) {
        double sum = 0.0;
        for (const train::LedgerEntry& e : entries) sum += e.test_emotion_uar;
        return sum / static_cast<double>(entries.size());
    };
    const double normal_mean = mean_uar(normal);
    const double adv_mean = mean_uar(adversarial);

    std::map<double, std::vector<double>> by_lambda;
    for (const train::LedgerEntry& e : adversarial)
        if (e.lambda) by_lambda[*e.lambda].push_back(e.test_emotion_uar);

    // Paired across seeds both families share.
    std::map<std::uint64_t, double> normal_by_seed;
    for (const train::LedgerEntry& e : normal) normal_by_seed[e.seed] = e.test_emotion_uar;
    std::vector<double> paired_normal, paired_adv;
    for (const train::LedgerEntry& e : adversarial) {
        const auto it = normal_by_seed.find(e.seed);
        if (it != normal_by_seed.end()) {
            paired_adv.push_back(e.test_emotion_uar);
            paired_normal.push_back(it->second);
        }
    }
    bool t_defined = false;
    eval::TTestResult t_test;
    if (paired_adv.size() >= 2) {
        try {
            t_test = eval::paired_t_test(paired_adv, paired_normal);
            t_defined = true;
        } catch (const NumericError&) {
        }
    }

    eval::TextTable t({"model", "runs", "mean test uar"});
    t.add_row({"normal", std::to_string(normal.size()), fmt(normal_mean)});
    t.add_row({"adversarial", std::to_string(adversarial.size()), fmt(adv_mean)});
    for (const auto& [lambda, uars] : by_lambda) {
        double sum = 0.0;
        for (const double u : uars) sum += u;
        t.add_row({"adversarial lambda=" + fmt(lambda, 2), std::to_string(uars.size()),
                   fmt(sum / static_cast<double>(uars.size()))});
    }
    std::string text = "q2: emotion-performance cost of adversarial training\n\n" + t.str() +
                       "\ndelta (adversarial - normal): " + fmt(adv_mean - normal_mean) + "\n";
    if (t_defined)
        text += "paired across " + std::to_string(paired_adv.size()) +
                " shared seeds: t=" + fmt(t_test.t) + ", df=" + std::to_string(t_test.df) +
                ", p=" + fmt(t_test.p) + "\n";
    else
        text += "paired t-test undefined (fewer than two shared seeds or degenerate pairs)\n";

    ordered_json j;
    j["question"] = "q2";
    j["normal_mean_test_uar"] = normal_mean;
    j["adversarial_mean_test_uar"] = adv_mean;
    j["delta"] = adv_mean - normal_mean;
    j["by_lambda"] = ordered_json::object();
    for (const auto& [lambda, uars] : by_lambda) {
        double sum = 0.0;
        for (const double u : uars) sum += u;
        j["by_lambda"][fmt(lambda, 2)] = sum / static_cast<double>(uars.size());
    }
    j["paired_t_test"] = t_test_json(t_defined, t_test);
    emit(inv, "q2", text, j);
    return 0;
}

int analyze_confusion(const Invocation& inv) {
    const analysis::StudyCorpus corpus = study_corpus(inv, "corpus");
    const Candidates c = study_candidates(inv, corpus);
    const train::TrainConfig tc = parse_train_config(inv.config, inv.jobs);
    const int folds = config_or<int>(inv.config, "folds", 5);
    const analysis::SplitTriple split =
        analysis::fold_split(corpus, shared_modality(c), folds, inv.seed);

    const train::GridSelection normal_sel = train::grid_search(
        c.normal, split.train.prepared, split.validation.prepared, split.test.prepared, tc);
    const train::GridSelection adv_sel = train::grid_search(
        c.adversarial, split.train.prepared, split.validation.prepared, split.test.prepared, tc);
    const analysis::ConfusionDeltaResult res =
        analysis::confusion_delta_study(split.test.labeled, normal_sel.runs, adv_sel.runs);

    const std::vector<std::string> class_names = {"low", "mid", "high"};
    const std::size_t classes = normal_sel.spec.emotion_classes;
    std::string text = "q3: emotion-confusion shift per confound group (percent, adversarial - "
                       "normal)\n";
    ordered_json j;
    j["question"] = "q3";
    j["levels"] = res.levels;
    j["deltas"] = ordered_json::array();
    for (std::size_t g = 0; g < res.levels.size(); ++g) {
        eval::TextTable t({"true \\ pred", "low", "mid", "high"});
        for (std::size_t r = 0; r < classes; ++r) {
            std::vector<std::string> row{class_names[r]};
            for (std::size_t col = 0; col < classes; ++col)
                row.push_back(fmt(res.deltas[g][r * classes + col], 1));
            t.add_row(std::move(row));
        }
        text += "\nconfound level " + std::to_string(res.levels[g]) + ":\n" + t.str();
        j["deltas"].push_back(res.deltas[g]);
    }
    emit(inv, "q3", text, j);
    return 0;
}

ordered_json transfer_result_json(const eval::TransferResult& r) {
    ordered_json j;
    j["normal_uar"] = r.normal_uar;
    j["adversarial_uar"] = r.adversarial_uar;
    j["delta"] = r.delta;
    j["speakers"] = r.speakers.size();
    j["speaker_t_test"] = t_test_json(r.t_test_defined, r.t_test);
    return j;
}

int analyze_transfer(const Invocation& inv) {
    const analysis::StudyCorpus corpus = study_corpus(inv, "corpus");
    const Candidates c = study_candidates(inv, corpus);
    const train::TrainConfig tc = parse_train_config(inv.config, inv.jobs);
    const int held_out = config_or<int>(inv.config, "held_out_level", 0);
    const double vf = config_or<double>(inv.config, "validation_fraction", 0.2);
    const analysis::TransferStudyResult res =
        analysis::transfer_study(corpus, c.normal, c.adversarial, held_out, vf, tc, inv.seed);

    std::string text = "q4: transfer to held-out confound level " + std::to_string(held_out) +
                       "\n\nseed-mean target UAR: normal " + fmt(res.normal_mean_uar) +
                       ", adversarial " + fmt(res.adversarial_mean_uar) + ", delta " +
                       fmt(res.delta) + "\n";
    if (res.t_test_defined)
        text += "paired across seeds: t=" + fmt(res.t_test.t) +
                ", df=" + std::to_string(res.t_test.df) + ", p=" + fmt(res.t_test.p) + "\n";
    else
        text += "seed-paired t-test undefined\n";
    text += "\n" + eval::transfer_table(res.ensemble_comparison, "in-domain levels",
                                        "held-out level " + std::to_string(held_out));

    ordered_json j;
    j["question"] = "q4";
    j["held_out_level"] = res.held_out_level;
    j["normal_seed_uars"] = res.normal_seed_uars;
    j["adversarial_seed_uars"] = res.adversarial_seed_uars;
    j["normal_mean_uar"] = res.normal_mean_uar;
    j["adversarial_mean_uar"] = res.adversarial_mean_uar;
    j["delta"] = res.delta;
    j["seed_t_test"] = t_test_json(res.t_test_defined, res.t_test);
    j["ensemble"] = transfer_result_json(res.ensemble_comparison);
    emit(inv, "q4", text, j);
    return 0;
}

int analyze_cross_corpus(const Invocation& inv) {
    const analysis::StudyCorpus source = study_corpus(inv, "corpus");
    const analysis::StudyCorpus target = study_corpus(inv, "target_corpus");
    const Candidates c = study_candidates(inv, source);
    const train::TrainConfig tc = parse_train_config(inv.config, inv.jobs);
    const double vf = config_or<double>(inv.config, "validation_fraction", 0.2);
    const analysis::CrossCorpusStudyResult res =
        analysis::cross_corpus_study(source, target, c.normal, c.adversarial, vf, tc, inv.seed);

    std::string text = "q5: cross-corpus transfer\n\nseed-mean target UAR: normal " +
                       fmt(res.normal_mean_uar) + ", adversarial " +
                       fmt(res.adversarial_mean_uar) + ", delta " + fmt(res.delta) + "\n";
    if (res.t_test_defined)
        text += "paired across seeds: t=" + fmt(res.t_test.t) +
                ", df=" + std::to_string(res.t_test.df) + ", p=" + fmt(res.t_test.p) + "\n";
    else
        text += "seed-paired t-test undefined\n";
    text += "\n" + eval::transfer_table(res.ensemble_comparison, "source corpus", "target corpus");

    ordered_json j;
    j["question"] = "q5";
    j["normal_seed_uars"] = res.normal_seed_uars;
    j["adversarial_seed_uars"] = res.adversarial_seed_uars;
    j["normal_mean_uar"] = res.normal_mean_uar;
    j["adversarial_mean_uar"] = res.adversarial_mean_uar;
    j["delta"] = res.delta;
    j["seed_t_test"] = t_test_json(res.t_test_defined, res.t_test);
    j["ensemble"] = transfer_result_json(res.ensemble_comparison);
    emit(inv, "q5", text, j);
    return 0;
}

// q6 runs over existing ledgers: every recorded run votes on the target
// manifest and the per-utterance preference score is correlated with the
// lexical profile. Fewer than 15 runs per model is refused.
int analyze_aps(const Invocation& inv) {
    const std::filesystem::path normal_path = require_string(inv.config, "normal_ledger");
    const std::filesystem::path adv_path = require_string(inv.config, "adversarial_ledger");
    const std::vector<train::LedgerEntry> normal = train::read_run_ledger(normal_path);
    const std::vector<train::LedgerEntry> adversarial = train::read_run_ledger(adv_path);

    constexpr std::size_t kMinRuns = 15;
    if (normal.size() < kMinRuns || adversarial.size() < kMinRuns)
        throw ConfigError("q6 needs at least " + std::to_string(kMinRuns) +
                          " runs per model; the normal ledger has " +
                          std::to_string(normal.size()) + " and the adversarial ledger has " +
                          std::to_string(adversarial.size()));
    for (const auto* entries : {&normal, &adversarial})
        for (const train::LedgerEntry& e : *entries) {
            if (e.fingerprint_hex != entries->front().fingerprint_hex)
                throw ConfigError("q6 expects one model per ledger; found mixed fingerprints");
            if (e.checkpoint.empty())
                throw DataError("ledger entry for seed " + std::to_string(e.seed) +
                                " records no checkpoint");
        }

    const LoadedData d = load_data(inv, "manifest");
    const data::EmotionTarget target =
        model::emotion_target_from_string(normal.front().target);
    const double pss_mean = corpus_has_pss(d.kept) ? data::session_pss_mean(d.kept) : 0.0;
    const std::vector<data::LabeledSample> labeled =
        data::label_utterances(d.kept, target, pss_mean);
    const features::EmbeddingTable* table = d.embeddings ? &*d.embeddings : nullptr;
    const features::CategoryLexicon lexicon =
        features::load_lexicon(require_string(inv.config, "lexicon"));

    // Correct-vote counts per utterance for one ledger's runs.
    const auto vote = [&](const std::vector<train::LedgerEntry>& entries,
                          const std::filesystem::path& ledger_dir) {
        const model::VariantSpec spec = model::variant_from_json(entries.front().spec_json);
        const std::vector<train::PreparedSample> samples =
            train::prepare_samples(labeled, spec.modality, table);
        std::vector<std::vector<std::size_t>> per_run(entries.size());
        train::parallel_for(entries.size(), inv.jobs, [&](std::size_t i) {
            const model::NetworkParams params = model::load_checkpoint(
                resolve_against(ledger_dir, entries[i].checkpoint), spec);
            std::vector<std::size_t> correct(samples.size(), 0);
            for (std::size_t s = 0; s < samples.size(); ++s) {
                const model::ForwardOutput out =
                    model::predict(spec, params, train::input_for(samples[s]));
                if (static_cast<int>(argmax(out.emotion_probs.values())) ==
                    labeled[s].emotion)
                    correct[s] = 1;
            }
            per_run[i] = std::move(correct);
        });
        std::vector<std::size_t> counts(samples.size(), 0);
        for (const std::vector<std::size_t>& run : per_run)
            for (std::size_t s = 0; s < counts.size(); ++s) counts[s] += run[s];
        return counts;
    };
    const std::vector<std::size_t> normal_correct = vote(normal, normal_path.parent_path());
    const std::vector<std::size_t> adv_correct = vote(adversarial, adv_path.parent_path());

    std::vector<eval::ApsRecord> records;
    records.reserve(labeled.size());
    for (std::size_t s = 0; s < labeled.size(); ++s) {
        eval::ApsRecord rec;
        rec.utterance_id = labeled[s].utt->id;
        rec.aps = eval::aps(adv_correct[s], adversarial.size(), normal_correct[s], normal.size());
        rec.lexical = features::lexical_category_vector(labeled[s].utt->tokens, lexicon,
                                                        labeled[s].utt->duration_s);
        records.push_back(std::move(rec));
    }
    const std::vector<eval::ApsCorrelationRow> rows = eval::aps_correlation_report(records);

    const std::string text =
        "q6: lexical correlates of the adversarial preference score (" +
        std::to_string(normal.size()) + " normal / " + std::to_string(adversarial.size()) +
        " adversarial runs)\n\n" + eval::aps_table(rows);

    ordered_json j;
    j["question"] = "q6";
    j["runs_per_model"] = {{"normal", normal.size()}, {"adversarial", adversarial.size()}};
    j["correlations"] = ordered_json::array();
    for (const eval::ApsCorrelationRow& row : rows) {
        ordered_json r;
        r["feature"] = row.feature;
        r["defined"] = row.defined;
        if (row.defined) {
            r["r"] = row.r;
            r["p"] = row.p;
            r["p_adjusted"] = row.p_adjusted;
        }
        r["code"] = row.code;
        j["correlations"].push_back(std::move(r));
    }
    j["records"] = ordered_json::array();
    for (const eval::ApsRecord& rec : records) {
        ordered_json r;
        r["id"] = rec.utterance_id;
        r["aps"] = rec.aps;
        j["records"].push_back(std::move(r));
    }
    emit(inv, "q6", text, j);
    return 0;
}

}  // namespace

int cmd_analyze(const Invocation& inv) {
    const std::string question = require_string(inv.config, "question");
    if (question == "q1") return analyze_probe(inv);
    if (question == "q2") return analyze_ledger_delta(inv);
    if (question == "q3") return analyze_confusion(inv);
    if (question == "q4") return analyze_transfer(inv);
    if (question == "q5") return analyze_cross_corpus(inv);
    if (question == "q6") return analyze_aps(inv);
    throw ConfigError("unknown question '" + question + "' (expected q1..q6)");
}

}  // namespace dcfd::cli
