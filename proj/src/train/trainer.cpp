#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "deconfound/common.hpp"
#include "deconfound/eval/metrics.hpp"
#include "deconfound/train/early_stopping.hpp"
#include "deconfound/train/parallel.hpp"
#include "deconfound/train/trainer.hpp"

namespace dcfd::train {
namespace {

// Same clamp the loss op applies, so host-side loss values match the tape's.
constexpr double kLogClamp = 1e-12;
// Batches group samples of similar primary-stream length.
constexpr std::size_t kLengthBucket = 8;

std::size_t primary_length(const PreparedSample& s) {
    if (s.acoustic) return s.acoustic->dim(0);
    return s.lexical->dim(0);
}

int argmax_index(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

double weighted_ce_value(const std::vector<double>& probs, int target, const net::Tensor& w) {
    return -w[static_cast<std::size_t>(target)] *
           std::log(std::max(probs[static_cast<std::size_t>(target)], kLogClamp));
}

struct SplitEval {
    double emotion_loss = 0.0;  // mean weighted cross-entropy
    std::vector<int> emo_true, emo_pred;
    std::vector<std::vector<double>> emo_probs;
    std::vector<int> conf_true, conf_pred;
    std::vector<std::vector<double>> conf_probs;
};

SplitEval evaluate_split(const model::VariantSpec& spec, const model::NetworkParams& params,
                         std::span<const PreparedSample> samples,
                         const net::Tensor& emotion_weights) {
    SplitEval out;
    for (const auto& s : samples) {
        const model::ForwardOutput fwd = model::predict(spec, params, input_for(s));
        const std::vector<double>& probs = fwd.emotion_probs.values();
        out.emotion_loss += weighted_ce_value(probs, s.labeled->emotion, emotion_weights);
        out.emo_true.push_back(s.labeled->emotion);
        out.emo_pred.push_back(argmax_index(probs));
        out.emo_probs.push_back(probs);
        if (fwd.confound_probs) {
            const std::vector<double>& cp = fwd.confound_probs->values();
            out.conf_true.push_back(s.labeled->confound);
            out.conf_pred.push_back(argmax_index(cp));
            out.conf_probs.push_back(cp);
        }
    }
    if (!samples.empty()) out.emotion_loss /= static_cast<double>(samples.size());
    return out;
}

}  // namespace

RunRecord train_run(const model::VariantSpec& spec, std::span<const PreparedSample> train,
                    std::span<const PreparedSample> validation,
                    std::span<const PreparedSample> test, const TrainConfig& config,
                    std::uint64_t seed) {
    spec.validate();
    if (config.max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (config.patience < 1) throw ConfigError("patience must be >= 1");
    if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (train.empty() || validation.empty() || test.empty())
        throw DataError("train_run: every split must be non-empty");

    const bool adversarial = spec.mode == model::TrainingMode::adversarial;
    const net::Tensor emotion_weights = class_weights(train, spec.emotion_classes, false);
    net::Tensor confound_weights;
    if (adversarial) confound_weights = class_weights(train, spec.confound_classes, true);

    model::NetworkParams params = model::build_variant(spec, seed);
    RmsProp optimizer(config.optimizer);
    EarlyStopping stopper(config.patience);

    RunRecord rec;
    rec.spec = spec;
    rec.seed = seed;
    model::NetworkParams best = params;

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        // Seeded shuffle, then a stable sort into coarse length buckets so
        // batches hold similarly sized sequences. The loss is a per-sample
        // mean either way, so bucketing never changes the math.
        std::mt19937_64 rng(mix_seed(seed, fnv1a64("epoch.shuffle") + epoch));
        std::shuffle(order.begin(), order.end(), rng);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return primary_length(train[a]) / kLengthBucket <
                   primary_length(train[b]) / kLengthBucket;
        });

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            net::Tape tape;
            const model::BoundParams bound = model::bind_params(tape, params);
            net::NodeRef total{};
            for (std::size_t i = start; i < stop; ++i) {
                const PreparedSample& s = train[order[i]];
                const model::ForwardNodes nodes = model::forward(tape, spec, bound, input_for(s));
                net::NodeRef loss = net::weighted_cross_entropy(
                    tape, nodes.emotion_probs, static_cast<std::size_t>(s.labeled->emotion),
                    emotion_weights);
                if (adversarial) {
                    loss = net::add(tape, loss,
                                    net::weighted_cross_entropy(
                                        tape, *nodes.confound_probs,
                                        static_cast<std::size_t>(s.labeled->confound),
                                        confound_weights));
                }
                total = i == start ? loss : net::add(tape, total, loss);
            }
            loss_sum += tape.value(total)[0];
            const net::NodeRef mean =
                net::scale(tape, total, 1.0 / static_cast<double>(stop - start));
            tape.backward(mean);

            std::map<std::string, net::Tensor> grads;
            for (const auto& [name, ref] : bound.nodes) grads.emplace(name, tape.gradient(ref));
            optimizer.step(params, grads);
        }

        const SplitEval val = evaluate_split(spec, params, validation, emotion_weights);
        EpochStats stats;
        stats.train_loss = loss_sum / static_cast<double>(train.size());
        stats.val_emotion_loss = val.emotion_loss;
        stats.val_emotion_uar =
            eval::uar_from_labels(val.emo_true, val.emo_pred, spec.emotion_classes);
        if (adversarial)
            stats.val_confound_uar =
                eval::uar_from_labels(val.conf_true, val.conf_pred, spec.confound_classes);
        rec.trace.push_back(stats);

        const bool stop = stopper.observe(stats.val_emotion_loss);
        if (stopper.best_epoch() == epoch) best = params;
        if (stop) break;
    }

    rec.best_epoch = stopper.best_epoch();
    rec.best_params = std::move(best);

    const SplitEval val = evaluate_split(spec, rec.best_params, validation, emotion_weights);
    rec.val_true = val.emo_true;
    rec.val_pred = val.emo_pred;
    rec.val_emotion_uar = eval::uar_from_labels(val.emo_true, val.emo_pred, spec.emotion_classes);

    const SplitEval tst = evaluate_split(spec, rec.best_params, test, emotion_weights);
    rec.test_true = tst.emo_true;
    rec.test_pred = tst.emo_pred;
    rec.test_emotion_probs = tst.emo_probs;
    rec.test_emotion_uar = eval::uar_from_labels(tst.emo_true, tst.emo_pred, spec.emotion_classes);

    if (adversarial) {
        rec.test_confound_true = tst.conf_true;
        rec.test_confound_probs = tst.conf_probs;
        // A test set missing a confound class (e.g. a held-out-level transfer
        // target) leaves the readout UAR undefined rather than failing.
        std::vector<bool> seen(spec.confound_classes, false);
        bool in_range = true;
        for (const int c : tst.conf_true) {
            if (c < 0 || static_cast<std::size_t>(c) >= spec.confound_classes) {
                in_range = false;
                break;
            }
            seen[static_cast<std::size_t>(c)] = true;
        }
        if (in_range && std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
            rec.test_confound_uar =
                eval::uar_from_labels(tst.conf_true, tst.conf_pred, spec.confound_classes);
        const double chance = 1.0 / static_cast<double>(spec.confound_classes);
        const double at_best = *rec.trace[rec.best_epoch - 1].val_confound_uar;
        rec.admissible = std::abs(at_best - chance) <= config.chance_uar_tolerance;
    }
    return rec;
}

std::vector<RunRecord> train_seeds(const model::VariantSpec& spec,
                                   std::span<const PreparedSample> train,
                                   std::span<const PreparedSample> validation,
                                   std::span<const PreparedSample> test,
                                   const TrainConfig& config) {
    if (config.seeds.empty()) throw ConfigError("train_seeds: config.seeds must be non-empty");
    std::vector<RunRecord> runs(config.seeds.size());
    parallel_for(config.seeds.size(), config.jobs, [&](std::size_t i) {
        runs[i] = train_run(spec, train, validation, test, config, config.seeds[i]);
    });
    return runs;
}

EnsembleResult ensemble_predict(std::span<const RunRecord> runs) {
    if (runs.empty()) throw DataError("ensemble_predict: no runs");
    const std::uint64_t fp = runs.front().spec.fingerprint();
    const std::size_t n = runs.front().test_true.size();
    const std::size_t classes = runs.front().spec.emotion_classes;
    for (const auto& r : runs) {
        if (r.spec.fingerprint() != fp)
            throw DataError("ensemble_predict: runs come from different variants");
        if (r.test_true != runs.front().test_true || r.test_emotion_probs.size() != n)
            throw DataError("ensemble_predict: runs were evaluated on different test sets");
    }

    EnsembleResult out;
    out.test_true = runs.front().test_true;
    out.test_pred.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> mean(classes, 0.0);
        for (const auto& r : runs)
            for (std::size_t c = 0; c < classes; ++c) mean[c] += r.test_emotion_probs[i][c];
        for (auto& v : mean) v /= static_cast<double>(runs.size());
        out.test_pred.push_back(argmax_index(mean));
    }
    out.test_uar = eval::uar_from_labels(out.test_true, out.test_pred, classes);
    return out;
}

}  // namespace dcfd::train
