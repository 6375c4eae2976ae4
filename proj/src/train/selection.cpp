#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "deconfound/common.hpp"
#include "deconfound/eval/metrics.hpp"
#include "deconfound/train/early_stopping.hpp"
#include "deconfound/train/parallel.hpp"
#include "deconfound/train/trainer.hpp"

namespace dcfd::train {
namespace {

constexpr double kLogClamp = 1e-12;

int argmax_index(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

struct HeadRun {
    double val_uar = 0.0;
    double test_uar = 0.0;
};

// Standard recipe applied to a standalone head over frozen embeddings:
// weighted cross-entropy, RMSProp, early stopping on validation loss,
// best-weight restore.
HeadRun train_head_run(const model::HeadSpec& head, const std::vector<net::Tensor>& train_x,
                       const std::vector<int>& train_y, const std::vector<net::Tensor>& val_x,
                       const std::vector<int>& val_y, const std::vector<net::Tensor>& test_x,
                       const std::vector<int>& test_y, std::size_t classes,
                       const TrainConfig& config, std::uint64_t seed) {
    const std::string name = "probe";
    const std::size_t input_dim = train_x.front().dim(0);
    const net::Tensor weights = class_weights_from_labels(train_y, classes);

    model::NetworkParams params = model::build_head(name, head, input_dim, classes, seed);
    RmsProp optimizer(config.optimizer);
    EarlyStopping stopper(config.patience);
    model::NetworkParams best = params;

    auto eval_probs = [&](const model::NetworkParams& p, const net::Tensor& x) {
        net::Tape tape;
        const model::BoundParams bound = model::bind_params(tape, p);
        const net::NodeRef probs = model::head_probs(tape, name, head, bound, tape.leaf(x));
        return tape.value(probs).values();
    };
    auto eval_split = [&](const model::NetworkParams& p, const std::vector<net::Tensor>& xs,
                          const std::vector<int>& ys, double* loss_out) {
        std::vector<int> pred;
        double loss = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const std::vector<double> probs = eval_probs(p, xs[i]);
            pred.push_back(argmax_index(probs));
            loss += -weights[static_cast<std::size_t>(ys[i])] *
                    std::log(std::max(probs[static_cast<std::size_t>(ys[i])], kLogClamp));
        }
        if (loss_out) *loss_out = loss / static_cast<double>(xs.size());
        return pred;
    };

    std::vector<std::size_t> order(train_x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::mt19937_64 rng(mix_seed(seed, fnv1a64("epoch.shuffle") + epoch));
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            net::Tape tape;
            const model::BoundParams bound = model::bind_params(tape, params);
            net::NodeRef total{};
            for (std::size_t i = start; i < stop; ++i) {
                const std::size_t idx = order[i];
                const net::NodeRef probs =
                    model::head_probs(tape, name, head, bound, tape.leaf(train_x[idx]));
                const net::NodeRef loss = net::weighted_cross_entropy(
                    tape, probs, static_cast<std::size_t>(train_y[idx]), weights);
                total = i == start ? loss : net::add(tape, total, loss);
            }
            tape.backward(net::scale(tape, total, 1.0 / static_cast<double>(stop - start)));
            std::map<std::string, net::Tensor> grads;
            for (const auto& [pname, ref] : bound.nodes) grads.emplace(pname, tape.gradient(ref));
            optimizer.step(params, grads);
        }
        double val_loss = 0.0;
        eval_split(params, val_x, val_y, &val_loss);
        const bool stop = stopper.observe(val_loss);
        if (stopper.best_epoch() == epoch) best = params;
        if (stop) break;
    }

    HeadRun out;
    out.val_uar = eval::uar_from_labels(val_y, eval_split(best, val_x, val_y, nullptr), classes);
    out.test_uar =
        eval::uar_from_labels(test_y, eval_split(best, test_x, test_y, nullptr), classes);
    return out;
}

std::vector<net::Tensor> frozen_embeddings(const RunRecord& run,
                                           std::span<const PreparedSample> samples) {
    std::vector<net::Tensor> out;
    out.reserve(samples.size());
    for (const auto& s : samples)
        out.push_back(model::predict(run.spec, run.best_params, input_for(s)).embedding);
    return out;
}

std::vector<int> confound_labels(std::span<const PreparedSample> samples) {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.labeled->confound);
    return out;
}

}  // namespace

GridSelection grid_search(std::span<const model::VariantSpec> candidates,
                          std::span<const PreparedSample> train,
                          std::span<const PreparedSample> validation,
                          std::span<const PreparedSample> test, const TrainConfig& config) {
    if (candidates.empty()) throw ConfigError("grid_search: no candidate variants");
    if (config.seeds.empty()) throw ConfigError("grid_search: config.seeds must be non-empty");

    const std::size_t n_seeds = config.seeds.size();
    std::vector<std::vector<RunRecord>> runs(candidates.size(),
                                             std::vector<RunRecord>(n_seeds));
    parallel_for(candidates.size() * n_seeds, config.jobs, [&](std::size_t i) {
        const std::size_t c = i / n_seeds;
        const std::size_t s = i % n_seeds;
        runs[c][s] = train_run(candidates[c], train, validation, test, config, config.seeds[s]);
    });

    // Admissibility first, mean validation emotion UAR second; ties keep the
    // earliest candidate.
    std::size_t best_index = candidates.size();
    double best_mean = -std::numeric_limits<double>::infinity();
    double nearest_miss = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        double mean = 0.0;
        bool admissible = true;
        double worst_deviation = 0.0;
        for (const auto& r : runs[c]) {
            mean += r.val_emotion_uar;
            admissible = admissible && r.admissible;
            if (r.spec.mode == model::TrainingMode::adversarial) {
                const double chance = 1.0 / static_cast<double>(r.spec.confound_classes);
                const double at_best = *r.trace[r.best_epoch - 1].val_confound_uar;
                worst_deviation = std::max(worst_deviation, std::abs(at_best - chance));
            }
        }
        mean /= static_cast<double>(n_seeds);
        if (!admissible) {
            nearest_miss =
                std::min(nearest_miss, worst_deviation - config.chance_uar_tolerance);
            continue;
        }
        if (mean > best_mean) {
            best_mean = mean;
            best_index = c;
        }
    }

    if (best_index == candidates.size()) {
        std::ostringstream msg;
        msg << "grid_search: no admissible grid point; the nearest miss exceeds the chance "
               "band by "
            << nearest_miss;
        throw NumericError(msg.str());
    }

    GridSelection selection;
    selection.index = best_index;
    selection.spec = candidates[best_index];
    selection.runs = std::move(runs[best_index]);
    selection.mean_val_emotion_uar = best_mean;
    return selection;
}

ProbeResult probe_confound(const RunRecord& run, std::span<const PreparedSample> train,
                           std::span<const PreparedSample> validation,
                           std::span<const PreparedSample> test, const TrainConfig& config,
                           ProbeMode mode, std::uint64_t seed) {
    ProbeResult out;
    out.mode = mode;
    if (mode == ProbeMode::joint_head_readout) {
        if (!run.test_confound_uar)
            throw ConfigError("joint-head readout needs an adversarial run");
        out.test_confound_uar = *run.test_confound_uar;
        out.head = run.spec.head;
        return out;
    }

    if (train.empty() || validation.empty() || test.empty())
        throw DataError("probe_confound: every split must be non-empty");

    const std::vector<net::Tensor> train_x = frozen_embeddings(run, train);
    const std::vector<net::Tensor> val_x = frozen_embeddings(run, validation);
    const std::vector<net::Tensor> test_x = frozen_embeddings(run, test);
    const std::vector<int> train_y = confound_labels(train);
    const std::vector<int> val_y = confound_labels(validation);
    const std::vector<int> test_y = confound_labels(test);
    const std::size_t classes = run.spec.confound_classes;

    std::vector<model::HeadSpec> heads;
    if (run.spec.grid_mode) {
        for (std::size_t layers : {std::size_t{1}, std::size_t{2}})
            for (std::size_t width : {std::size_t{32}, std::size_t{64}})
                heads.push_back(model::HeadSpec{layers, width});
    } else {
        heads.push_back(run.spec.head);
    }

    double best_val = -std::numeric_limits<double>::infinity();
    for (const auto& head : heads) {
        const HeadRun hr = train_head_run(head, train_x, train_y, val_x, val_y, test_x, test_y,
                                          classes, config, seed);
        if (hr.val_uar > best_val) {
            best_val = hr.val_uar;
            out.test_confound_uar = hr.test_uar;
            out.head = head;
        }
    }
    return out;
}

}  // namespace dcfd::train
