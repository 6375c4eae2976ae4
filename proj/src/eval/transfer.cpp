#include "deconfound/eval/transfer.hpp"

#include <algorithm>
#include <map>

#include "deconfound/common.hpp"
#include "deconfound/eval/metrics.hpp"

namespace dcfd::eval {
namespace {

// Macro recall over the classes present for this subset. Unlike the strict
// UAR, a missing class shrinks the average instead of raising, because test
// speakers routinely lack classes.
double present_class_recall(std::span<const int> truth, std::span<const int> pred,
                            std::size_t classes) {
    std::vector<long long> total(classes, 0), hit(classes, 0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto t = static_cast<std::size_t>(truth[i]);
        ++total[t];
        if (truth[i] == pred[i]) ++hit[t];
    }
    double acc = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        if (total[c] == 0) continue;
        acc += static_cast<double>(hit[c]) / static_cast<double>(total[c]);
        ++present;
    }
    if (present == 0) throw NumericError("per-speaker recall: speaker has no samples");
    return acc / static_cast<double>(present);
}

}  // namespace

TransferResult transfer_compare(const TransferInputs& inputs) {
    const std::size_t n = inputs.truth.size();
    if (n == 0) throw DataError("transfer_compare: empty test set");
    if (inputs.normal_pred.size() != n || inputs.adversarial_pred.size() != n ||
        inputs.speakers.size() != n)
        throw DataError("transfer_compare: prediction/speaker vectors must match the test set");

    TransferResult out;
    out.normal_uar = uar_from_labels(inputs.truth, inputs.normal_pred, inputs.classes);
    out.adversarial_uar = uar_from_labels(inputs.truth, inputs.adversarial_pred, inputs.classes);
    out.delta = out.adversarial_uar - out.normal_uar;

    std::map<std::string, std::vector<std::size_t>> by_speaker;
    for (std::size_t i = 0; i < n; ++i) by_speaker[inputs.speakers[i]].push_back(i);

    for (const auto& [speaker, idx] : by_speaker) {
        std::vector<int> truth, yn, ya;
        for (std::size_t i : idx) {
            truth.push_back(inputs.truth[i]);
            yn.push_back(inputs.normal_pred[i]);
            ya.push_back(inputs.adversarial_pred[i]);
        }
        out.speakers.push_back(speaker);
        out.normal_speaker_uars.push_back(present_class_recall(truth, yn, inputs.classes));
        out.adversarial_speaker_uars.push_back(present_class_recall(truth, ya, inputs.classes));
    }

    if (out.speakers.size() >= 2) {
        try {
            out.t_test = paired_t_test(out.adversarial_speaker_uars, out.normal_speaker_uars);
            out.t_test_defined = true;
        } catch (const NumericError&) {
            out.t_test_defined = false;  // all-equal pairs; the test is degenerate
        }
    }
    return out;
}

}  // namespace dcfd::eval
