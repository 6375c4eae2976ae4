#include "deconfound/eval/metrics.hpp"

#include <stdexcept>
#include <string>

#include "deconfound/common.hpp"

namespace dcfd::eval {

ConfusionMatrix::ConfusionMatrix(std::size_t classes)
    : classes_(classes), counts_(classes * classes, 0) {
    if (classes == 0) throw std::invalid_argument("confusion matrix needs >= 1 class");
}

ConfusionMatrix ConfusionMatrix::from_pairs(std::span<const std::pair<int, int>> true_pred,
                                            std::size_t classes) {
    ConfusionMatrix cm(classes);
    for (const auto& [t, p] : true_pred) {
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= classes ||
            static_cast<std::size_t>(p) >= classes) {
            throw std::invalid_argument("confusion matrix: class index out of range");
        }
        cm.add(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
    }
    return cm;
}

void ConfusionMatrix::add(std::size_t t, std::size_t p, long long count) {
    if (t >= classes_ || p >= classes_) {
        throw std::invalid_argument("confusion matrix: class index out of range");
    }
    counts_[t * classes_ + p] += count;
}

long long ConfusionMatrix::at(std::size_t t, std::size_t p) const {
    return counts_[t * classes_ + p];
}

long long ConfusionMatrix::row_sum(std::size_t t) const {
    long long s = 0;
    for (std::size_t p = 0; p < classes_; ++p) s += counts_[t * classes_ + p];
    return s;
}

double uar(const ConfusionMatrix& cm) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cm.classes(); ++c) {
        const long long n = cm.row_sum(c);
        if (n == 0) {
            throw NumericError("uar: no samples for true class " + std::to_string(c));
        }
        acc += static_cast<double>(cm.at(c, c)) / static_cast<double>(n);
    }
    return acc / static_cast<double>(cm.classes());
}

double uar_from_labels(std::span<const int> truth, std::span<const int> predicted,
                       std::size_t classes) {
    if (truth.size() != predicted.size()) {
        throw std::invalid_argument("uar_from_labels: label vectors differ in length");
    }
    if (truth.empty()) throw NumericError("uar_from_labels: no samples");
    ConfusionMatrix cm(classes);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || predicted[i] < 0 || static_cast<std::size_t>(truth[i]) >= classes ||
            static_cast<std::size_t>(predicted[i]) >= classes) {
            throw std::invalid_argument("uar_from_labels: class index out of range");
        }
        cm.add(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(predicted[i]));
    }
    return uar(cm);
}

std::vector<double> confusion_delta(const ConfusionMatrix& normal,
                                    const ConfusionMatrix& adversarial) {
    if (normal.classes() != adversarial.classes()) {
        throw std::invalid_argument("confusion_delta: class count mismatch");
    }
    const std::size_t C = normal.classes();
    std::vector<double> delta(C * C, 0.0);
    for (std::size_t t = 0; t < C; ++t) {
        const long long rn = normal.row_sum(t);
        const long long ra = adversarial.row_sum(t);
        if (rn == 0 || ra == 0) {
            throw NumericError("confusion_delta: empty true class " + std::to_string(t));
        }
        for (std::size_t p = 0; p < C; ++p) {
            const double pn = 100.0 * static_cast<double>(normal.at(t, p)) / static_cast<double>(rn);
            const double pa =
                100.0 * static_cast<double>(adversarial.at(t, p)) / static_cast<double>(ra);
            delta[t * C + p] = pa - pn;
        }
    }
    return delta;
}

}  // namespace dcfd::eval
