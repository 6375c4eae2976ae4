#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace dcfd::eval {

// Square count matrix indexed [true][predicted].
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t classes);
    static ConfusionMatrix from_pairs(std::span<const std::pair<int, int>> true_pred,
                                      std::size_t classes);

    void add(std::size_t true_class, std::size_t predicted_class, long long count = 1);
    long long at(std::size_t true_class, std::size_t predicted_class) const;
    long long row_sum(std::size_t true_class) const;
    std::size_t classes() const { return classes_; }

private:
    std::size_t classes_;
    std::vector<long long> counts_;
};

// Unweighted average recall: mean over classes of per-class recall.
// An empty true class raises a numeric error naming the class.
double uar(const ConfusionMatrix& cm);

// UAR straight from parallel label vectors (must be equal length, non-empty).
double uar_from_labels(std::span<const int> truth, std::span<const int> predicted,
                       std::size_t classes);

// Row-normalizes both matrices to percentages (rows sum to 100) and returns
// adversarial minus normal per cell, row-major. Used per confound group.
std::vector<double> confusion_delta(const ConfusionMatrix& normal, const ConfusionMatrix& adversarial);

}  // namespace dcfd::eval
