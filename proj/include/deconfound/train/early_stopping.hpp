#pragma once

#include <cstddef>
#include <limits>

namespace dcfd::train {

// Patience-based early stopping on a monitored loss. Epochs are 1-based.
// An epoch improves only if its loss is strictly below the best seen;
// training stops once (epoch - best_epoch) reaches the patience. With
// patience 5, the loss trace [5,4,4,4,4,4,4] stops after epoch 7 with the
// best epoch at 2.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

    // Records one epoch's monitored loss; returns true when training should
    // stop after this epoch.
    bool observe(double loss) {
        ++epoch_;
        if (loss < best_loss_) {
            best_loss_ = loss;
            best_epoch_ = epoch_;
        }
        return epoch_ - best_epoch_ >= patience_;
    }

    std::size_t best_epoch() const { return best_epoch_; }
    double best_loss() const { return best_loss_; }
    std::size_t epochs_seen() const { return epoch_; }

private:
    std::size_t patience_;
    std::size_t epoch_ = 0;
    std::size_t best_epoch_ = 0;
    double best_loss_ = std::numeric_limits<double>::infinity();
};

}  // namespace dcfd::train
