#pragma once

#include <span>
#include <string>
#include <vector>

#include "deconfound/eval/stats.hpp"

namespace dcfd::eval {

// Target-domain predictions of the two model families over one shared
// test set.
struct TransferInputs {
    std::vector<int> truth;
    std::vector<int> normal_pred;
    std::vector<int> adversarial_pred;
    std::vector<std::string> speakers;  // test speaker per sample
    std::size_t classes = 3;
};

struct TransferResult {
    double normal_uar = 0.0;
    double adversarial_uar = 0.0;
    double delta = 0.0;  // adversarial - normal

    // Per-speaker macro recall (over the classes each speaker actually has),
    // aligned across the two columns; speaker order is sorted id order.
    std::vector<std::string> speakers;
    std::vector<double> normal_speaker_uars;
    std::vector<double> adversarial_speaker_uars;

    // Paired across speakers; undefined (flag false) when fewer than two
    // speakers or zero-variance differences make the test degenerate.
    bool t_test_defined = false;
    TTestResult t_test;
};

// Compares the two families on a held-out confound domain: overall UARs,
// their difference, and a per-speaker paired t-test.
TransferResult transfer_compare(const TransferInputs& inputs);

}  // namespace dcfd::eval
