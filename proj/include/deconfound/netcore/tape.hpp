#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "deconfound/netcore/tensor.hpp"

namespace dcfd::net {

// Handle into a Tape. Only valid for the tape that created it.
struct NodeRef {
    std::size_t index = static_cast<std::size_t>(-1);
};

// Gradient-reversal configuration. lambda is the reversal strength; the
// paper's grid uses {0.3, 0.6, 0.8} but the core accepts any lambda >= 0.
struct GrlConfig {
    double lambda = 0.0;
};

// Reverse-mode autodiff tape. Ops append nodes in execution order, which is
// already a topological order, so backward() is a single reverse sweep that
// visits each op exactly once. Gradients of fan-out nodes accumulate by
// summation into per-node buffers.
//
// A tape is single-use: backward() consumes it, and a second call throws.
class Tape {
public:
    // Backward callback: receives the tape and the node's own ref so it can
    // read its output gradient and scatter into its inputs' buffers.
    using BackwardFn = std::function<void(Tape&, NodeRef)>;

    // Adds an input/parameter node with no backward function.
    NodeRef leaf(Tensor value);

    // Adds an op result. `op_name` is used in numeric-failure diagnostics;
    // every recorded value is checked finite (NaN/Inf is an error state).
    NodeRef record(Tensor value, BackwardFn backward, const char* op_name);

    const Tensor& value(NodeRef ref) const { return nodes_[ref.index].value; }

    // Gradient of the loss w.r.t. this node; valid only after backward().
    const Tensor& gradient(NodeRef ref) const { return nodes_[ref.index].grad; }

    // Accumulation buffer used by backward functions.
    Tensor& grad_buffer(NodeRef ref) { return nodes_[ref.index].grad; }

    // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse creation
    // order. `loss` must be scalar. Throws std::logic_error on reuse.
    void backward(NodeRef loss);

    bool consumed() const { return consumed_; }
    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        BackwardFn backward;
    };

    std::vector<Node> nodes_;
    bool consumed_ = false;
};

}  // namespace dcfd::net
