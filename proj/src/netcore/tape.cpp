#include "deconfound/netcore/tape.hpp"

#include <stdexcept>
#include <string>

#include "deconfound/common.hpp"

namespace dcfd::net {

NodeRef Tape::leaf(Tensor value) {
    if (!value.all_finite()) {
        throw NumericError("non-finite values in tape leaf");
    }
    nodes_.push_back(Node{std::move(value), Tensor{}, nullptr});
    return NodeRef{nodes_.size() - 1};
}

NodeRef Tape::record(Tensor value, BackwardFn backward, const char* op_name) {
    if (!value.all_finite()) {
        throw NumericError(std::string("non-finite values produced by op '") + op_name + "'");
    }
    nodes_.push_back(Node{std::move(value), Tensor{}, std::move(backward)});
    return NodeRef{nodes_.size() - 1};
}

void Tape::backward(NodeRef loss) {
    if (consumed_) {
        throw std::logic_error("backward requested twice on a consumed tape");
    }
    if (loss.index >= nodes_.size()) {
        throw std::logic_error("backward: loss node does not belong to this tape");
    }
    if (nodes_[loss.index].value.size() != 1) {
        throw std::invalid_argument("backward: loss must be scalar");
    }
    consumed_ = true;
    for (Node& n : nodes_) {
        n.grad = Tensor(n.value.shape());
    }
    nodes_[loss.index].grad.values()[0] = 1.0;
    // Creation order is topological, so one reverse sweep visits every op
    // exactly once with its output gradient fully accumulated.
    for (std::size_t i = loss.index + 1; i-- > 0;) {
        if (nodes_[i].backward) {
            nodes_[i].backward(*this, NodeRef{i});
        }
    }
}

}  // namespace dcfd::net
