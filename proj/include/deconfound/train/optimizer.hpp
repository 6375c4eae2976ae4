#pragma once

#include <map>
#include <string>

#include "deconfound/model/network.hpp"
#include "deconfound/netcore/tensor.hpp"

namespace dcfd::train {

// RMSProp accumulator update:
//   state <- decay * state + (1 - decay) * grad^2
//   param <- param - lr * grad / sqrt(state + eps)
struct RmsPropConfig {
    double learning_rate = 1e-3;
    double decay = 0.9;
    double epsilon = 1e-8;
};

// Element-level update for one tensor; `state` must match `param`'s shape
// and starts at zero.
void rmsprop_step(net::Tensor& param, const net::Tensor& grad, net::Tensor& state,
                  const RmsPropConfig& cfg);

// Named-tensor optimizer over a full parameter set. State tensors are
// created lazily (zero-initialized) the first time a name is stepped.
class RmsProp {
public:
    explicit RmsProp(RmsPropConfig cfg) : cfg_(cfg) {}

    void step(model::NetworkParams& params, const std::map<std::string, net::Tensor>& grads);

    const RmsPropConfig& config() const { return cfg_; }

private:
    RmsPropConfig cfg_;
    std::map<std::string, net::Tensor> state_;
};

}  // namespace dcfd::train
