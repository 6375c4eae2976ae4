#include "deconfound/train/optimizer.hpp"

#include <cmath>

#include "deconfound/common.hpp"

namespace dcfd::train {

void rmsprop_step(net::Tensor& param, const net::Tensor& grad, net::Tensor& state,
                  const RmsPropConfig& cfg) {
    if (!param.same_shape(grad) || !param.same_shape(state))
        throw NumericError("rmsprop_step: parameter, gradient, and state shapes must match");
    for (std::size_t i = 0; i < param.size(); ++i) {
        state[i] = cfg.decay * state[i] + (1.0 - cfg.decay) * grad[i] * grad[i];
        param[i] -= cfg.learning_rate * grad[i] / std::sqrt(state[i] + cfg.epsilon);
    }
    if (!param.all_finite()) throw NumericError("rmsprop_step produced a non-finite parameter");
}

void RmsProp::step(model::NetworkParams& params, const std::map<std::string, net::Tensor>& grads) {
    for (auto& [name, tensor] : params.tensors) {
        auto git = grads.find(name);
        if (git == grads.end()) throw NumericError("rmsprop: missing gradient for " + name);
        auto [sit, inserted] = state_.try_emplace(name, net::Tensor::zeros_like(tensor));
        (void)inserted;
        rmsprop_step(tensor, git->second, sit->second, cfg_);
    }
}

}  // namespace dcfd::train
