#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "deconfound/model/variant.hpp"
#include "deconfound/netcore/ops.hpp"
#include "deconfound/netcore/tape.hpp"
#include "deconfound/netcore/tensor.hpp"

namespace dcfd::model {

// A full parameter set for one variant. Tensors are keyed by a fixed naming
// scheme ("acoustic.conv0.kernels", "emotion.out.w", ...) and the map's
// name ordering is the canonical parameter order used everywhere
// (checkpoints, optimizer state, gradient collection).
struct NetworkParams {
    std::uint64_t fingerprint = 0;  // VariantSpec fingerprint these weights belong to
    std::map<std::string, net::Tensor> tensors;
};

// Fresh Glorot-uniform weights (zero biases) for the variant, drawn from a
// generator seeded with `seed`. Identical (spec, seed) pairs produce
// bit-identical parameters.
NetworkParams build_variant(const VariantSpec& spec, std::uint64_t seed);

// Parameters registered as leaves on a tape, in canonical name order.
// Bind once per tape; every forward pass on that tape shares the leaves so
// gradients from multiple samples accumulate into the same buffers.
struct BoundParams {
    std::map<std::string, net::NodeRef> nodes;
};

BoundParams bind_params(net::Tape& tape, const NetworkParams& params);

// One sample's model inputs. A stream pointer must be non-null exactly when
// the variant's modality uses that stream. Acoustic: [T x input_dim] frames.
// Lexical: [L x input_dim] embedded tokens.
struct SampleInput {
    const net::Tensor* acoustic = nullptr;
    const net::Tensor* lexical = nullptr;
};

struct ForwardNodes {
    net::NodeRef embedding;
    net::NodeRef emotion_probs;
    std::optional<net::NodeRef> confound_probs;  // present iff adversarial
};

struct ForwardOptions {
    // Diagnostic switch: route the confound head through an identity instead
    // of the gradient-reversal layer (forward values are unchanged either
    // way; only gradients differ).
    bool grl_identity = false;
};

// Builds the variant's graph for one sample on the tape and returns the
// output nodes. Throws DataError when the inputs do not match the spec.
ForwardNodes forward(net::Tape& tape, const VariantSpec& spec, const BoundParams& bound,
                     const SampleInput& input, const ForwardOptions& options = {});

// Convenience inference path: fresh tape, forward, copy out the values.
struct ForwardOutput {
    net::Tensor embedding;
    net::Tensor emotion_probs;
    std::optional<net::Tensor> confound_probs;
};

ForwardOutput predict(const VariantSpec& spec, const NetworkParams& params,
                      const SampleInput& input);

// Standalone classifier head with the in-network head topology (dense+relu
// stack, affine, softmax), parameters prefixed with `name`. Used by the
// frozen-representation confound probe.
NetworkParams build_head(const std::string& name, const HeadSpec& head, std::size_t input_dim,
                         std::size_t classes, std::uint64_t seed);

// Head forward pass over bound parameters; `x` is the head input node.
net::NodeRef head_probs(net::Tape& tape, const std::string& name, const HeadSpec& head,
                        const BoundParams& bound, net::NodeRef x);

}  // namespace dcfd::model
