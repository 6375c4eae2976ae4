#include "deconfound/model/network.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "deconfound/common.hpp"

namespace dcfd::model {
namespace {

// Uniform double in [-limit, limit) from raw engine output. The standard
// leaves uniform_real_distribution implementation-defined, so we map the
// engine's 64-bit words ourselves to keep initial weights bit-identical
// across toolchains.
double uniform_symmetric(std::mt19937_64& rng, double limit) {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    return (2.0 * unit - 1.0) * limit;
}

net::Tensor glorot_tensor(std::vector<std::size_t> shape, std::size_t fan_in,
                          std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    net::Tensor t(std::move(shape));
    for (auto& v : t.values()) v = uniform_symmetric(rng, limit);
    return t;
}

// Appends one stream's trunk parameters in canonical creation order:
// conv layers first, then GRU layers gate-by-gate (z, r, h).
void init_branch(NetworkParams& params, const std::string& name, const BranchSpec& b,
                 std::mt19937_64& rng) {
    std::size_t in = b.input_dim;
    for (std::size_t i = 0; i < b.conv_layers; ++i) {
        const std::string prefix = name + ".conv" + std::to_string(i);
        params.tensors.emplace(
            prefix + ".kernels",
            glorot_tensor({b.kernel_width, in, b.conv_width}, b.kernel_width * in,
                          b.kernel_width * b.conv_width, rng));
        params.tensors.emplace(prefix + ".bias", net::Tensor({b.conv_width}));
        in = b.conv_width;
    }
    for (std::size_t l = 0; l < b.gru_layers; ++l) {
        const std::string prefix = name + ".gru" + std::to_string(l);
        const std::size_t xdim = l == 0 ? b.conv_width : b.gru_width;
        const std::size_t h = b.gru_width;
        for (const char* gate : {"z", "r", "h"}) {
            params.tensors.emplace(prefix + ".w" + gate,
                                   glorot_tensor({xdim, h}, xdim, h, rng));
            params.tensors.emplace(prefix + ".u" + gate, glorot_tensor({h, h}, h, h, rng));
            params.tensors.emplace(prefix + ".b" + gate, net::Tensor({h}));
        }
    }
}

void init_head(NetworkParams& params, const std::string& name, const HeadSpec& head,
               std::size_t input_dim, std::size_t classes, std::mt19937_64& rng) {
    std::size_t in = input_dim;
    for (std::size_t i = 0; i < head.dense_layers; ++i) {
        const std::string prefix = name + ".dense" + std::to_string(i);
        params.tensors.emplace(prefix + ".w",
                               glorot_tensor({in, head.dense_width}, in, head.dense_width, rng));
        params.tensors.emplace(prefix + ".b", net::Tensor({head.dense_width}));
        in = head.dense_width;
    }
    params.tensors.emplace(name + ".out.w", glorot_tensor({in, classes}, in, classes, rng));
    params.tensors.emplace(name + ".out.b", net::Tensor({classes}));
}

std::size_t embedding_dim(const VariantSpec& spec) {
    std::size_t dim = 0;
    if (spec.acoustic) dim += spec.acoustic->gru_width;
    if (spec.lexical) dim += spec.lexical->gru_width;
    return dim;
}

net::NodeRef param(const BoundParams& bound, const std::string& name) {
    auto it = bound.nodes.find(name);
    if (it == bound.nodes.end())
        throw DataError("network parameter missing from bound set: " + name);
    return it->second;
}

// Trunk for one stream: conv(+relu) stack, one max-pool, GRU stack; the
// stream representation is the last layer's final hidden state.
net::NodeRef branch_forward(net::Tape& tape, const std::string& name, const BranchSpec& b,
                            const BoundParams& bound, const net::Tensor& input) {
    if (input.rank() != 2)
        throw DataError(name + " input must be a [frames x features] matrix");
    if (input.dim(1) != b.input_dim)
        throw DataError(name + " input width " + std::to_string(input.dim(1)) +
                        " does not match branch input_dim " + std::to_string(b.input_dim));
    if (input.dim(0) < b.min_sequence_length())
        throw DataError(name + " input has " + std::to_string(input.dim(0)) +
                        " frames; conv stack needs at least " +
                        std::to_string(b.min_sequence_length()));

    net::NodeRef seq = tape.leaf(input);
    for (std::size_t i = 0; i < b.conv_layers; ++i) {
        const std::string prefix = name + ".conv" + std::to_string(i);
        seq = net::relu(tape, net::conv1d(tape, seq, param(bound, prefix + ".kernels"),
                                          param(bound, prefix + ".bias")));
    }
    seq = net::maxpool1d(tape, seq, b.pool_width);

    net::NodeRef h{};
    for (std::size_t l = 0; l < b.gru_layers; ++l) {
        const std::string prefix = name + ".gru" + std::to_string(l);
        const net::GruCellRefs refs{
            param(bound, prefix + ".wz"), param(bound, prefix + ".uz"),
            param(bound, prefix + ".bz"), param(bound, prefix + ".wr"),
            param(bound, prefix + ".ur"), param(bound, prefix + ".br"),
            param(bound, prefix + ".wh"), param(bound, prefix + ".uh"),
            param(bound, prefix + ".bh")};
        const std::size_t steps = tape.value(seq).dim(0);
        h = tape.leaf(net::Tensor({b.gru_width}));
        std::vector<net::NodeRef> states;
        states.reserve(steps);
        for (std::size_t t = 0; t < steps; ++t) {
            h = net::gru_cell_step(tape, h, net::row(tape, seq, t), refs);
            states.push_back(h);
        }
        if (l + 1 < b.gru_layers) seq = net::stack_rows(tape, states);
    }
    return h;
}

}  // namespace

net::NodeRef head_probs(net::Tape& tape, const std::string& name, const HeadSpec& head,
                        const BoundParams& bound, net::NodeRef x) {
    for (std::size_t i = 0; i < head.dense_layers; ++i) {
        const std::string prefix = name + ".dense" + std::to_string(i);
        x = net::dense(tape, x, param(bound, prefix + ".w"), param(bound, prefix + ".b"),
                       net::Activation::relu);
    }
    return net::softmax(
        tape, net::affine(tape, x, param(bound, name + ".out.w"), param(bound, name + ".out.b")));
}

NetworkParams build_head(const std::string& name, const HeadSpec& head, std::size_t input_dim,
                         std::size_t classes, std::uint64_t seed) {
    if (name.empty()) throw ConfigError("build_head: name must be non-empty");
    if (input_dim < 1 || classes < 2)
        throw ConfigError("build_head: input_dim must be >= 1 and classes >= 2");
    std::mt19937_64 rng(mix_seed(seed, fnv1a64("model.init")));
    NetworkParams params;
    params.fingerprint = fnv1a64("dcfd.head.v1|" + name + "|dense=" +
                                 std::to_string(head.dense_layers) + "x" +
                                 std::to_string(head.dense_width) + "|in=" +
                                 std::to_string(input_dim) + "|classes=" +
                                 std::to_string(classes));
    init_head(params, name, head, input_dim, classes, rng);
    return params;
}

NetworkParams build_variant(const VariantSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(mix_seed(seed, fnv1a64("model.init")));
    NetworkParams params;
    params.fingerprint = spec.fingerprint();
    if (spec.acoustic) init_branch(params, "acoustic", *spec.acoustic, rng);
    if (spec.lexical) init_branch(params, "lexical", *spec.lexical, rng);
    init_head(params, "emotion", spec.head, embedding_dim(spec), spec.emotion_classes, rng);
    if (spec.mode == TrainingMode::adversarial)
        init_head(params, "confound", spec.head, embedding_dim(spec), spec.confound_classes, rng);
    return params;
}

BoundParams bind_params(net::Tape& tape, const NetworkParams& params) {
    BoundParams bound;
    for (const auto& [name, tensor] : params.tensors) bound.nodes.emplace(name, tape.leaf(tensor));
    return bound;
}

ForwardNodes forward(net::Tape& tape, const VariantSpec& spec, const BoundParams& bound,
                     const SampleInput& input, const ForwardOptions& options) {
    const bool wants_acoustic = spec.modality != Modality::lexical;
    const bool wants_lexical = spec.modality != Modality::acoustic;
    if (wants_acoustic && input.acoustic == nullptr)
        throw DataError("variant needs an acoustic stream but the sample has none");
    if (wants_lexical && input.lexical == nullptr)
        throw DataError("variant needs a lexical stream but the sample has none");

    std::optional<net::NodeRef> acoustic_h;
    std::optional<net::NodeRef> lexical_h;
    if (wants_acoustic)
        acoustic_h = branch_forward(tape, "acoustic", *spec.acoustic, bound, *input.acoustic);
    if (wants_lexical)
        lexical_h = branch_forward(tape, "lexical", *spec.lexical, bound, *input.lexical);

    net::NodeRef embedding;
    if (acoustic_h && lexical_h)
        embedding = net::concat(tape, *acoustic_h, *lexical_h);
    else
        embedding = acoustic_h ? *acoustic_h : *lexical_h;

    ForwardNodes out;
    out.embedding = embedding;
    out.emotion_probs = head_probs(tape, "emotion", spec.head, bound, embedding);
    if (spec.mode == TrainingMode::adversarial) {
        net::NodeRef confound_in =
            options.grl_identity
                ? embedding
                : net::grad_reverse(tape, embedding, net::GrlConfig{*spec.lambda});
        out.confound_probs = head_probs(tape, "confound", spec.head, bound, confound_in);
    }
    return out;
}

ForwardOutput predict(const VariantSpec& spec, const NetworkParams& params,
                      const SampleInput& input) {
    if (params.fingerprint != spec.fingerprint())
        throw DataError("parameter set fingerprint does not match the variant spec");
    net::Tape tape;
    const BoundParams bound = bind_params(tape, params);
    const ForwardNodes nodes = forward(tape, spec, bound, input);
    ForwardOutput out;
    out.embedding = tape.value(nodes.embedding);
    out.emotion_probs = tape.value(nodes.emotion_probs);
    if (nodes.confound_probs) out.confound_probs = tape.value(*nodes.confound_probs);
    return out;
}

}  // namespace dcfd::model
