#include "deconfound/model/variant.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <sstream>

#include "deconfound/common.hpp"

namespace dcfd::model {
namespace {

constexpr std::array<std::size_t, 2> kGridConvLayers{3, 4};
constexpr std::array<std::size_t, 2> kGridKernelWidth{2, 3};
constexpr std::array<std::size_t, 3> kGridConvWidth{32, 64, 128};
constexpr std::array<std::size_t, 1> kGridPoolWidth{2};
constexpr std::array<std::size_t, 2> kGridGruLayers{2, 3};
constexpr std::array<std::size_t, 1> kGridGruWidth{32};
constexpr std::array<std::size_t, 2> kGridDenseLayers{1, 2};
constexpr std::array<std::size_t, 2> kGridDenseWidth{32, 64};
constexpr std::array<double, 3> kGridLambda{0.3, 0.6, 0.8};

template <typename C, typename T>
bool in_grid(const C& grid, const T& value) {
    return std::find(grid.begin(), grid.end(), value) != grid.end();
}

void validate_branch(const BranchSpec& b, const char* name, bool grid_mode) {
    auto require = [&](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(std::string(name) + " branch: " + what);
    };
    require(b.input_dim >= 1, "input_dim must be >= 1");
    require(b.conv_layers >= 1, "conv_layers must be >= 1");
    require(b.kernel_width >= 1, "kernel_width must be >= 1");
    require(b.conv_width >= 1, "conv_width must be >= 1");
    require(b.pool_width >= 1, "pool_width must be >= 1");
    require(b.gru_layers >= 1, "gru_layers must be >= 1");
    require(b.gru_width >= 1, "gru_width must be >= 1");
    if (grid_mode) {
        require(in_grid(kGridConvLayers, b.conv_layers), "conv_layers outside grid {3,4}");
        require(in_grid(kGridKernelWidth, b.kernel_width), "kernel_width outside grid {2,3}");
        require(in_grid(kGridConvWidth, b.conv_width), "conv_width outside grid {32,64,128}");
        require(in_grid(kGridPoolWidth, b.pool_width), "pool_width outside grid {2}");
        require(in_grid(kGridGruLayers, b.gru_layers), "gru_layers outside grid {2,3}");
        require(in_grid(kGridGruWidth, b.gru_width), "gru_width outside grid {32}");
    }
}

void append_branch(std::ostringstream& out, const char* name, const BranchSpec& b) {
    out << name << "(in=" << b.input_dim << ",conv=" << b.conv_layers << "x" << b.conv_width
        << ",k=" << b.kernel_width << ",pool=" << b.pool_width << ",gru=" << b.gru_layers << "x"
        << b.gru_width << ")";
}

std::string format_lambda(double lambda) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), lambda);
    return std::string(buf.data(), ptr);
}

}  // namespace

void VariantSpec::validate() const {
    const bool wants_acoustic = modality != Modality::lexical;
    const bool wants_lexical = modality != Modality::acoustic;
    if (wants_acoustic != acoustic.has_value())
        throw ConfigError(std::string("acoustic branch must be ") +
                          (wants_acoustic ? "present" : "absent") + " for modality " +
                          to_string(modality));
    if (wants_lexical != lexical.has_value())
        throw ConfigError(std::string("lexical branch must be ") +
                          (wants_lexical ? "present" : "absent") + " for modality " +
                          to_string(modality));
    if (acoustic) validate_branch(*acoustic, "acoustic", grid_mode);
    if (lexical) validate_branch(*lexical, "lexical", grid_mode);

    if (head.dense_layers < 1) throw ConfigError("head: dense_layers must be >= 1");
    if (head.dense_width < 1) throw ConfigError("head: dense_width must be >= 1");
    if (grid_mode) {
        if (!in_grid(kGridDenseLayers, head.dense_layers))
            throw ConfigError("head: dense_layers outside grid {1,2}");
        if (!in_grid(kGridDenseWidth, head.dense_width))
            throw ConfigError("head: dense_width outside grid {32,64}");
    }

    if ((mode == TrainingMode::adversarial) != lambda.has_value())
        throw ConfigError(std::string("lambda must be ") +
                          (mode == TrainingMode::adversarial ? "present" : "absent") +
                          " for mode " + to_string(mode));
    if (lambda) {
        if (!(*lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
        if (grid_mode && !in_grid(kGridLambda, *lambda))
            throw ConfigError("lambda outside grid {0.3,0.6,0.8}");
    }

    if (emotion_classes < 2) throw ConfigError("emotion_classes must be >= 2");
    if (confound_classes < 2) throw ConfigError("confound_classes must be >= 2");
}

std::string VariantSpec::canonical_string() const {
    std::ostringstream out;
    out << "dcfd.variant.v1|mode=" << to_string(mode) << "|target=" << to_string(target)
        << "|modality=" << to_string(modality) << "|";
    if (acoustic) {
        append_branch(out, "acoustic", *acoustic);
        out << "|";
    }
    if (lexical) {
        append_branch(out, "lexical", *lexical);
        out << "|";
    }
    out << "head(dense=" << head.dense_layers << "x" << head.dense_width << ")";
    if (lambda) out << "|lambda=" << format_lambda(*lambda);
    out << "|emotion_classes=" << emotion_classes << "|confound_classes=" << confound_classes;
    return out.str();
}

std::uint64_t VariantSpec::fingerprint() const { return fnv1a64(canonical_string()); }

const char* to_string(TrainingMode m) {
    return m == TrainingMode::normal ? "normal" : "adversarial";
}

const char* to_string(Modality m) {
    switch (m) {
        case Modality::acoustic: return "acoustic";
        case Modality::lexical: return "lexical";
        default: return "multimodal";
    }
}

const char* to_string(EmotionTarget t) {
    return t == EmotionTarget::activation ? "activation" : "valence";
}

TrainingMode training_mode_from_string(const std::string& s) {
    if (s == "normal") return TrainingMode::normal;
    if (s == "adversarial") return TrainingMode::adversarial;
    throw ConfigError("unknown training mode: " + s);
}

Modality modality_from_string(const std::string& s) {
    if (s == "acoustic") return Modality::acoustic;
    if (s == "lexical") return Modality::lexical;
    if (s == "multimodal") return Modality::multimodal;
    throw ConfigError("unknown modality: " + s);
}

EmotionTarget emotion_target_from_string(const std::string& s) {
    if (s == "activation") return EmotionTarget::activation;
    if (s == "valence") return EmotionTarget::valence;
    throw ConfigError("unknown emotion target: " + s);
}

std::vector<VariantSpec> enumerate_grid(TrainingMode mode, EmotionTarget target,
                                        Modality modality, std::size_t acoustic_dim,
                                        std::size_t lexical_dim, std::size_t emotion_classes,
                                        std::size_t confound_classes) {
    // Branch combinations in a fixed nesting order so the enumeration is
    // reproducible: conv_layers > kernel_width > conv_width > gru_layers.
    auto branch_grid = [](std::size_t input_dim) {
        std::vector<BranchSpec> out;
        for (std::size_t cl : kGridConvLayers)
            for (std::size_t kw : kGridKernelWidth)
                for (std::size_t cw : kGridConvWidth)
                    for (std::size_t gl : kGridGruLayers) {
                        BranchSpec b;
                        b.input_dim = input_dim;
                        b.conv_layers = cl;
                        b.kernel_width = kw;
                        b.conv_width = cw;
                        b.pool_width = kGridPoolWidth[0];
                        b.gru_layers = gl;
                        b.gru_width = kGridGruWidth[0];
                        out.push_back(b);
                    }
        return out;
    };

    std::vector<std::optional<BranchSpec>> acoustic_options;
    std::vector<std::optional<BranchSpec>> lexical_options;
    if (modality != Modality::lexical) {
        if (acoustic_dim == 0) throw ConfigError("enumerate_grid: acoustic_dim must be >= 1");
        for (auto& b : branch_grid(acoustic_dim)) acoustic_options.emplace_back(b);
    } else {
        acoustic_options.emplace_back(std::nullopt);
    }
    if (modality != Modality::acoustic) {
        if (lexical_dim == 0) throw ConfigError("enumerate_grid: lexical_dim must be >= 1");
        for (auto& b : branch_grid(lexical_dim)) lexical_options.emplace_back(b);
    } else {
        lexical_options.emplace_back(std::nullopt);
    }

    std::vector<double> lambdas;
    if (mode == TrainingMode::adversarial)
        lambdas.assign(kGridLambda.begin(), kGridLambda.end());
    else
        lambdas.push_back(0.0);  // placeholder; not stored for normal mode

    std::vector<VariantSpec> out;
    for (const auto& ab : acoustic_options)
        for (const auto& lb : lexical_options)
            for (std::size_t dl : kGridDenseLayers)
                for (std::size_t dw : kGridDenseWidth)
                    for (double lam : lambdas) {
                        VariantSpec spec;
                        spec.mode = mode;
                        spec.target = target;
                        spec.modality = modality;
                        spec.acoustic = ab;
                        spec.lexical = lb;
                        spec.head = HeadSpec{dl, dw};
                        if (mode == TrainingMode::adversarial) spec.lambda = lam;
                        spec.emotion_classes = emotion_classes;
                        spec.confound_classes = confound_classes;
                        spec.grid_mode = true;
                        spec.validate();
                        out.push_back(std::move(spec));
                    }
    return out;
}

std::vector<VariantSpec> twelve_variants(const BranchSpec& acoustic_template,
                                         const BranchSpec& lexical_template, const HeadSpec& head,
                                         double lambda, std::size_t emotion_classes,
                                         std::size_t confound_classes) {
    std::vector<VariantSpec> out;
    for (TrainingMode mode : {TrainingMode::normal, TrainingMode::adversarial})
        for (EmotionTarget target : {EmotionTarget::activation, EmotionTarget::valence})
            for (Modality modality :
                 {Modality::acoustic, Modality::lexical, Modality::multimodal}) {
                VariantSpec spec;
                spec.mode = mode;
                spec.target = target;
                spec.modality = modality;
                if (modality != Modality::lexical) spec.acoustic = acoustic_template;
                if (modality != Modality::acoustic) spec.lexical = lexical_template;
                spec.head = head;
                if (mode == TrainingMode::adversarial) spec.lambda = lambda;
                spec.emotion_classes = emotion_classes;
                spec.confound_classes = confound_classes;
                spec.validate();
                out.push_back(std::move(spec));
            }
    return out;
}

}  // namespace dcfd::model
