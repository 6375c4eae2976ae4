#include <vector>

#include "deconfound/common.hpp"
#include "deconfound/features/embedding.hpp"
#include "deconfound/train/trainer.hpp"

namespace dcfd::train {

std::vector<PreparedSample> prepare_samples(std::span<const data::LabeledSample> samples,
                                            model::Modality modality,
                                            const features::EmbeddingTable* embeddings) {
    const bool wants_acoustic = modality != model::Modality::lexical;
    const bool wants_lexical = modality != model::Modality::acoustic;
    if (wants_lexical && embeddings == nullptr)
        throw ConfigError("lexical modality requires an embedding table");

    std::vector<PreparedSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        PreparedSample p;
        p.labeled = &s;
        if (wants_acoustic) {
            if (!s.utt->acoustic)
                throw DataError("utterance " + s.utt->id + " has no acoustic features loaded");
            p.acoustic = &*s.utt->acoustic;
        }
        if (wants_lexical) {
            if (s.utt->tokens.empty())
                throw DataError("utterance " + s.utt->id + " has no tokens");
            p.lexical = features::embed_tokens(s.utt->tokens, *embeddings);
        }
        out.push_back(std::move(p));
    }
    return out;
}

model::SampleInput input_for(const PreparedSample& s) {
    model::SampleInput input;
    input.acoustic = s.acoustic;
    if (s.lexical) input.lexical = &*s.lexical;
    return input;
}

net::Tensor class_weights_from_labels(std::span<const int> labels, std::size_t n_classes) {
    if (labels.empty()) throw DataError("class_weights: empty training set");
    std::vector<double> counts(n_classes, 0.0);
    for (const int label : labels) {
        if (label < 0 || static_cast<std::size_t>(label) >= n_classes)
            throw DataError("label " + std::to_string(label) + " outside the declared " +
                            std::to_string(n_classes) + " classes");
        counts[static_cast<std::size_t>(label)] += 1.0;
    }
    net::Tensor weights({n_classes});
    double total = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (counts[c] == 0.0)
            throw NumericError("class " + std::to_string(c) + " has no training examples");
        weights[c] = 1.0 / counts[c];
        total += weights[c];
    }
    const double mean = total / static_cast<double>(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) weights[c] /= mean;
    return weights;
}

net::Tensor class_weights(std::span<const PreparedSample> train, std::size_t n_classes,
                          bool confound) {
    std::vector<int> labels;
    labels.reserve(train.size());
    for (const auto& s : train)
        labels.push_back(confound ? s.labeled->confound : s.labeled->emotion);
    return class_weights_from_labels(labels, n_classes);
}

}  // namespace dcfd::train
