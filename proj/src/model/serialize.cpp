#include "deconfound/model/serialize.hpp"

#include <nlohmann/json.hpp>

#include "deconfound/common.hpp"

namespace dcfd::model {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json branch_to_json(const BranchSpec& b) {
    ordered_json j;
    j["input_dim"] = b.input_dim;
    j["conv_layers"] = b.conv_layers;
    j["kernel_width"] = b.kernel_width;
    j["conv_width"] = b.conv_width;
    j["pool_width"] = b.pool_width;
    j["gru_layers"] = b.gru_layers;
    j["gru_width"] = b.gru_width;
    return j;
}

BranchSpec branch_from_json(const ordered_json& j) {
    BranchSpec b;
    b.input_dim = j.at("input_dim").get<std::size_t>();
    b.conv_layers = j.at("conv_layers").get<std::size_t>();
    b.kernel_width = j.at("kernel_width").get<std::size_t>();
    b.conv_width = j.at("conv_width").get<std::size_t>();
    b.pool_width = j.at("pool_width").get<std::size_t>();
    b.gru_layers = j.at("gru_layers").get<std::size_t>();
    b.gru_width = j.at("gru_width").get<std::size_t>();
    return b;
}

}  // namespace

std::string variant_to_json(const VariantSpec& spec) {
    ordered_json j;
    j["mode"] = to_string(spec.mode);
    j["target"] = to_string(spec.target);
    j["modality"] = to_string(spec.modality);
    if (spec.acoustic) j["acoustic"] = branch_to_json(*spec.acoustic);
    if (spec.lexical) j["lexical"] = branch_to_json(*spec.lexical);
    j["head"] = {{"dense_layers", spec.head.dense_layers}, {"dense_width", spec.head.dense_width}};
    if (spec.lambda) j["lambda"] = *spec.lambda;
    j["emotion_classes"] = spec.emotion_classes;
    j["confound_classes"] = spec.confound_classes;
    j["grid_mode"] = spec.grid_mode;
    return j.dump();
}

VariantSpec variant_from_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const std::exception& e) {
        throw DataError(std::string("variant spec JSON: ") + e.what());
    }
    try {
        VariantSpec spec;
        spec.mode = training_mode_from_string(j.at("mode").get<std::string>());
        spec.target = emotion_target_from_string(j.at("target").get<std::string>());
        spec.modality = modality_from_string(j.at("modality").get<std::string>());
        if (j.contains("acoustic")) spec.acoustic = branch_from_json(j["acoustic"]);
        if (j.contains("lexical")) spec.lexical = branch_from_json(j["lexical"]);
        spec.head.dense_layers = j.at("head").at("dense_layers").get<std::size_t>();
        spec.head.dense_width = j.at("head").at("dense_width").get<std::size_t>();
        if (j.contains("lambda")) spec.lambda = j["lambda"].get<double>();
        spec.emotion_classes = j.at("emotion_classes").get<std::size_t>();
        spec.confound_classes = j.at("confound_classes").get<std::size_t>();
        spec.grid_mode = j.value("grid_mode", false);
        spec.validate();
        return spec;
    } catch (const ConfigError&) {
        throw;
    } catch (const DataError&) {
        throw;
    } catch (const std::exception& e) {
        throw DataError(std::string("variant spec JSON: ") + e.what());
    }
}

}  // namespace dcfd::model
