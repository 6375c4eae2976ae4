#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "deconfound/common.hpp"
#include "deconfound/model/serialize.hpp"
#include "deconfound/train/trainer.hpp"

namespace dcfd::train {

using ordered_json = nlohmann::ordered_json;

void write_run_ledger(const std::filesystem::path& path, std::span<const RunRecord> runs,
                      std::span<const std::string> checkpoint_paths,
                      const std::string& config_hash_hex) {
    if (!checkpoint_paths.empty() && checkpoint_paths.size() != runs.size())
        throw ConfigError("write_run_ledger: checkpoint paths must match runs");

    std::ostringstream out;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const RunRecord& r = runs[i];
        ordered_json line;
        line["fingerprint"] = to_hex(r.spec.fingerprint());
        line["mode"] = model::to_string(r.spec.mode);
        line["target"] = model::to_string(r.spec.target);
        line["modality"] = model::to_string(r.spec.modality);
        line["spec"] = ordered_json::parse(model::variant_to_json(r.spec));
        if (r.spec.lambda) line["lambda"] = *r.spec.lambda;
        line["seed"] = r.seed;
        line["epochs"] = r.trace.size();
        line["best_epoch"] = r.best_epoch;
        line["admissible"] = r.admissible;
        line["val_emotion_uar"] = r.val_emotion_uar;
        line["test_emotion_uar"] = r.test_emotion_uar;
        if (r.test_confound_uar) line["test_confound_uar"] = *r.test_confound_uar;
        ordered_json trace = ordered_json::array();
        for (const auto& e : r.trace) {
            ordered_json epoch;
            epoch["train_loss"] = e.train_loss;
            epoch["val_emotion_loss"] = e.val_emotion_loss;
            epoch["val_emotion_uar"] = e.val_emotion_uar;
            if (e.val_confound_uar) epoch["val_confound_uar"] = *e.val_confound_uar;
            trace.push_back(std::move(epoch));
        }
        line["trace"] = std::move(trace);
        if (!checkpoint_paths.empty()) line["checkpoint"] = checkpoint_paths[i];
        if (!config_hash_hex.empty()) line["config"] = config_hash_hex;
        out << line.dump() << "\n";
    }

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("cannot write run ledger: " + tmp.string());
        const std::string text = out.str();
        f.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!f) throw DataError("run ledger write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::vector<LedgerEntry> read_run_ledger(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open run ledger: " + path.string());

    std::vector<LedgerEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw DataError("run ledger " + path.string() + " line " + std::to_string(line_no) +
                            ": " + e.what());
        }
        try {
            LedgerEntry entry;
            entry.fingerprint_hex = j.at("fingerprint").get<std::string>();
            entry.mode = j.at("mode").get<std::string>();
            entry.target = j.at("target").get<std::string>();
            entry.modality = j.at("modality").get<std::string>();
            if (j.contains("spec")) entry.spec_json = j["spec"].dump();
            if (j.contains("lambda")) entry.lambda = j["lambda"].get<double>();
            entry.seed = j.at("seed").get<std::uint64_t>();
            entry.epochs = j.at("epochs").get<std::size_t>();
            entry.best_epoch = j.at("best_epoch").get<std::size_t>();
            entry.admissible = j.at("admissible").get<bool>();
            entry.val_emotion_uar = j.at("val_emotion_uar").get<double>();
            entry.test_emotion_uar = j.at("test_emotion_uar").get<double>();
            if (j.contains("test_confound_uar"))
                entry.test_confound_uar = j["test_confound_uar"].get<double>();
            if (j.contains("checkpoint")) entry.checkpoint = j["checkpoint"].get<std::string>();
            if (j.contains("config")) entry.config_hash = j["config"].get<std::string>();
            entries.push_back(std::move(entry));
        } catch (const DataError&) {
            throw;
        } catch (const std::exception& e) {
            throw DataError("run ledger " + path.string() + " line " + std::to_string(line_no) +
                            ": " + e.what());
        }
    }
    if (entries.empty()) throw DataError("run ledger is empty: " + path.string());
    return entries;
}

}  // namespace dcfd::train
