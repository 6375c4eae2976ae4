#include "deconfound/data/manifest.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "deconfound/common.hpp"

namespace dcfd::data {

namespace {

using nlohmann::json;

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    if constexpr (std::is_same_v<T, double>) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
        for (std::size_t i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    } else {
        auto v = static_cast<std::uint64_t>(value);
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            bytes[i] = static_cast<unsigned char>(v >> (8 * i));
        }
    }
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
        throw DataError("unexpected end of binary file");
    }
    std::uint64_t v = 0;
    for (std::size_t i = sizeof(T); i-- > 0;) v = (v << 8) | bytes[i];
    if constexpr (std::is_same_v<T, double>) {
        return std::bit_cast<double>(v);
    } else {
        return static_cast<T>(v);
    }
}

}  // namespace

net::Tensor read_feature_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open feature file: " + path.string());
    const auto rank = read_le<std::uint64_t>(in);
    if (rank == 0 || rank > 3) {
        throw DataError("feature file has unsupported rank: " + path.string());
    }
    std::vector<std::size_t> shape(rank);
    std::size_t numel = 1;
    for (auto& d : shape) {
        d = static_cast<std::size_t>(read_le<std::uint64_t>(in));
        if (d == 0) throw DataError("feature file has zero dimension: " + path.string());
        numel *= d;
    }
    std::vector<double> values(numel);
    for (double& v : values) v = read_le<double>(in);
    return net::Tensor(std::move(shape), std::move(values));
}

void write_feature_file(const std::filesystem::path& path, const net::Tensor& tensor) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write feature file: " + path.string());
        write_le<std::uint64_t>(out, tensor.rank());
        for (std::size_t i = 0; i < tensor.rank(); ++i) {
            write_le<std::uint64_t>(out, tensor.dim(i));
        }
        for (double v : tensor.values()) write_le<double>(out, v);
    }
    std::filesystem::rename(tmp, path);
}

features::Waveform read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open wav file: " + path.string());
    auto read_u32 = [&] { return static_cast<std::uint32_t>(read_le<std::uint32_t>(in)); };
    auto read_u16 = [&] { return static_cast<std::uint16_t>(read_le<std::uint16_t>(in)); };
    char tag[4];
    auto read_tag = [&](const char* expect) {
        if (!in.read(tag, 4) || std::memcmp(tag, expect, 4) != 0) {
            throw DataError("not a RIFF/WAVE file: " + path.string());
        }
    };
    read_tag("RIFF");
    read_u32();  // chunk size
    read_tag("WAVE");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    features::Waveform w;
    bool got_fmt = false, got_data = false;
    while (in.read(tag, 4)) {
        const std::uint32_t size = read_u32();
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            format = read_u16();
            channels = read_u16();
            sample_rate = read_u32();
            read_u32();  // byte rate
            read_u16();  // block align
            bits = read_u16();
            if (size > 16) in.seekg(size - 16, std::ios::cur);
            got_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            if (!got_fmt) throw DataError("wav data chunk before fmt: " + path.string());
            if (channels != 1) {
                throw DataError("wav must be mono (got " + std::to_string(channels) +
                                " channels): " + path.string());
            }
            if (format == 1 && bits == 16) {
                const std::size_t n = size / 2;
                w.samples.resize(n);
                for (std::size_t i = 0; i < n; ++i) {
                    const auto raw = static_cast<std::int16_t>(read_le<std::uint16_t>(in));
                    w.samples[i] = static_cast<double>(raw) / 32768.0;
                }
            } else if (format == 3 && bits == 32) {
                const std::size_t n = size / 4;
                w.samples.resize(n);
                for (std::size_t i = 0; i < n; ++i) {
                    const auto bits32 = static_cast<std::uint32_t>(read_le<std::uint32_t>(in));
                    w.samples[i] = static_cast<double>(std::bit_cast<float>(bits32));
                }
            } else {
                throw DataError("unsupported wav encoding (need PCM16 or float32): " +
                                path.string());
            }
            got_data = true;
            break;
        } else {
            in.seekg(size + (size & 1), std::ios::cur);  // skip unknown chunk (padded)
        }
    }
    if (!got_data) throw DataError("wav file has no data chunk: " + path.string());
    w.sample_rate = static_cast<double>(sample_rate);
    return w;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write file: " + path.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

std::vector<Utterance> read_manifest(const std::filesystem::path& path, bool load_features) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path.string());
    const std::filesystem::path base = path.parent_path();
    std::vector<Utterance> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            Utterance u;
            u.id = j.at("id").get<std::string>();
            u.speaker_id = j.at("speaker").get<std::string>();
            u.session_id = j.at("session").get<std::string>();
            u.corpus = j.value("corpus", std::string("unknown"));
            u.duration_s = j.at("duration_s").get<double>();
            if (j.contains("tokens") && !j["tokens"].is_null()) {
                u.tokens = j["tokens"].get<std::vector<std::string>>();
            }
            if (j.contains("activation") && !j["activation"].is_null()) {
                u.activation_rating = j["activation"].get<double>();
            }
            if (j.contains("valence") && !j["valence"].is_null()) {
                u.valence_rating = j["valence"].get<double>();
            }
            if (j.contains("confound") && !j["confound"].is_null()) {
                const json& c = j["confound"];
                const std::string kind = c.at("kind").get<std::string>();
                if (kind == "pss") {
                    u.confound = PssScore{c.at("score").get<double>()};
                } else if (kind == "spontaneity") {
                    const std::string v = c.at("value").get<std::string>();
                    if (v != "scripted" && v != "improvised") {
                        throw DataError("manifest line " + std::to_string(line_no) +
                                        ": bad spontaneity value '" + v + "'");
                    }
                    u.confound = SpontaneityFlag{v == "improvised"};
                } else {
                    throw DataError("manifest line " + std::to_string(line_no) +
                                    ": unknown confound kind '" + kind + "'");
                }
            }
            if (j.contains("acoustic") && !j["acoustic"].is_null()) {
                u.acoustic_path = j["acoustic"].get<std::string>();
                if (load_features && u.acoustic_path.ends_with(".dtn")) {
                    u.acoustic = read_feature_file(base / u.acoustic_path);
                }
            }
            out.push_back(std::move(u));
        } catch (const json::exception& e) {
            throw DataError("manifest line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (out.empty()) throw DataError("manifest is empty: " + path.string());
    return out;
}

void write_manifest(const std::filesystem::path& path, std::vector<Utterance>& utterances,
                    const std::string& feature_dir) {
    const std::filesystem::path base = path.parent_path();
    std::error_code ec;
    std::filesystem::create_directories(base / feature_dir, ec);
    std::ostringstream buf;
    for (Utterance& u : utterances) {
        if (u.acoustic.has_value() && u.acoustic_path.empty()) {
            u.acoustic_path = feature_dir + "/" + u.id + ".dtn";
            write_feature_file(base / u.acoustic_path, *u.acoustic);
        }
        json j;
        j["id"] = u.id;
        j["speaker"] = u.speaker_id;
        j["session"] = u.session_id;
        j["corpus"] = u.corpus;
        j["duration_s"] = u.duration_s;
        if (!u.tokens.empty()) j["tokens"] = u.tokens;
        if (u.activation_rating) j["activation"] = *u.activation_rating;
        if (u.valence_rating) j["valence"] = *u.valence_rating;
        if (const auto* pss = std::get_if<PssScore>(&u.confound)) {
            j["confound"] = {{"kind", "pss"}, {"score", pss->score}};
        } else if (const auto* sp = std::get_if<SpontaneityFlag>(&u.confound)) {
            j["confound"] = {{"kind", "spontaneity"},
                             {"value", sp->improvised ? "improvised" : "scripted"}};
        }
        if (!u.acoustic_path.empty()) j["acoustic"] = u.acoustic_path;
        buf << j.dump() << '\n';
    }
    write_text_atomic(path, buf.str());
}

}  // namespace dcfd::data
