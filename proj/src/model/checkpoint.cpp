#include "deconfound/model/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "deconfound/common.hpp"

namespace dcfd::model {
namespace {

constexpr char kMagic[8] = {'D', 'C', 'F', 'D', '0', '0', '0', '1'};

template <typename T>
void append_le(std::string& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(bytes.begin(), bytes.end());
    out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

class Reader {
public:
    Reader(const unsigned char* data, std::size_t size, const std::filesystem::path& path)
        : data_(data), size_(size), path_(path) {}

    template <typename T>
    T take() {
        if (pos_ + sizeof(T) > size_)
            throw DataError("truncated checkpoint: " + path_.string());
        std::array<unsigned char, sizeof(T)> bytes{};
        std::memcpy(bytes.data(), data_ + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big)
            std::reverse(bytes.begin(), bytes.end());
        pos_ += sizeof(T);
        return std::bit_cast<T>(bytes);
    }

    std::string take_string(std::size_t n) {
        if (pos_ + n > size_) throw DataError("truncated checkpoint: " + path_.string());
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return size_ - pos_; }

private:
    const unsigned char* data_;
    std::size_t size_;
    const std::filesystem::path& path_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const NetworkParams& params) {
    std::string header;
    append_le(header, params.fingerprint);
    if (params.tensors.size() > std::numeric_limits<std::uint32_t>::max())
        throw DataError("checkpoint tensor count exceeds the format limit");
    append_le(header, static_cast<std::uint32_t>(params.tensors.size()));

    std::string payload;
    for (const auto& [name, tensor] : params.tensors) {
        append_le(header, static_cast<std::uint32_t>(name.size()));
        header.append(name);
        append_le(header, static_cast<std::uint32_t>(tensor.rank()));
        for (std::size_t d : tensor.shape()) append_le(header, static_cast<std::uint64_t>(d));
        append_le(header, static_cast<std::uint64_t>(payload.size()));
        for (double v : tensor.values()) append_le(payload, v);
    }

    std::string blob;
    blob.reserve(sizeof(kMagic) + sizeof(std::uint64_t) + header.size() + payload.size());
    blob.append(kMagic, sizeof(kMagic));
    append_le(blob, static_cast<std::uint64_t>(header.size()));
    blob.append(header);
    blob.append(payload);

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write checkpoint: " + tmp.string());
        out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
        if (!out) throw DataError("checkpoint write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

NetworkParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());

    Reader reader(bytes.data(), bytes.size(), path);
    if (reader.take_string(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
        throw DataError("not a checkpoint file (bad magic): " + path.string());
    const auto header_len = reader.take<std::uint64_t>();
    if (header_len > reader.remaining())
        throw DataError("truncated checkpoint: " + path.string());
    const std::size_t payload_start = reader.pos() + static_cast<std::size_t>(header_len);

    NetworkParams params;
    params.fingerprint = reader.take<std::uint64_t>();
    const auto count = reader.take<std::uint32_t>();

    struct Entry {
        std::string name;
        std::vector<std::size_t> shape;
        std::uint64_t offset;
    };
    std::vector<Entry> entries;
    entries.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Entry e;
        const auto name_len = reader.take<std::uint32_t>();
        e.name = reader.take_string(name_len);
        const auto rank = reader.take<std::uint32_t>();
        if (rank < 1 || rank > 3)
            throw DataError("checkpoint tensor '" + e.name + "' has unsupported rank " +
                            std::to_string(rank));
        for (std::uint32_t d = 0; d < rank; ++d) {
            const auto dim = reader.take<std::uint64_t>();
            if (dim == 0) throw DataError("checkpoint tensor '" + e.name + "' has a zero dim");
            e.shape.push_back(static_cast<std::size_t>(dim));
        }
        e.offset = reader.take<std::uint64_t>();
        entries.push_back(std::move(e));
    }
    if (reader.pos() > payload_start)
        throw DataError("checkpoint header overruns its declared length: " + path.string());

    const std::size_t payload_size = bytes.size() - payload_start;
    Reader payload(bytes.data() + payload_start, payload_size, path);
    for (const auto& e : entries) {
        std::size_t numel = 1;
        for (std::size_t d : e.shape) numel *= d;
        if (e.offset + numel * sizeof(double) > payload_size)
            throw DataError("truncated checkpoint payload for tensor '" + e.name + "': " +
                            path.string());
        Reader cursor(bytes.data() + payload_start + e.offset, numel * sizeof(double), path);
        net::Tensor t(e.shape);
        for (std::size_t i = 0; i < numel; ++i) t[i] = cursor.take<double>();
        if (!params.tensors.emplace(e.name, std::move(t)).second)
            throw DataError("duplicate tensor name in checkpoint: " + e.name);
    }
    return params;
}

NetworkParams load_checkpoint(const std::filesystem::path& path, const VariantSpec& expected) {
    NetworkParams params = load_checkpoint(path);
    if (params.fingerprint != expected.fingerprint())
        throw DataError("checkpoint fingerprint " + to_hex(params.fingerprint) +
                        " does not match variant fingerprint " +
                        to_hex(expected.fingerprint()) + ": " + path.string());
    return params;
}

}  // namespace dcfd::model
