#include "deconfound/features/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "deconfound/common.hpp"

namespace dcfd::features {

EmbeddingTable::EmbeddingTable(std::size_t dim,
                               std::unordered_map<std::string, std::vector<double>> vectors)
    : dim_(dim), vectors_(std::move(vectors)) {
    if (dim_ == 0) throw DataError("embedding table: dimension must be >= 1");
    for (const auto& [token, vec] : vectors_) {
        if (vec.size() != dim_) {
            throw DataError("embedding table: vector width mismatch for token '" + token + "'");
        }
    }
    if (vectors_.count(kUnkToken) == 0) {
        throw DataError("embedding table: missing designated <unk> token");
    }
}

const std::vector<double>& EmbeddingTable::lookup(const std::string& token) const {
    auto it = vectors_.find(token);
    if (it != vectors_.end()) return it->second;
    return vectors_.at(kUnkToken);
}

EmbeddingTable load_embedding_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding file: " + path.string());
    std::size_t count = 0, dim = 0;
    {
        std::string header;
        if (!std::getline(in, header)) throw DataError("embedding file: missing header");
        std::istringstream hs(header);
        if (!(hs >> count >> dim) || count == 0 || dim == 0) {
            throw DataError("embedding file: malformed 'count dim' header");
        }
    }
    std::unordered_map<std::string, std::vector<double>> vectors;
    vectors.reserve(count);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string token;
        if (!(ls >> token)) throw DataError("embedding file: blank row");
        std::vector<double> vec(dim);
        for (std::size_t i = 0; i < dim; ++i) {
            if (!(ls >> vec[i])) {
                throw DataError("embedding file: row for '" + token + "' has fewer than " +
                                std::to_string(dim) + " values");
            }
        }
        double extra;
        if (ls >> extra) {
            throw DataError("embedding file: row for '" + token + "' has too many values");
        }
        if (!vectors.emplace(token, std::move(vec)).second) {
            throw DataError("embedding file: duplicate token '" + token + "'");
        }
        ++rows;
    }
    if (rows != count) {
        throw DataError("embedding file: header declares " + std::to_string(count) +
                        " rows, found " + std::to_string(rows));
    }
    return EmbeddingTable(dim, std::move(vectors));
}

void save_embedding_table(const std::filesystem::path& path, const EmbeddingTable& table) {
    std::vector<std::string> tokens;
    tokens.reserve(table.size());
    for (const auto& [token, vec] : table.vectors()) tokens.push_back(token);
    std::sort(tokens.begin(), tokens.end());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write embedding file: " + path.string());
    out << table.size() << ' ' << table.dim() << '\n';
    out.precision(17);
    for (const std::string& token : tokens) {
        out << token;
        for (double v : table.lookup(token)) out << ' ' << v;
        out << '\n';
    }
}

net::Tensor embed_tokens(const std::vector<std::string>& tokens, const EmbeddingTable& table) {
    if (tokens.empty()) throw DataError("embed_tokens: empty token sequence");
    net::Tensor out({tokens.size(), table.dim()});
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::vector<double>& vec = table.lookup(tokens[i]);
        for (std::size_t d = 0; d < table.dim(); ++d) out.at(i, d) = vec[d];
    }
    return out;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream ss(text);
    std::string raw;
    auto is_punct = [](unsigned char c) { return std::ispunct(c) && c != '<' && c != '>'; };
    while (ss >> raw) {
        std::size_t lo = 0, hi = raw.size();
        while (lo < hi && is_punct(static_cast<unsigned char>(raw[lo]))) ++lo;
        while (hi > lo && is_punct(static_cast<unsigned char>(raw[hi - 1]))) --hi;
        if (lo == hi) continue;
        std::string tok = raw.substr(lo, hi - lo);
        std::transform(tok.begin(), tok.end(), tok.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

}  // namespace dcfd::features
