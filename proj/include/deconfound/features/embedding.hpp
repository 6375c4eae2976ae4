#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "deconfound/netcore/tensor.hpp"

namespace dcfd::features {

// The designated out-of-vocabulary token. Every table must define it.
inline constexpr const char* kUnkToken = "<unk>";

// Token -> fixed-width vector map with a designated unknown-token vector.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::size_t dim, std::unordered_map<std::string, std::vector<double>> vectors);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return vectors_.size(); }
    bool contains(const std::string& token) const { return vectors_.count(token) > 0; }

    // Returns the token's vector, or the <unk> vector for unseen tokens.
    const std::vector<double>& lookup(const std::string& token) const;

    const std::unordered_map<std::string, std::vector<double>>& vectors() const {
        return vectors_;
    }

private:
    std::size_t dim_ = 0;
    std::unordered_map<std::string, std::vector<double>> vectors_;
};

// Text format: header line "count dim", then one row per token:
// "token v1 v2 ... v_dim". The file must define <unk>.
EmbeddingTable load_embedding_table(const std::filesystem::path& path);
// Writes tokens in sorted order so the file is deterministic.
void save_embedding_table(const std::filesystem::path& path, const EmbeddingTable& table);

// [L x dim]; row i is table[tokens[i]], with unseen tokens mapped to <unk>.
// An empty token list is a data error (no lexical stream to embed).
net::Tensor embed_tokens(const std::vector<std::string>& tokens, const EmbeddingTable& table);

// Lowercase, split on whitespace, strip leading/trailing punctuation.
std::vector<std::string> tokenize(const std::string& text);

}  // namespace dcfd::features
