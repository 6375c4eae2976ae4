#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

namespace dcfd::features {

// Fixed 12-entry lexical feature layout: nine word-category rates, the
// merged filler/hesitation rate, the discourse-marker rate, and the speech
// content rate (tokens per second). Category rates are normalized by token
// count; sets may overlap, so rates need not sum to 1.
enum class LexicalFeature : std::size_t {
    adverb = 0,
    pronoun,
    social,
    negate,
    posemo,
    negemo,
    insight,
    tentat,
    certain,
    fillers,
    discourse,
    content_rate,
};

inline constexpr std::size_t kLexicalFeatureCount = 12;
inline constexpr std::size_t kWordCategoryCount = 11;  // all but content_rate

const std::array<std::string, kLexicalFeatureCount>& lexical_feature_names();

// Word-category sets. Loaded from a text file of "[category]" section
// headers followed by one lowercase word per line. "[hesitation]" is
// accepted as an alias that merges into the filler set.
class CategoryLexicon {
public:
    const std::unordered_set<std::string>& category(std::size_t index) const;
    std::unordered_set<std::string>& category(std::size_t index);

private:
    std::array<std::unordered_set<std::string>, kWordCategoryCount> sets_;
};

CategoryLexicon load_lexicon(const std::filesystem::path& path);

struct LexicalFeatureVector {
    std::array<double, kLexicalFeatureCount> values{};

    double operator[](LexicalFeature f) const { return values[static_cast<std::size_t>(f)]; }
};

// tokens + lexicon + utterance duration -> 12-entry feature vector.
// duration must be positive; an empty token list yields all-zero rates.
LexicalFeatureVector lexical_category_vector(const std::vector<std::string>& tokens,
                                             const CategoryLexicon& lexicon, double duration_s);

}  // namespace dcfd::features
