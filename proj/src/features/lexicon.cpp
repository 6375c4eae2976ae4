#include "deconfound/features/lexicon.hpp"

#include <fstream>

#include "deconfound/common.hpp"

namespace dcfd::features {

const std::array<std::string, kLexicalFeatureCount>& lexical_feature_names() {
    static const std::array<std::string, kLexicalFeatureCount> names = {
        "adverb", "pronoun", "social",  "negate",  "posemo",    "negemo",
        "insight", "tentat", "certain", "fillers", "discourse", "content_rate",
    };
    return names;
}

const std::unordered_set<std::string>& CategoryLexicon::category(std::size_t index) const {
    return sets_.at(index);
}

std::unordered_set<std::string>& CategoryLexicon::category(std::size_t index) {
    return sets_.at(index);
}

CategoryLexicon load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open lexicon file: " + path.string());
    CategoryLexicon lex;
    const auto& names = lexical_feature_names();
    long current = -1;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // Trim whitespace (also tolerates CRLF endings).
        std::size_t lo = line.find_first_not_of(" \t\r\n");
        if (lo == std::string::npos) continue;
        std::size_t hi = line.find_last_not_of(" \t\r\n");
        std::string word = line.substr(lo, hi - lo + 1);
        if (word.front() == '#') continue;  // comment line
        if (word.front() == '[') {
            if (word.back() != ']') {
                throw DataError("lexicon: malformed section header at line " +
                                std::to_string(line_no));
            }
            const std::string section = word.substr(1, word.size() - 2);
            current = -1;
            if (section == "hesitation") {
                // Hesitation words merge into the filler set.
                current = static_cast<long>(LexicalFeature::fillers);
            } else {
                for (std::size_t i = 0; i < kWordCategoryCount; ++i) {
                    if (section == names[i]) {
                        current = static_cast<long>(i);
                        break;
                    }
                }
            }
            if (current < 0) {
                throw DataError("lexicon: unknown category '" + section + "' at line " +
                                std::to_string(line_no));
            }
        } else {
            if (current < 0) {
                throw DataError("lexicon: word before any [category] header at line " +
                                std::to_string(line_no));
            }
            lex.category(static_cast<std::size_t>(current)).insert(word);
        }
    }
    return lex;
}

LexicalFeatureVector lexical_category_vector(const std::vector<std::string>& tokens,
                                             const CategoryLexicon& lexicon, double duration_s) {
    if (duration_s <= 0.0) {
        throw DataError("lexical_category_vector: duration must be positive");
    }
    LexicalFeatureVector out{};
    if (tokens.empty()) return out;  // all-zero rates, zero content rate
    for (const std::string& tok : tokens) {
        for (std::size_t c = 0; c < kWordCategoryCount; ++c) {
            if (lexicon.category(c).count(tok) > 0) out.values[c] += 1.0;
        }
    }
    for (std::size_t c = 0; c < kWordCategoryCount; ++c) {
        out.values[c] /= static_cast<double>(tokens.size());
    }
    out.values[static_cast<std::size_t>(LexicalFeature::content_rate)] =
        static_cast<double>(tokens.size()) / duration_s;
    return out;
}

}  // namespace dcfd::features
