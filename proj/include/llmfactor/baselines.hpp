#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "llmfactor/domain.hpp"

namespace llmfactor {

// Positive and negative keyphrases for one scope (a single stock, or the
// global fallback). Phrases are stored lower-cased and trimmed.
struct KeyphraseLexicon {
    std::set<std::string> pos;
    std::set<std::string> neg;
    bool per_stock_scope = false;
    bool allow_overlap = false;
};

// Per-stock lexicons built from one ranked phrase file per label subset.
// Rows with ticker "*" form the global lexicon, which also serves stocks
// without rows of their own.
class LexiconSet {
public:
    // CSV rows: ticker,phrase,rank (header row optional). Keeps the k
    // best-ranked phrases per ticker per label. A phrase appearing in both
    // labels for the same scope is an error unless allow_overlap, in which
    // case it is kept in both and a warning is recorded.
    static LexiconSet build(const std::filesystem::path& pos_csv,
                            const std::filesystem::path& neg_csv,
                            int k = 5,
                            bool allow_overlap = false);

    const KeyphraseLexicon& lexicon_for(const std::string& ticker) const;
    const KeyphraseLexicon& global() const { return global_; }
    const std::vector<std::string>& overlap_warnings() const { return warnings_; }

private:
    std::map<std::string, KeyphraseLexicon> by_ticker_;
    KeyphraseLexicon global_;
    std::vector<std::string> warnings_;
};

inline LexiconSet build_lexicons(const std::filesystem::path& pos_csv,
                                 const std::filesystem::path& neg_csv,
                                 int k = 5,
                                 bool allow_overlap = false) {
    return LexiconSet::build(pos_csv, neg_csv, k, allow_overlap);
}

// Sigmoid of (#present positive phrases − #present negative phrases).
// Presence is a case-insensitive word-boundary substring test, counted once
// per phrase no matter how often it occurs.
double keyphrase_score(std::string_view text, const KeyphraseLexicon& lexicon);

// Rise only for scores strictly above the threshold; exactly 0.5 is a fall.
Direction keyphrase_direction(double score, double threshold = 0.5);

// positive→Rise, negative→Fall, neutral→Fall; anything else is unusable.
std::optional<Direction> sentiment_direction(std::string_view sentiment_label);

}  // namespace llmfactor
