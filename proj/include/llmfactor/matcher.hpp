#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "llmfactor/domain.hpp"

namespace llmfactor {

/// One surface occurrence backing a match: the exact text found and its byte
/// offset into the news blob.
struct MatchEvidence {
    std::string surface_form;
    std::size_t char_offset = 0;
};

/// Registry stocks co-mentioned with the target in a news blob. `matched` is
/// deduplicated by ticker, ordered by first occurrence, and never contains
/// the target itself.
struct MatchResult {
    StockEntry target;
    std::vector<StockEntry> matched;
    std::vector<std::vector<MatchEvidence>> evidence;  // aligned with matched
};

/// Compiled registry index: ticker and company-name lookups shared read-only
/// across any number of concurrent match calls.
///
/// Matching rules:
///  - a ticker matches as a whole token, case-sensitive, or as a cashtag ($T);
///  - tickers on the common-word stoplist (and every one-letter ticker) match
///    as cashtags only;
///  - a company name matches case-insensitively on word boundaries, both in
///    its display form and with corporate suffixes stripped (Inc., Corp.,
///    股份有限公司, ...).
class StockMatcher {
public:
    explicit StockMatcher(std::vector<StockEntry> registry);

    /// Extends name matching with (ticker, alias) pairs, e.g. from an alias
    /// CSV. Unknown tickers are ignored.
    void add_alias(const std::string& ticker, const std::string& alias);

    MatchResult match(std::string_view news_text, const StockEntry& target) const;

    const std::vector<StockEntry>& registry() const { return registry_; }

    /// Reviewable stoplist of tickers that collide with everyday words.
    static const std::unordered_set<std::string>& common_word_tickers();

    /// Suffix-stripped form of a company display name ("Corning Incorporated"
    /// -> "corning"); lower-cased. Empty when nothing useful remains.
    static std::string normalized_company_name(std::string_view company);

private:
    struct NamePattern {
        std::string needle_lower;  // lower-cased needle
        std::size_t entry_index;
    };

    std::vector<StockEntry> registry_;
    std::unordered_map<std::string, std::size_t> by_ticker_;
    std::vector<NamePattern> name_patterns_;
};

// One-shot convenience wrapper; compiles the index per call. Prefer a
// shared StockMatcher in loops.
MatchResult match_stocks(std::string_view news_text,
                         const std::vector<StockEntry>& registry,
                         const StockEntry& target);

}  // namespace llmfactor
