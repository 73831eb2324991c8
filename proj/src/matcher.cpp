#include "llmfactor/matcher.hpp"

#include <algorithm>
#include <cctype>

#include "llmfactor/errors.hpp"

namespace llmfactor {

namespace {

bool is_ascii_alnum(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// Left edge of a plain token: start of text or a non-token character that is
// not '$' (a '$' marks a cashtag and is handled separately).
bool token_left_ok(std::string_view text, std::size_t pos) {
    if (pos == 0) return true;
    char prev = text[pos - 1];
    return !is_ascii_alnum(prev) && prev != '.' && prev != '-' && prev != '$';
}

// Right edge: not followed by more token characters. A '.' is allowed when it
// ends the sentence ("buy NVDA.") but not when it extends the symbol
// ("NVDA.O").
bool token_right_ok(std::string_view text, std::size_t end) {
    if (end >= text.size()) return true;
    char next = text[end];
    if (is_ascii_alnum(next) || next == '-') return false;
    if (next == '.' && end + 1 < text.size() && is_ascii_alnum(text[end + 1])) return false;
    return true;
}

bool word_left_ok(std::string_view text, std::size_t pos) {
    return pos == 0 || !is_ascii_alnum(text[pos - 1]);
}

bool word_right_ok(std::string_view text, std::size_t end) {
    return end >= text.size() || !is_ascii_alnum(text[end]);
}

const std::vector<std::string>& en_suffixes() {
    static const std::vector<std::string> kSuffixes = {
        "incorporated", "inc", "corporation", "corp", "company", "co",
        "limited", "ltd", "plc", "llc", "holdings", "holding", "group",
    };
    return kSuffixes;
}

const std::vector<std::string>& cn_suffixes() {
    static const std::vector<std::string> kSuffixes = {
        "股份有限公司", "有限公司", "集团", "公司",
    };
    return kSuffixes;
}

}  // namespace

const std::unordered_set<std::string>& StockMatcher::common_word_tickers() {
    static const std::unordered_set<std::string> kStoplist = {
        "A",   "ALL", "AN",  "ANY", "ARE", "BE",  "BIG", "CAR", "CAT", "DAY",
        "EAT", "FOR", "GPS", "HAS", "IT",  "KEY", "LOW", "MAN", "NET", "NEW",
        "NOW", "ON",  "ONE", "OUT", "PAY", "PRO", "RUN", "SEE", "SO",  "TWO",
        "UP",  "WELL",
    };
    return kStoplist;
}

std::string StockMatcher::normalized_company_name(std::string_view company) {
    std::string name = ascii_lower(trim(company));
    // Chinese corporate suffixes are plain byte suffixes (no tokenization).
    bool stripped = true;
    while (stripped) {
        stripped = false;
        for (const auto& suf : cn_suffixes()) {
            if (name.size() > suf.size() && name.ends_with(suf)) {
                name.resize(name.size() - suf.size());
                name = trim(name);
                stripped = true;
            }
        }
    }
    // English suffixes are whole trailing words, optionally punctuated.
    auto strip_tail_punct = [](std::string& s) {
        while (!s.empty() && (s.back() == '.' || s.back() == ',' || s.back() == ' '))
            s.pop_back();
    };
    strip_tail_punct(name);
    bool dropped_suffix = false;
    for (;;) {
        auto pos = name.find_last_of(' ');
        if (pos == std::string::npos) break;
        std::string last = name.substr(pos + 1);
        while (!last.empty() && (last.back() == '.' || last.back() == ','))
            last.pop_back();
        const bool is_suffix =
            std::find(en_suffixes().begin(), en_suffixes().end(), last) != en_suffixes().end();
        // A connective left dangling by a dropped suffix goes with it
        // ("Wells Fargo & Company" ends up as "wells fargo").
        const bool dangling = dropped_suffix && (last == "&" || last == "and");
        if (!is_suffix && !dangling) break;
        dropped_suffix = dropped_suffix || is_suffix;
        name.resize(pos);
        strip_tail_punct(name);
    }
    return name;
}

StockMatcher::StockMatcher(std::vector<StockEntry> registry)
    : registry_(std::move(registry)) {
    if (registry_.empty()) throw ConfigError("stock registry is empty");
    for (std::size_t i = 0; i < registry_.size(); ++i) {
        const auto& entry = registry_[i];
        by_ticker_.emplace(entry.ticker, i);
        std::string display = ascii_lower(trim(entry.company));
        if (!display.empty())
            name_patterns_.push_back({display, i});
        std::string normalized = normalized_company_name(entry.company);
        if (!normalized.empty() && normalized != display && normalized.size() >= 2)
            name_patterns_.push_back({normalized, i});
    }
}

void StockMatcher::add_alias(const std::string& ticker, const std::string& alias) {
    auto it = by_ticker_.find(ticker);
    if (it == by_ticker_.end()) return;
    std::string needle = ascii_lower(trim(alias));
    if (!needle.empty()) name_patterns_.push_back({needle, it->second});
}

MatchResult StockMatcher::match(std::string_view news_text, const StockEntry& target) const {
    if (by_ticker_.find(target.ticker) == by_ticker_.end())
        throw ConfigError("match target '" + target.ticker + "' is not in the registry");

    // First-occurrence offset and evidence per registry entry.
    std::vector<std::vector<MatchEvidence>> hits(registry_.size());

    const std::string lowered = ascii_lower(news_text);

    // Ticker tokens and cashtags.
    for (std::size_t i = 0; i < registry_.size(); ++i) {
        const std::string& ticker = registry_[i].ticker;
        if (ticker.empty()) continue;
        const bool cashtag_only =
            ticker.size() == 1 || common_word_tickers().count(ticker) > 0;
        std::size_t pos = 0;
        while ((pos = news_text.find(ticker, pos)) != std::string_view::npos) {
            const std::size_t end = pos + ticker.size();
            const bool cashtag = pos > 0 && news_text[pos - 1] == '$' &&
                                 (pos < 2 || !is_ascii_alnum(news_text[pos - 2]));
            if (token_right_ok(news_text, end)) {
                if (cashtag) {
                    hits[i].push_back({"$" + ticker, pos - 1});
                } else if (!cashtag_only && token_left_ok(news_text, pos)) {
                    hits[i].push_back({ticker, pos});
                }
            }
            pos = end;
        }
    }

    // Company names, case-insensitive on word boundaries.
    for (const auto& pattern : name_patterns_) {
        std::size_t pos = 0;
        while ((pos = lowered.find(pattern.needle_lower, pos)) != std::string::npos) {
            const std::size_t end = pos + pattern.needle_lower.size();
            if (word_left_ok(lowered, pos) && word_right_ok(lowered, end)) {
                hits[pattern.entry_index].push_back(
                    {std::string(news_text.substr(pos, pattern.needle_lower.size())), pos});
            }
            pos += 1;
        }
    }

    // Assemble, ordered by first occurrence; target excluded.
    struct Found {
        std::size_t first_offset;
        std::size_t entry_index;
    };
    std::vector<Found> found;
    for (std::size_t i = 0; i < registry_.size(); ++i) {
        if (hits[i].empty() || registry_[i].ticker == target.ticker) continue;
        // One text span is one mention: when patterns overlap (the display
        // name and its normalized form both firing at one spot), keep the
        // longest surface and drop anything starting inside it.
        std::sort(hits[i].begin(), hits[i].end(),
                  [](const MatchEvidence& a, const MatchEvidence& b) {
                      if (a.char_offset != b.char_offset) return a.char_offset < b.char_offset;
                      if (a.surface_form.size() != b.surface_form.size())
                          return a.surface_form.size() > b.surface_form.size();
                      return a.surface_form < b.surface_form;
                  });
        std::vector<MatchEvidence> kept;
        std::size_t covered_end = 0;
        for (auto& ev : hits[i]) {
            if (!kept.empty() && ev.char_offset < covered_end) continue;
            covered_end = ev.char_offset + ev.surface_form.size();
            kept.push_back(std::move(ev));
        }
        hits[i] = std::move(kept);
        found.push_back({hits[i].front().char_offset, i});
    }
    std::sort(found.begin(), found.end(), [](const Found& a, const Found& b) {
        if (a.first_offset != b.first_offset) return a.first_offset < b.first_offset;
        return a.entry_index < b.entry_index;
    });

    MatchResult result;
    result.target = target;
    for (const auto& f : found) {
        result.matched.push_back(registry_[f.entry_index]);
        result.evidence.push_back(std::move(hits[f.entry_index]));
    }
    return result;
}

MatchResult match_stocks(std::string_view news_text,
                         const std::vector<StockEntry>& registry,
                         const StockEntry& target) {
    return StockMatcher(registry).match(news_text, target);
}

}  // namespace llmfactor
