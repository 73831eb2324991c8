#include "llmfactor/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "llmfactor/errors.hpp"

namespace llmfactor {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string ascii_lower(std::string s) {
    for (char& c : s)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return s;
}

bool is_ascii_alnum(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

// Same CSV row shape as the registry loader; kept local to avoid a
// dependency between the two modules.
std::vector<std::string> parse_csv_row(std::string_view line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current += c;
            }
        } else if (c == '"' && current.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else if (c != '\r') {
            current += c;
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

struct RankedPhrase {
    std::string ticker;  // "*" = global scope
    std::string phrase;
    long long rank;
    long long file_order;
};

std::vector<RankedPhrase> load_phrase_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read keyphrase file " + path.string());
    std::vector<RankedPhrase> rows;
    std::string line;
    long long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> row = parse_csv_row(line);
        if (row.size() < 2)
            throw ConfigError("keyphrase file " + path.filename().string() + " line " +
                              std::to_string(line_no) + ": expected ticker,phrase[,rank]");
        std::string ticker = trim(row[0]);
        std::string phrase = ascii_lower(trim(row[1]));
        if (line_no == 1 && ascii_lower(ticker) == "ticker") continue;  // header
        if (ticker.empty() || phrase.empty()) continue;
        long long rank = line_no;  // file order stands in for a missing rank
        if (row.size() >= 3 && !trim(row[2]).empty()) {
            try {
                rank = std::stoll(trim(row[2]));
            } catch (const std::exception&) {
                throw ConfigError("keyphrase file " + path.filename().string() + " line " +
                                  std::to_string(line_no) + ": bad rank '" + trim(row[2]) +
                                  "'");
            }
        }
        rows.push_back({std::move(ticker), std::move(phrase), rank, line_no});
    }
    return rows;
}

// Top-k per ticker by rank, ties broken by file order; duplicates keep
// their best rank.
std::map<std::string, std::set<std::string>> select_top_k(std::vector<RankedPhrase> rows,
                                                          int k) {
    std::stable_sort(rows.begin(), rows.end(), [](const RankedPhrase& a, const RankedPhrase& b) {
        if (a.ticker != b.ticker) return a.ticker < b.ticker;
        if (a.rank != b.rank) return a.rank < b.rank;
        return a.file_order < b.file_order;
    });
    std::map<std::string, std::set<std::string>> selected;
    for (const RankedPhrase& row : rows) {
        auto& phrases = selected[row.ticker];
        if (phrases.size() >= static_cast<std::size_t>(k)) continue;
        phrases.insert(row.phrase);
    }
    return selected;
}

bool contains_on_word_boundary(const std::string& lowered_text, const std::string& phrase) {
    std::size_t pos = 0;
    while ((pos = lowered_text.find(phrase, pos)) != std::string::npos) {
        const bool left_ok = pos == 0 || !is_ascii_alnum(lowered_text[pos - 1]);
        const std::size_t end = pos + phrase.size();
        const bool right_ok = end >= lowered_text.size() || !is_ascii_alnum(lowered_text[end]);
        if (left_ok && right_ok) return true;
        pos += 1;
    }
    return false;
}

}  // namespace

LexiconSet LexiconSet::build(const std::filesystem::path& pos_csv,
                             const std::filesystem::path& neg_csv,
                             int k,
                             bool allow_overlap) {
    if (k < 1) throw ConfigError("lexicon k must be at least 1");
    auto pos_by_ticker = select_top_k(load_phrase_file(pos_csv), k);
    auto neg_by_ticker = select_top_k(load_phrase_file(neg_csv), k);

    LexiconSet set;
    std::set<std::string> tickers;
    for (const auto& [ticker, _] : pos_by_ticker) tickers.insert(ticker);
    for (const auto& [ticker, _] : neg_by_ticker) tickers.insert(ticker);

    for (const std::string& ticker : tickers) {
        KeyphraseLexicon lexicon;
        lexicon.allow_overlap = allow_overlap;
        lexicon.per_stock_scope = ticker != "*";
        if (auto it = pos_by_ticker.find(ticker); it != pos_by_ticker.end())
            lexicon.pos = it->second;
        if (auto it = neg_by_ticker.find(ticker); it != neg_by_ticker.end())
            lexicon.neg = it->second;

        std::vector<std::string> overlap;
        std::set_intersection(lexicon.pos.begin(), lexicon.pos.end(), lexicon.neg.begin(),
                              lexicon.neg.end(), std::back_inserter(overlap));
        for (const std::string& phrase : overlap) {
            const std::string where = ticker == "*" ? "global lexicon" : "lexicon for " + ticker;
            if (!allow_overlap)
                throw ConfigError("phrase '" + phrase + "' appears in both labels of the " +
                                  where);
            set.warnings_.push_back("phrase '" + phrase + "' is both positive and negative in " +
                                    where);
        }

        if (ticker == "*") set.global_ = std::move(lexicon);
        else set.by_ticker_.emplace(ticker, std::move(lexicon));
    }
    set.global_.per_stock_scope = false;
    set.global_.allow_overlap = allow_overlap;
    return set;
}

const KeyphraseLexicon& LexiconSet::lexicon_for(const std::string& ticker) const {
    auto it = by_ticker_.find(ticker);
    return it == by_ticker_.end() ? global_ : it->second;
}

double keyphrase_score(std::string_view text, const KeyphraseLexicon& lexicon) {
    if (lexicon.pos.empty() && lexicon.neg.empty())
        throw ConfigError("keyphrase lexicon is empty");
    const std::string lowered = ascii_lower(std::string(text));
    int sum = 0;
    for (const std::string& phrase : lexicon.pos)
        if (contains_on_word_boundary(lowered, phrase)) ++sum;
    for (const std::string& phrase : lexicon.neg)
        if (contains_on_word_boundary(lowered, phrase)) --sum;
    return 1.0 / (1.0 + std::exp(-static_cast<double>(sum)));
}

Direction keyphrase_direction(double score, double threshold) {
    return score > threshold ? Direction::Rise : Direction::Fall;
}

std::optional<Direction> sentiment_direction(std::string_view sentiment_label) {
    const std::string label = ascii_lower(trim(sentiment_label));
    if (label == "positive") return Direction::Rise;
    if (label == "negative") return Direction::Fall;
    if (label == "neutral") return Direction::Fall;
    return std::nullopt;
}

}  // namespace llmfactor
