#include "llmfactor/parse.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace llmfactor {

namespace {

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

bool is_word_char(char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

// Earliest word-boundary occurrence of needle in lowered haystack, or npos.
std::size_t find_word(const std::string& lowered, std::string_view needle) {
    std::size_t pos = 0;
    while ((pos = lowered.find(needle, pos)) != std::string::npos) {
        const bool left_ok = pos == 0 || !is_word_char(lowered[pos - 1]);
        const std::size_t end = pos + needle.size();
        const bool right_ok = end >= lowered.size() || !is_word_char(lowered[end]);
        if (left_ok && right_ok) return pos;
        pos += 1;
    }
    return std::string::npos;
}

// Cuts a UTF-8 string at or before max_bytes without splitting a code point.
std::string utf8_prefix(std::string_view s, std::size_t max_bytes) {
    if (s.size() <= max_bytes) return std::string(s);
    std::size_t cut = max_bytes;
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    return std::string(s.substr(0, cut));
}

std::string strip_sentence_end(std::string text) {
    while (!text.empty()) {
        if (text.back() == '.' || text.back() == ',' || text.back() == ';') {
            text.pop_back();
        } else if (text.size() >= 3 && (text.ends_with("。") || text.ends_with("，") ||
                                        text.ends_with("；"))) {
            text.resize(text.size() - 3);
        } else {
            break;
        }
    }
    return trim(text);
}

std::string first_nonempty_line(std::string_view response) {
    std::size_t start = 0;
    while (start <= response.size()) {
        std::size_t nl = response.find('\n', start);
        std::string_view line =
            response.substr(start, nl == std::string_view::npos ? nl : nl - start);
        std::string trimmed = trim(line);
        if (!trimmed.empty()) return trimmed;
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return {};
}

std::string cap_relation_length(std::string relation) {
    // At most 10 space-separated words; Chinese text has no spaces, so cap
    // the byte length instead.
    std::istringstream words(relation);
    std::string word;
    std::vector<std::string> kept;
    while (words >> word && kept.size() < 10) kept.push_back(word);
    if (words >> word) {
        std::string joined;
        for (std::size_t i = 0; i < kept.size(); ++i) {
            if (i > 0) joined += ' ';
            joined += kept[i];
        }
        return joined;
    }
    return utf8_prefix(relation, 60);
}

bool all_blank_filler(std::string_view text) {
    return std::all_of(text.begin(), text.end(), [](char c) {
        return c == '_' || c == ' ' || c == '-';
    });
}

}  // namespace

std::optional<ExtractedRelation> parse_relation(std::string_view response, Language language) {
    std::string extracted;
    if (language == Language::EN) {
        const std::string lowered = ascii_lower(response);
        const std::size_t rel = lowered.find(" relationship");
        if (rel != std::string::npos) {
            // Prefer the article closest before "relationship".
            std::size_t start = std::string::npos;
            std::size_t len = 0;
            for (std::string_view article : {" in a ", " in an "}) {
                std::size_t best = std::string::npos;
                std::size_t pos = 0;
                while ((pos = lowered.find(article, pos)) != std::string::npos &&
                       pos + article.size() <= rel) {
                    best = pos;
                    pos += 1;
                }
                if (best != std::string::npos &&
                    (start == std::string::npos || best > start)) {
                    start = best;
                    len = article.size();
                }
            }
            if (start != std::string::npos)
                extracted = trim(response.substr(start + len, rel - (start + len)));
        }
    } else {
        const std::size_t cue = response.find("最可能是");
        if (cue != std::string::npos) {
            const std::size_t body = cue + std::string_view("最可能是").size();
            const std::size_t end = response.find("关系", body);
            if (end != std::string::npos)
                extracted = trim(response.substr(body, end - body));
        }
    }

    bool low_confidence = false;
    if (extracted.empty() || all_blank_filler(extracted)) {
        extracted = strip_sentence_end(first_nonempty_line(response));
        low_confidence = true;
    }
    if (extracted.empty() || all_blank_filler(extracted)) return std::nullopt;
    return ExtractedRelation{cap_relation_length(std::move(extracted)), low_confidence};
}

std::optional<FactorSet> parse_factors(std::string_view response, int k, Language language) {
    if (k <= 0) return std::nullopt;

    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= response.size()) {
        const std::size_t nl = response.find('\n', start);
        std::string line = trim(
            response.substr(start, nl == std::string_view::npos ? nl : nl - start));
        start = nl == std::string_view::npos ? response.size() + 1 : nl + 1;
        if (line.empty()) continue;

        std::string_view rest = line;
        bool marked = false;
        if (rest[0] == '-' || rest[0] == '*') {
            rest.remove_prefix(1);
            marked = true;
        } else if (rest.starts_with("•")) {
            rest.remove_prefix(std::string_view("•").size());
            marked = true;
        } else {
            std::size_t d = 0;
            while (d < rest.size() && std::isdigit(static_cast<unsigned char>(rest[d]))) ++d;
            if (d > 0 && d < rest.size()) {
                if (rest[d] == '.' || rest[d] == ')' || rest[d] == ':') {
                    rest.remove_prefix(d + 1);
                    marked = true;
                } else if (rest.substr(d).starts_with("、")) {
                    rest.remove_prefix(d + std::string_view("、").size());
                    marked = true;
                }
            }
        }
        if (!marked) continue;

        std::string item = trim(rest);
        // Models often bold the factor name; the asterisks are noise here.
        while (item.starts_with("**")) item.erase(0, 2);
        while (item.ends_with("**")) item.resize(item.size() - 2);
        item = trim(item);
        if (!item.empty()) items.push_back(std::move(item));
    }

    if (!items.empty()) {
        if (items.size() > static_cast<std::size_t>(k)) items.resize(k);
        return FactorSet{k, std::move(items), std::string(response), false};
    }

    // Unstructured response: treat the first sentence as a single factor.
    std::string line = first_nonempty_line(response);
    if (line.empty()) return std::nullopt;
    const std::size_t stop = language == Language::EN ? line.find('.') : line.find("。");
    if (stop != std::string::npos) line.resize(stop);
    line = trim(line);
    if (line.empty()) return std::nullopt;
    return FactorSet{k, {std::move(line)}, std::string(response), true};
}

std::optional<DirectionFinding> parse_direction(std::string_view response, Language language) {
    const std::string lowered = ascii_lower(response);

    struct Cue {
        std::string_view needle;
        Direction direction;
        bool whole_word;
    };
    // Filled-in phrases first; bare direction words only if no phrase matched.
    const std::vector<Cue> phrase_cues =
        language == Language::EN
            ? std::vector<Cue>{{"will rise", Direction::Rise, true},
                               {"will fall", Direction::Fall, true}}
            : std::vector<Cue>{{"将上涨", Direction::Rise, false},
                               {"将下跌", Direction::Fall, false}};
    const std::vector<Cue> word_cues =
        language == Language::EN
            ? std::vector<Cue>{{"rise", Direction::Rise, true},
                               {"fall", Direction::Fall, true}}
            : std::vector<Cue>{{"上涨", Direction::Rise, false},
                               {"下跌", Direction::Fall, false}};

    auto earliest = [&](const std::vector<Cue>& cues)
        -> std::optional<std::pair<std::size_t, const Cue*>> {
        std::optional<std::pair<std::size_t, const Cue*>> best;
        for (const Cue& cue : cues) {
            const std::size_t pos = cue.whole_word ? find_word(lowered, cue.needle)
                                                   : lowered.find(cue.needle);
            if (pos == std::string::npos) continue;
            if (!best || pos < best->first) best = {pos, &cue};
        }
        return best;
    };

    auto hit = earliest(phrase_cues);
    if (!hit) hit = earliest(word_cues);
    if (!hit) return std::nullopt;

    DirectionFinding finding;
    finding.direction = hit->second->direction;
    std::string_view tail = response.substr(hit->first + hit->second->needle.size());
    std::size_t skip = 0;
    while (skip < tail.size() &&
           (std::isspace(static_cast<unsigned char>(tail[skip])) || tail[skip] == '.' ||
            tail[skip] == ',' || tail[skip] == ':' || tail[skip] == ';' || tail[skip] == '!'))
        ++skip;
    tail.remove_prefix(skip);
    while (tail.starts_with("。") || tail.starts_with("，") || tail.starts_with("：") ||
           tail.starts_with("；"))
        tail.remove_prefix(std::string_view("。").size());
    finding.rationale = trim(tail);
    return finding;
}

}  // namespace llmfactor
