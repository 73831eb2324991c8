#include "llmfactor/domain.hpp"

#include <cctype>
#include <cmath>

#include "llmfactor/errors.hpp"

namespace llmfactor {

std::string direction_label(Direction d, Language lang) {
    if (lang == Language::CN) return d == Direction::Rise ? "上涨" : "下跌";
    return d == Direction::Rise ? "rise" : "fall";
}

std::optional<Direction> direction_from_label(std::string_view label) {
    if (label == "rise" || label == "上涨") return Direction::Rise;
    if (label == "fall" || label == "下跌") return Direction::Fall;
    return std::nullopt;
}

void validate_stock_entry(const StockEntry& e) {
    if (e.ticker.empty())
        throw ConfigError("stock entry has empty ticker");
    for (char c : e.ticker) {
        bool ok = (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' || c == '-';
        if (!ok)
            throw ConfigError("ticker '" + e.ticker + "' is not upper-case alphanumeric/./-");
    }
    bool has_visible = false;
    for (unsigned char c : e.company)
        if (!std::isspace(c)) { has_visible = true; break; }
    if (!has_visible)
        throw ConfigError("stock entry '" + e.ticker + "' has blank company name");
}

MovementWindow label_movements(const PriceWindow& window) {
    if (window.dates.size() != window.closes.size())
        throw ConfigError("price window dates/closes misaligned");
    if (window.closes.size() < 2)
        throw InsufficientHistory("price window needs at least 2 closes, got " +
                                  std::to_string(window.closes.size()));
    MovementWindow out;
    out.dates.assign(window.dates.begin() + 1, window.dates.end());
    out.moves.reserve(window.closes.size() - 1);
    for (std::size_t i = 0; i + 1 < window.closes.size(); ++i) {
        out.moves.push_back(window.closes[i + 1] > window.closes[i] ? Direction::Rise
                                                                    : Direction::Fall);
    }
    return out;
}

double accuracy(const ConfusionMatrix& m) {
    const std::int64_t total = m.total();
    if (total == 0) throw EmptyEvaluation("accuracy over empty confusion matrix");
    return static_cast<double>(m.tp + m.tn) / static_cast<double>(total);
}

double mcc(const ConfusionMatrix& m) {
    if (m.total() == 0) throw EmptyEvaluation("mcc over empty confusion matrix");
    const std::int64_t f1 = m.tp + m.fp;
    const std::int64_t f2 = m.tp + m.fn;
    const std::int64_t f3 = m.tn + m.fp;
    const std::int64_t f4 = m.tn + m.fn;
    if (f1 == 0 || f2 == 0 || f3 == 0 || f4 == 0) return 0.0;
    const double num =
        static_cast<double>(m.tp) * static_cast<double>(m.tn) -
        static_cast<double>(m.fp) * static_cast<double>(m.fn);
    // One sqrt per factor keeps intermediates in range for large counts.
    const double den = std::sqrt(static_cast<double>(f1)) * std::sqrt(static_cast<double>(f2)) *
                       std::sqrt(static_cast<double>(f3)) * std::sqrt(static_cast<double>(f4));
    return num / den;
}

EvalReport evaluate(
    const std::vector<std::pair<Direction, std::optional<Direction>>>& pairs,
    Direction positive_class, std::string label) {
    if (pairs.empty()) throw EmptyEvaluation("evaluate over empty pair list");
    EvalReport report;
    report.label = std::move(label);
    for (const auto& [gold, pred] : pairs) {
        Direction effective;
        if (pred.has_value()) {
            effective = *pred;
        } else {
            // Parse failures score as the wrong class relative to gold.
            ++report.n_parse_failures;
            effective = gold == Direction::Rise ? Direction::Fall : Direction::Rise;
        }
        const bool gold_pos = gold == positive_class;
        const bool pred_pos = effective == positive_class;
        if (gold_pos && pred_pos) ++report.matrix.tp;
        else if (!gold_pos && pred_pos) ++report.matrix.fp;
        else if (gold_pos && !pred_pos) ++report.matrix.fn;
        else ++report.matrix.tn;
    }
    report.acc = accuracy(report.matrix);
    report.mcc = mcc(report.matrix);
    return report;
}

}  // namespace llmfactor
