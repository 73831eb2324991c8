#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "llmfactor/date.hpp"

namespace llmfactor {

enum class Language { EN, CN };

/// Binary price movement. A missing/unparseable prediction is represented as
/// an empty std::optional<Direction> wherever a prediction may fail.
enum class Direction { Rise, Fall };

/// "rise"/"fall" (EN) or "上涨"/"下跌" (CN).
std::string direction_label(Direction d, Language lang = Language::EN);

/// Accepts both EN and CN labels; anything else is nullopt.
std::optional<Direction> direction_from_label(std::string_view label);

/// One exchange-listed stock: display name, ticker symbol, industry.
struct StockEntry {
    std::string company;
    std::string ticker;
    std::string industry;

    bool operator==(const StockEntry&) const = default;
};

/// Throws ConfigError unless ticker is non-empty upper-case alphanumeric
/// (plus '.'/'-') and company is non-empty after trimming.
void validate_stock_entry(const StockEntry& e);

/// Closing prices on strictly increasing trading days, aligned 1:1.
struct PriceWindow {
    std::vector<Date> dates;
    std::vector<double> closes;

    std::size_t size() const { return closes.size(); }
    bool empty() const { return closes.empty(); }
};

/// Daily movements derived from a PriceWindow one element longer.
struct MovementWindow {
    std::vector<Date> dates;
    std::vector<Direction> moves;

    std::size_t size() const { return moves.size(); }
    bool empty() const { return moves.empty(); }
};

/// moves[i] = Rise iff closes[i+1] > closes[i]; a flat price counts as Fall.
/// Result dates are the window dates from index 1 on.
/// Throws InsufficientHistory for windows shorter than 2.
MovementWindow label_movements(const PriceWindow& window);

struct ConfusionMatrix {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;

    std::int64_t total() const { return tp + fp + fn + tn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

/// (tp+tn)/total. Throws EmptyEvaluation when total is 0.
double accuracy(const ConfusionMatrix& m);

/// Matthews correlation coefficient
///   (tp*tn - fp*fn) / sqrt((tp+fp)(tp+fn)(tn+fp)(tn+fn)),
/// with a zero denominator factor mapping to 0. Throws EmptyEvaluation when
/// total is 0.
double mcc(const ConfusionMatrix& m);

struct EvalReport {
    ConfusionMatrix matrix;
    double acc = 0.0;
    double mcc = 0.0;
    std::int64_t n_parse_failures = 0;
    std::string label;  // dataset/model/layer identifier
};

/// Tallies (gold, predicted) pairs into an EvalReport. A missing prediction
/// (parse failure) is counted in n_parse_failures and scored as the wrong
/// class relative to gold. Throws EmptyEvaluation on empty input.
EvalReport evaluate(
    const std::vector<std::pair<Direction, std::optional<Direction>>>& pairs,
    Direction positive_class = Direction::Rise,
    std::string label = {});

}  // namespace llmfactor
