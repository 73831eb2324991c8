#include "doctest.h"

#include <cmath>
#include <random>

#include "llmfactor/date.hpp"
#include "llmfactor/domain.hpp"
#include "llmfactor/errors.hpp"

using namespace llmfactor;

namespace {

// Reference MCC over exact integer factor products. Counts up to 10^4 keep
// every product below 2^63, so the only rounding is the final square roots.
double mcc_oracle(std::int64_t tp, std::int64_t fp, std::int64_t fn, std::int64_t tn) {
    const std::int64_t f1 = tp + fp, f2 = tp + fn, f3 = tn + fp, f4 = tn + fn;
    if (f1 == 0 || f2 == 0 || f3 == 0 || f4 == 0) return 0.0;
    const long double num =
        static_cast<long double>(tp) * tn - static_cast<long double>(fp) * fn;
    const long double den = std::sqrt(static_cast<long double>(f1 * f2)) *
                            std::sqrt(static_cast<long double>(f3 * f4));
    return static_cast<double>(num / den);
}

}  // namespace

TEST_CASE("calendar dates round-trip and know their weekday") {
    auto d = Date::parse("2019-09-17");
    REQUIRE(d.has_value());
    CHECK(d->to_string() == "2019-09-17");
    CHECK(d->weekday() == 2);  // a Tuesday
    CHECK_FALSE(d->is_weekend());

    auto sat = Date::parse("2014-01-11");
    REQUIRE(sat.has_value());
    CHECK(sat->weekday() == 6);
    CHECK(sat->is_weekend());
    CHECK(next_weekday(*sat).to_string() == "2014-01-13");

    CHECK(Date(1970, 1, 1) - Date(static_cast<std::int32_t>(0)) == 0);
    CHECK((*d + 1).to_string() == "2019-09-18");
    CHECK((*d - 17).to_string() == "2019-08-31");
    CHECK(*d - Date(2019, 9, 1) == 16);
    CHECK(Date(2019, 9, 1) < *d);

    CHECK_FALSE(Date::parse("2019-02-30").has_value());
    CHECK_FALSE(Date::parse("2019-13-01").has_value());
    CHECK_FALSE(Date::parse("not-a-date").has_value());
    CHECK_FALSE(Date::parse("2019/09/17").has_value());
    CHECK(Date::parse("2020-02-29").has_value());  // leap day
}

TEST_CASE("direction labels map both languages") {
    CHECK(direction_label(Direction::Rise) == "rise");
    CHECK(direction_label(Direction::Fall) == "fall");
    CHECK(direction_label(Direction::Rise, Language::CN) == "上涨");
    CHECK(direction_label(Direction::Fall, Language::CN) == "下跌");

    CHECK(direction_from_label("rise") == Direction::Rise);
    CHECK(direction_from_label("fall") == Direction::Fall);
    CHECK(direction_from_label("上涨") == Direction::Rise);
    CHECK(direction_from_label("下跌") == Direction::Fall);
    CHECK_FALSE(direction_from_label("sideways").has_value());
}

TEST_CASE("stock entries are validated") {
    CHECK_NOTHROW(validate_stock_entry({"Apple Inc.", "AAPL", "technology"}));
    CHECK_NOTHROW(validate_stock_entry({"Shell", "SHEL.L", ""}));
    CHECK_NOTHROW(validate_stock_entry({"Berkshire", "BRK-B", ""}));
    CHECK_NOTHROW(validate_stock_entry({"贵州茅台", "600519", "白酒"}));
    CHECK_THROWS_AS(validate_stock_entry({"Apple", "aapl", ""}), ConfigError);
    CHECK_THROWS_AS(validate_stock_entry({"Apple", "", ""}), ConfigError);
    CHECK_THROWS_AS(validate_stock_entry({"Apple", "AA PL", ""}), ConfigError);
    CHECK_THROWS_AS(validate_stock_entry({"   ", "AAPL", ""}), ConfigError);
}

TEST_CASE("movement labeling follows consecutive closes") {
    PriceWindow w;
    w.dates = {Date(2023, 3, 1), Date(2023, 3, 2), Date(2023, 3, 3), Date(2023, 3, 6)};
    w.closes = {100.0, 101.5, 101.5, 99.0};
    MovementWindow moves = label_movements(w);
    REQUIRE(moves.size() == 3);
    CHECK(moves.dates[0] == Date(2023, 3, 2));
    CHECK(moves.dates[2] == Date(2023, 3, 6));
    CHECK(moves.moves[0] == Direction::Rise);
    CHECK(moves.moves[1] == Direction::Fall);  // flat close counts as a fall
    CHECK(moves.moves[2] == Direction::Fall);

    PriceWindow one;
    one.dates = {Date(2023, 3, 1)};
    one.closes = {100.0};
    CHECK_THROWS_AS(label_movements(one), InsufficientHistory);
    CHECK_THROWS_AS(label_movements(PriceWindow{}), InsufficientHistory);
}

TEST_CASE("movement labeling matches a pairwise oracle on random windows") {
    std::mt19937_64 gen(20230301);
    std::uniform_int_distribution<int> len_dist(2, 50);
    std::uniform_int_distribution<int> step_dist(-2, 2);  // flats included

    for (int trial = 0; trial < 1000; ++trial) {
        const int n = len_dist(gen);
        PriceWindow w;
        double close = 50.0;
        Date day(2020, 1, 1);
        for (int i = 0; i < n; ++i) {
            w.dates.push_back(day);
            w.closes.push_back(close);
            day = day + 1 + (gen() % 3 == 0 ? 2 : 0);
            close += step_dist(gen);
        }
        MovementWindow moves = label_movements(w);
        REQUIRE(moves.size() == w.size() - 1);
        for (std::size_t i = 0; i + 1 < w.size(); ++i) {
            const Direction want =
                w.closes[i + 1] > w.closes[i] ? Direction::Rise : Direction::Fall;
            CHECK(moves.moves[i] == want);
            CHECK(moves.dates[i] == w.dates[i + 1]);
        }
    }
}

TEST_CASE("accuracy and mcc reproduce hand-computed values") {
    const ConfusionMatrix m{90, 40, 10, 60};
    CHECK(accuracy(m) == doctest::Approx(0.75).epsilon(1e-12));
    // 5000 / sqrt(130*100*100*70)
    CHECK(mcc(m) == doctest::Approx(0.5241424183609592).epsilon(1e-9));

    CHECK(accuracy({1, 0, 0, 1}) == doctest::Approx(1.0));
    CHECK(mcc({1, 0, 0, 1}) == doctest::Approx(1.0));
    CHECK(mcc({0, 1, 1, 0}) == doctest::Approx(-1.0));

    CHECK_THROWS_AS(accuracy(ConfusionMatrix{}), EmptyEvaluation);
    CHECK_THROWS_AS(mcc(ConfusionMatrix{}), EmptyEvaluation);
}

TEST_CASE("mcc maps a zero denominator factor to zero") {
    CHECK(mcc({5, 0, 0, 0}) == 0.0);   // only positives predicted and present
    CHECK(mcc({0, 0, 0, 7}) == 0.0);   // only negatives
    CHECK(mcc({3, 4, 0, 0}) == 0.0);    // everything predicted positive
    CHECK(mcc({0, 0, 2, 9}) == 0.0);    // everything predicted negative
    CHECK(mcc({20, 20, 0, 0}) == 0.0);
}

TEST_CASE("metrics agree with the exact-integer oracle on random matrices") {
    std::mt19937_64 gen(424242);
    std::uniform_int_distribution<std::int64_t> count(0, 10000);
    for (int trial = 0; trial < 2000; ++trial) {
        ConfusionMatrix m{count(gen), count(gen), count(gen), count(gen)};
        // Force degenerate margins regularly so the zero branch is exercised.
        if (trial % 7 == 0) m.tp = m.fp = 0;
        if (trial % 11 == 0) m.fn = m.tn = 0;
        if (m.total() == 0) continue;
        CHECK(accuracy(m) ==
              doctest::Approx(static_cast<double>(m.tp + m.tn) / m.total()).epsilon(1e-12));
        CHECK(mcc(m) == doctest::Approx(mcc_oracle(m.tp, m.fp, m.fn, m.tn)).epsilon(1e-9));
    }
}

TEST_CASE("evaluate scores a missing prediction as the wrong class") {
    using Pair = std::pair<Direction, std::optional<Direction>>;
    std::vector<Pair> pairs = {
        {Direction::Rise, Direction::Rise},  // tp
        {Direction::Rise, Direction::Fall},  // fn
        {Direction::Fall, Direction::Fall},  // tn
        {Direction::Fall, Direction::Rise},  // fp
        {Direction::Rise, std::nullopt},     // parse failure, scored fn
        {Direction::Fall, std::nullopt},     // parse failure, scored fp
    };
    EvalReport report = evaluate(pairs, Direction::Rise, "unit");
    CHECK(report.matrix == ConfusionMatrix{1, 2, 2, 1});
    CHECK(report.n_parse_failures == 2);
    CHECK(report.acc == doctest::Approx(2.0 / 6.0));
    CHECK(report.label == "unit");

    CHECK_THROWS_AS(evaluate({}), EmptyEvaluation);
}
