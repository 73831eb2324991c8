#include "doctest.h"

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "llmfactor/errors.hpp"
#include "llmfactor/ingest.hpp"
#include "test_support.hpp"

using namespace llmfactor;
namespace fs = std::filesystem;

namespace {

fs::path write_file(const fs::path& p, const std::string& body) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << body;
    return p;
}

std::vector<DatasetRecord> collect(const DatasetManifest& manifest, const fs::path& root,
                                   const std::vector<StockEntry>& registry, int t,
                                   LoadStats* stats_out = nullptr) {
    std::vector<DatasetRecord> records;
    LoadStats stats = load_dataset(manifest, root, registry, t,
                                   [&](DatasetRecord&& r) { records.push_back(std::move(r)); });
    if (stats_out) *stats_out = stats;
    return records;
}

std::string message_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("dataset presets carry language and timeseries flags") {
    CHECK(DatasetManifest::preset("stocknet").record_count == 19318);
    CHECK(DatasetManifest::preset("cmin-us").record_count == 83553);
    CHECK(DatasetManifest::preset("cmin-cn").record_count == 198781);
    CHECK(DatasetManifest::preset("cmin-cn").language == Language::CN);
    CHECK(DatasetManifest::preset("edt").record_count == 54080);
    CHECK_FALSE(DatasetManifest::preset("edt").has_timeseries);
    CHECK(DatasetManifest::preset("jsonl").record_count == 0);
    CHECK_THROWS_AS(DatasetManifest::preset("unknown"), ConfigError);
}

TEST_CASE("registries load and reject malformed rows with their line") {
    testing::TempDir tmp;
    const auto good = write_file(tmp.path() / "registry.csv",
                                 "company,ticker,industry\n"
                                 "Apple Inc.,AAPL,technology\n"
                                 "\"Corning, Incorporated\",GLW,technology\n");
    auto entries = load_stock_registry(good);
    REQUIRE(entries.size() == 2);
    CHECK(entries[1].company == "Corning, Incorporated");

    const auto bad_header =
        write_file(tmp.path() / "h.csv", "name,symbol,sector\nApple,AAPL,tech\n");
    CHECK_THROWS_AS(load_stock_registry(bad_header), RegistryFormatError);

    const auto short_row =
        write_file(tmp.path() / "s.csv", "company,ticker,industry\nApple,AAPL\n");
    CHECK(message_of([&] { load_stock_registry(short_row); }).find("line 2") !=
          std::string::npos);

    const auto dup = write_file(tmp.path() / "d.csv",
                                "company,ticker,industry\n"
                                "Apple,AAPL,tech\n"
                                "Apple Again,AAPL,tech\n");
    const std::string dup_msg = message_of([&] { load_stock_registry(dup); });
    CHECK(dup_msg.find("line 3") != std::string::npos);
    CHECK(dup_msg.find("line 2") != std::string::npos);

    const auto bad_ticker =
        write_file(tmp.path() / "t.csv", "company,ticker,industry\nApple,aa pl,tech\n");
    CHECK_THROWS_AS(load_stock_registry(bad_ticker), RegistryFormatError);

    const auto empty = write_file(tmp.path() / "e.csv", "company,ticker,industry\n");
    CHECK_THROWS_AS(load_stock_registry(empty), RegistryFormatError);
}

TEST_CASE("alias files accept an optional header") {
    testing::TempDir tmp;
    const auto with = write_file(tmp.path() / "a.csv",
                                 "ticker,alias\nGLW,Gorilla Glass maker\nAAPL,iPhone maker\n");
    auto aliases = load_alias_file(with);
    REQUIRE(aliases.size() == 2);
    CHECK(aliases[0] == std::pair<std::string, std::string>{"GLW", "Gorilla Glass maker"});

    const auto without = write_file(tmp.path() / "b.csv", "GLW,Gorilla Glass maker\n");
    CHECK(load_alias_file(without).size() == 1);

    const auto bad = write_file(tmp.path() / "c.csv", "GLW\n");
    CHECK_THROWS_AS(load_alias_file(bad), IngestError);
}

TEST_CASE("price history windows end strictly before the target date") {
    std::map<Date, double> prices;
    Date day(2020, 3, 2);
    for (int i = 0; i < 10; ++i) {
        prices[day] = 100.0 + i;
        day = next_weekday(day);
    }

    PriceWindow w = make_windows(prices, Date(2020, 3, 10), 5);
    REQUIRE(w.size() == 6);
    CHECK(w.dates.back() == Date(2020, 3, 9));
    CHECK(w.closes.back() == doctest::Approx(105.0));
    CHECK(w.dates.front() == Date(2020, 3, 2));

    // A weekend target anchors to the trading days before it.
    PriceWindow weekend = make_windows(prices, Date(2020, 3, 14), 5);
    CHECK(weekend.dates.back() == Date(2020, 3, 13));
    CHECK(weekend.dates.front() == Date(2020, 3, 6));

    CHECK_THROWS_AS(make_windows(prices, Date(2020, 3, 6), 5), InsufficientHistory);
    CHECK_THROWS_AS(make_windows(prices, Date(2020, 3, 10), 0), ConfigError);
}

TEST_CASE("price csv rejects misaligned rows with ticker and location") {
    testing::TempDir tmp;
    auto manifest = DatasetManifest::preset("stocknet");
    const std::vector<StockEntry> registry = {{"Corning Incorporated", "GLW", "technology"}};

    auto layout = [&](const std::string& price_body) {
        fs::remove_all(tmp.path() / "data");
        write_file(tmp.path() / "data" / "price" / "GLW.csv", price_body);
        write_file(tmp.path() / "data" / "tweet" / "GLW" / "2020-01-10",
                   "{\"text\": \"some news\"}\n");
        return tmp.path() / "data";
    };

    CHECK_THROWS_AS(collect(manifest, layout("Date,Close\n2020-01-02\n"), registry, 1),
                    AlignmentError);
    CHECK_THROWS_AS(
        collect(manifest, layout("Date,Close\nnot-a-date,100.0\n"), registry, 1),
        AlignmentError);
    CHECK_THROWS_AS(
        collect(manifest, layout("Date,Close\n2020-01-02,banana\n"), registry, 1),
        AlignmentError);
    CHECK_THROWS_AS(
        collect(manifest, layout("Date,Close\n2020-01-02,-4.0\n"), registry, 1),
        AlignmentError);
    CHECK_THROWS_AS(
        collect(manifest,
                layout("Date,Close\n2020-01-02,10.0\n2020-01-02,11.0\n"), registry, 1),
        AlignmentError);

    const std::string msg = message_of([&] {
        collect(manifest, layout("Date,Close\n2020-01-02\n"), registry, 1);
    });
    CHECK(msg.find("GLW") != std::string::npos);
    CHECK(msg.find(":2") != std::string::npos);
}

TEST_CASE("the stocknet layout loads records with aligned history") {
    testing::TempDir tmp;
    testing::StocknetMini mini = testing::write_stocknet_mini(tmp.path() / "stocknet");
    auto registry = load_stock_registry(mini.registry);

    LoadStats stats;
    auto records = collect(DatasetManifest::preset("stocknet"), mini.root, registry, 5, &stats);

    CHECK(stats.emitted == 5);
    CHECK(stats.skipped_no_news == 1);
    CHECK(stats.skipped_no_history == 2);
    CHECK(stats.skipped_bad_rows == 0);
    CHECK(stats.synthesized_registry_entries == 0);

    REQUIRE(records.size() == 5);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        CHECK(r.target.ticker == "GLW");
        CHECK(r.target_date == mini.record_dates[i]);
        CHECK(r.gold == mini.golds[i]);
        REQUIRE(r.history.size() == 6);
        CHECK(r.history.dates.back() < r.target_date);
        REQUIRE_FALSE(r.news.empty());
    }

    // The two-line tweet file yields two news items, token array joined.
    const auto& first = records[0];
    REQUIRE(first.news.size() == 2);
    CHECK(first.news[0].text == "corning glass demand rising");
    CHECK(first.news[0].source_id == "421");
    CHECK(first.news[1].text == "Gorilla Glass orders beat expectations.");
}

TEST_CASE("stocks missing from the registry get synthesized entries") {
    testing::TempDir tmp;
    testing::write_stocknet_mini(tmp.path() / "stocknet");
    const std::vector<StockEntry> other = {{"Apple Inc.", "AAPL", "technology"}};

    LoadStats stats;
    auto records =
        collect(DatasetManifest::preset("stocknet"), tmp.path() / "stocknet", other, 5, &stats);
    CHECK(stats.synthesized_registry_entries == 1);
    REQUIRE_FALSE(records.empty());
    CHECK(records[0].target.ticker == "GLW");
    CHECK(records[0].target.company == "GLW");
}

TEST_CASE("the cmin layout reads tab and comma separated news tables") {
    testing::TempDir tmp;
    const fs::path root = tmp.path() / "cmin";
    std::string prices = "date,close\n";
    Date day(2021, 4, 1);
    for (int i = 0; i < 9; ++i) {
        prices += day.to_string() + "," + std::to_string(100 + i) + ".0\n";
        day = day + 1;
    }
    write_file(root / "price" / "TT.csv", prices);
    write_file(root / "news" / "TT.csv",
               "date\ttext\n"
               "2021-04-08\tTab separated headline about TT.\n"
               "2021-04-09,Comma separated headline, with a tail.\n"
               "garbage line without any separator\n");

    const std::vector<StockEntry> registry = {{"Test Tab Corp", "TT", "test"}};
    LoadStats stats;
    auto records = collect(DatasetManifest::preset("cmin-us"), root, registry, 5, &stats);

    REQUIRE(records.size() == 2);
    CHECK(records[0].news[0].text == "Tab separated headline about TT.");
    CHECK(records[1].news[0].text == "Comma separated headline, with a tail.");
    CHECK(records[1].target_date == Date(2021, 4, 9));
    CHECK(stats.skipped_bad_rows >= 1);
}

TEST_CASE("the edt layout has no price history by design") {
    testing::TempDir tmp;
    const fs::path root = tmp.path() / "edt";
    write_file(root / "edt.jsonl",
               "{\"date\": \"2021-06-01\", \"ticker\": \"ZED\", \"text\": \"Merger update.\", \"gold\": \"rise\"}\n"
               "{\"date\": \"2021-06-02\", \"ticker\": \"ZED\", \"text\": \"Probe begins.\", \"gold\": \"fall\"}\n"
               "{\"ticker\": \"ZED\", \"text\": \"missing date\"}\n");

    LoadStats stats;
    auto records = collect(DatasetManifest::preset("edt"), root, {}, 5, &stats);
    REQUIRE(records.size() == 2);
    CHECK(records[0].history.empty());
    CHECK(records[0].gold == Direction::Rise);
    CHECK(records[1].gold == Direction::Fall);
    CHECK(stats.skipped_bad_rows == 1);
    CHECK(stats.synthesized_registry_entries == 1);
}

TEST_CASE("canonical records survive a write-parse-write round trip") {
    auto fx = testing::momentum_fixture();
    for (const auto& record : fx.records) {
        std::ostringstream first;
        write_canonical_record(first, record);
        DatasetRecord parsed = parse_canonical_record(
            first.str().substr(0, first.str().size() - 1));  // drop the newline
        std::ostringstream second;
        write_canonical_record(second, parsed);
        CHECK(first.str() == second.str());

        CHECK(parsed.target == record.target);
        CHECK(parsed.target_date == record.target_date);
        CHECK(parsed.gold == record.gold);
        CHECK(parsed.history.closes == record.history.closes);
        REQUIRE(parsed.news.size() == record.news.size());
        CHECK(parsed.news[0].text == record.news[0].text);
    }

    CHECK_THROWS_AS(parse_canonical_record("not json"), IngestError);
    CHECK_THROWS_AS(parse_canonical_record("{}"), IngestError);
    CHECK_THROWS_AS(parse_canonical_record(
                        "{\"stock\": {\"company\": \"X\", \"ticker\": \"X\", \"industry\": \"\"},"
                        " \"date\": \"2020-13-01\", \"news\": [], \"closes\": [],"
                        " \"close_dates\": [], \"gold\": \"rise\"}"),
                    IngestError);
}

TEST_CASE("the jsonl dataset loads canonical records as written") {
    testing::TempDir tmp;
    auto fx = testing::momentum_fixture();
    testing::write_jsonl_dataset(tmp.path() / "ds", fx.records);

    LoadStats stats;
    auto records = collect(DatasetManifest::preset("jsonl"), tmp.path() / "ds",
                           fx.registry, 5, &stats);
    CHECK(stats.emitted == 40);
    REQUIRE(records.size() == fx.records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(records[i].target.ticker == fx.records[i].target.ticker);
        CHECK(records[i].target_date == fx.records[i].target_date);
        CHECK(records[i].gold == fx.records[i].gold);
    }
}
