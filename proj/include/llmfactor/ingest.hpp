#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "llmfactor/date.hpp"
#include "llmfactor/domain.hpp"

namespace llmfactor {

struct NewsItem {
    Date date;
    std::string text;
    std::string source_id;
};

// One prediction task: a stock, a target date, that day's news, and the
// price history ending the trading day before. EDT articles carry no price
// history, so `history` may be empty when the dataset has no timeseries.
struct DatasetRecord {
    StockEntry target;
    Date target_date;
    std::vector<NewsItem> news;
    PriceWindow history;
    Direction gold = Direction::Fall;
};

struct DatasetManifest {
    std::string name;
    Language language = Language::EN;
    bool has_timeseries = true;
    long long record_count = 0;  // full-corpus size, 0 when unknown

    // Known dataset keys: stocknet, cmin-us, cmin-cn, edt, jsonl.
    static DatasetManifest preset(std::string_view dataset_key);
};

struct LoadStats {
    long long emitted = 0;
    long long skipped_no_news = 0;
    long long skipped_no_history = 0;
    long long skipped_bad_rows = 0;
    long long synthesized_registry_entries = 0;
};

using RecordSink = std::function<void(DatasetRecord&&)>;

// Registry CSV with header company,ticker,industry. Duplicate tickers and
// malformed rows are rejected with their line number.
std::vector<StockEntry> load_stock_registry(const std::filesystem::path& path);

// CSV rows of (ticker, alias) extending company-name matching.
std::vector<std::pair<std::string, std::string>> load_alias_file(
    const std::filesystem::path& path);

// Streams every valid record of the dataset rooted at `root` into `sink`.
// Records without news on the target date are skipped and counted. Stocks
// missing from the registry get a synthesized entry named by their ticker.
LoadStats load_dataset(const DatasetManifest& manifest,
                       const std::filesystem::path& root,
                       const std::vector<StockEntry>& registry,
                       int t,
                       const RecordSink& sink);

// The t+1 closes on the trading days strictly before target_date.
PriceWindow make_windows(const std::map<Date, double>& prices_by_date,
                         Date target_date,
                         int t);

// Canonical one-record-per-line interchange form. Field order is fixed so
// that a rewrite of a parsed line is byte-identical.
void write_canonical_record(std::ostream& out, const DatasetRecord& record);
DatasetRecord parse_canonical_record(std::string_view line);

}  // namespace llmfactor
