#include "llmfactor/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "llmfactor/errors.hpp"

namespace llmfactor {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

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

// RFC-4180-style row: quoted fields may contain commas and doubled quotes.
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

std::ifstream open_or_throw(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot read " + path.string());
    return in;
}

// Prefers root/<sub> but falls back to root/<sub>/raw, the layout some
// dataset distributions use.
fs::path resolve_subdir(const fs::path& root, const char* sub) {
    fs::path direct = root / sub;
    if (fs::is_directory(direct)) {
        fs::path raw = direct / "raw";
        if (fs::is_directory(raw)) {
            // Only descend when the direct level has no per-stock files.
            bool direct_has_files = false;
            for (const auto& entry : fs::directory_iterator(direct)) {
                if (!entry.is_directory() || entry.path().filename() != "raw") {
                    direct_has_files = true;
                    break;
                }
            }
            if (!direct_has_files) return raw;
        }
        return direct;
    }
    throw IngestError("dataset is missing directory " + direct.string());
}

// Close-price series from a CSV with a header naming a date column and a
// close column; a headerless date,value file is accepted too.
std::map<Date, double> load_price_csv(const fs::path& path, const std::string& ticker) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    if (!std::getline(in, line)) throw IngestError("empty price file " + path.string());

    int date_col = -1, close_col = -1, adj_close_col = -1;
    std::vector<std::string> header = parse_csv_row(line);
    for (std::size_t i = 0; i < header.size(); ++i) {
        const std::string name = ascii_lower(trim(header[i]));
        if (name == "date") date_col = static_cast<int>(i);
        else if (name == "close") close_col = static_cast<int>(i);
        else if (name == "adj close" || name == "adj_close" || name == "adjclose")
            adj_close_col = static_cast<int>(i);
    }
    bool headerless = false;
    if (date_col < 0) {
        // No recognizable header: treat the first line as data.
        headerless = true;
        date_col = 0;
        close_col = 1;
    } else if (close_col < 0) {
        close_col = adj_close_col;
    }
    if (close_col < 0)
        throw IngestError("price file has no close column: " + path.string());

    std::map<Date, double> closes;
    long long line_no = 1;
    auto consume = [&](const std::string& row_text) {
        ++line_no;
        if (trim(row_text).empty()) return;
        std::vector<std::string> row = parse_csv_row(row_text);
        if (static_cast<int>(row.size()) <= std::max(date_col, close_col))
            throw AlignmentError(ticker + ": short price row at " + path.filename().string() +
                                 ":" + std::to_string(line_no));
        auto date = Date::parse(trim(row[date_col]));
        if (!date)
            throw AlignmentError(ticker + ": bad date '" + trim(row[date_col]) + "' at " +
                                 path.filename().string() + ":" + std::to_string(line_no));
        double close = 0;
        try {
            close = std::stod(trim(row[close_col]));
        } catch (const std::exception&) {
            throw AlignmentError(ticker + ": bad close on " + date->to_string());
        }
        if (!(close > 0))
            throw AlignmentError(ticker + ": non-positive close on " + date->to_string());
        if (!closes.emplace(*date, close).second)
            throw AlignmentError(ticker + ": duplicate price row for " + date->to_string());
    };
    if (headerless) {
        --line_no;  // the first line was data, keep reported numbers right
        consume(line);
    }
    while (std::getline(in, line)) consume(line);
    return closes;
}

Direction gold_from_closes(double target_close, double last_window_close) {
    // A flat close counts as a fall; "rise" means strictly higher.
    return target_close > last_window_close ? Direction::Rise : Direction::Fall;
}

// News keyed by date for one stock. Accepted line shapes, tried in order:
// "YYYY-MM-DD<TAB>text" and "YYYY-MM-DD,text" (text may be quoted).
void load_news_table(const fs::path& path,
                     const std::string& ticker,
                     std::map<Date, std::vector<NewsItem>>& by_date,
                     LoadStats& stats) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    long long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;

        std::string date_text, body;
        const std::size_t tab = line.find('\t');
        if (tab != std::string::npos) {
            date_text = trim(line.substr(0, tab));
            body = trim(line.substr(tab + 1));
        } else {
            std::vector<std::string> row = parse_csv_row(line);
            if (row.size() >= 2) {
                date_text = trim(row[0]);
                body.clear();
                // Everything after the date is the article text; commas
                // inside unquoted text must survive.
                const std::size_t comma = line.find(',');
                body = trim(row.size() == 2 ? row[1] : line.substr(comma + 1));
            }
        }
        auto date = Date::parse(date_text);
        if (!date || body.empty()) {
            // The first line gets the benefit of the doubt as a header.
            if (line_no > 1) ++stats.skipped_bad_rows;
            continue;
        }
        by_date[*date].push_back(
            {*date, body, ticker + "#" + std::to_string(line_no)});
    }
}

// One day of tweets: either JSON objects per line (fields "text" and
// optionally "id") or plain text lines.
std::vector<NewsItem> load_tweet_file(const fs::path& path, Date date) {
    std::vector<NewsItem> items;
    std::ifstream in = open_or_throw(path);
    std::string line;
    long long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string text = trim(line);
        if (text.empty()) continue;
        std::string source_id = path.filename().string() + ":" + std::to_string(line_no);
        if (text.front() == '{') {
            json row = json::parse(text, nullptr, false);
            if (!row.is_discarded() && row.contains("text")) {
                if (row["text"].is_string()) {
                    text = trim(row["text"].get<std::string>());
                } else if (row["text"].is_array()) {
                    // Tokenized form: words as a JSON array.
                    std::string joined;
                    for (const auto& tok : row["text"]) {
                        if (!tok.is_string()) continue;
                        if (!joined.empty()) joined += ' ';
                        joined += tok.get<std::string>();
                    }
                    text = trim(joined);
                }
                if (row.contains("id")) {
                    if (row["id"].is_string()) source_id = row["id"].get<std::string>();
                    else if (row["id"].is_number_integer())
                        source_id = std::to_string(row["id"].get<long long>());
                }
            }
        }
        if (!text.empty()) items.push_back({date, std::move(text), std::move(source_id)});
    }
    return items;
}

struct RegistryIndex {
    const std::vector<StockEntry>* entries;
    std::map<std::string, std::size_t> by_ticker;
    // Tickers already synthesized, so repeats do not inflate the stat.
    std::set<std::string> synthesized;
};

RegistryIndex index_registry(const std::vector<StockEntry>& registry) {
    RegistryIndex index{&registry, {}};
    for (std::size_t i = 0; i < registry.size(); ++i)
        index.by_ticker.emplace(registry[i].ticker, i);
    return index;
}

StockEntry resolve_entry(RegistryIndex& index,
                         const std::string& ticker,
                         LoadStats& stats) {
    auto it = index.by_ticker.find(ticker);
    if (it != index.by_ticker.end()) return (*index.entries)[it->second];
    if (index.synthesized.insert(ticker).second) ++stats.synthesized_registry_entries;
    return StockEntry{ticker, ticker, ""};
}

// Emits every (stock, trading day) with both enough history and same-day
// news. Used by the StockNet and CMIN layouts, which differ only in how the
// per-stock news is stored.
void emit_records_for_stock(const StockEntry& stock,
                            const std::map<Date, double>& closes,
                            const std::map<Date, std::vector<NewsItem>>& news_by_date,
                            int t,
                            const RecordSink& sink,
                            LoadStats& stats) {
    if (closes.size() < static_cast<std::size_t>(t) + 2) {
        stats.skipped_no_history += static_cast<long long>(news_by_date.size());
        return;
    }
    auto it = closes.begin();
    std::advance(it, t + 1);  // first date with t+1 strictly-prior closes
    const Date first_candidate = it->first;
    for (const auto& [news_date, items] : news_by_date) {
        // News on non-trading days or before the history warms up can never
        // form a record.
        if (news_date < first_candidate || closes.find(news_date) == closes.end())
            ++stats.skipped_no_history;
    }
    for (; it != closes.end(); ++it) {
        const Date target_date = it->first;
        auto news_it = news_by_date.find(target_date);
        if (news_it == news_by_date.end() || news_it->second.empty()) {
            ++stats.skipped_no_news;
            continue;
        }
        DatasetRecord record;
        record.target = stock;
        record.target_date = target_date;
        record.news = news_it->second;
        record.history = make_windows(closes, target_date, t);
        record.gold = gold_from_closes(it->second, record.history.closes.back());
        ++stats.emitted;
        sink(std::move(record));
    }
}

std::vector<fs::path> sorted_directory(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

void load_pricing_news_layout(const fs::path& root,
                              const char* news_dir_name,
                              bool stocknet_tweets,
                              RegistryIndex& index,
                              int t,
                              const RecordSink& sink,
                              LoadStats& stats) {
    const fs::path price_dir = resolve_subdir(root, "price");
    const fs::path news_dir = resolve_subdir(root, news_dir_name);

    for (const fs::path& price_path : sorted_directory(price_dir)) {
        if (!fs::is_regular_file(price_path)) continue;
        const std::string ticker = price_path.stem().string();
        if (ticker.empty()) continue;

        std::map<Date, double> closes = load_price_csv(price_path, ticker);
        std::map<Date, std::vector<NewsItem>> news_by_date;
        if (stocknet_tweets) {
            const fs::path stock_news = news_dir / ticker;
            if (fs::is_directory(stock_news)) {
                for (const fs::path& day_file : sorted_directory(stock_news)) {
                    if (!fs::is_regular_file(day_file)) continue;
                    // Date is the file name, with any extension dropped.
                    auto date = Date::parse(day_file.stem().string().substr(0, 10));
                    if (!date) continue;
                    auto items = load_tweet_file(day_file, *date);
                    auto& bucket = news_by_date[*date];
                    bucket.insert(bucket.end(), std::make_move_iterator(items.begin()),
                                  std::make_move_iterator(items.end()));
                }
            }
        } else {
            for (const char* ext : {".csv", ".txt", ".tsv"}) {
                const fs::path table = news_dir / (ticker + ext);
                if (fs::is_regular_file(table)) {
                    load_news_table(table, ticker, news_by_date, stats);
                    break;
                }
            }
        }
        StockEntry stock = resolve_entry(index, ticker, stats);
        emit_records_for_stock(stock, closes, news_by_date, t, sink, stats);
    }
}

void load_edt(const fs::path& root,
              RegistryIndex& index,
              const RecordSink& sink,
              LoadStats& stats) {
    fs::path table = root;
    if (fs::is_directory(root)) {
        table = root / "edt.jsonl";
        if (!fs::is_regular_file(table))
            throw IngestError("expected " + table.string());
    }
    std::ifstream in = open_or_throw(table);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.contains("date") || !row.contains("ticker") ||
            !row.contains("text") || !row.contains("gold")) {
            ++stats.skipped_bad_rows;
            continue;
        }
        auto date = Date::parse(row["date"].get<std::string>());
        auto gold = direction_from_label(row["gold"].get<std::string>());
        const std::string text = trim(row["text"].get<std::string>());
        if (!date || !gold || text.empty()) {
            ++stats.skipped_bad_rows;
            continue;
        }
        DatasetRecord record;
        record.target = resolve_entry(index, row["ticker"].get<std::string>(), stats);
        record.target_date = *date;
        std::string source_id = row.value("source_id", std::string());
        if (source_id.empty())
            source_id = record.target.ticker + "@" + date->to_string();
        record.news.push_back({*date, text, std::move(source_id)});
        record.gold = *gold;
        ++stats.emitted;
        sink(std::move(record));
    }
}

void load_canonical(const fs::path& root, const RecordSink& sink, LoadStats& stats) {
    fs::path table = root;
    if (fs::is_directory(root)) {
        table = root / "records.jsonl";
        if (!fs::is_regular_file(table))
            throw IngestError("expected " + table.string());
    }
    std::ifstream in = open_or_throw(table);
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        DatasetRecord record = parse_canonical_record(line);
        ++stats.emitted;
        sink(std::move(record));
    }
}

}  // namespace

DatasetManifest DatasetManifest::preset(std::string_view dataset_key) {
    const std::string key = ascii_lower(trim(dataset_key));
    if (key == "stocknet") return {"StockNet", Language::EN, true, 19318};
    if (key == "cmin-us") return {"CMIN-US", Language::EN, true, 83553};
    if (key == "cmin-cn") return {"CMIN-CN", Language::CN, true, 198781};
    if (key == "edt") return {"EDT", Language::EN, false, 54080};
    if (key == "jsonl") return {"JSONL", Language::EN, true, 0};
    throw ConfigError("unknown dataset '" + std::string(dataset_key) +
                      "' (expected stocknet, cmin-us, cmin-cn, edt, or jsonl)");
}

std::vector<StockEntry> load_stock_registry(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw RegistryFormatError("cannot read registry " + path.string());

    std::string line;
    if (!std::getline(in, line))
        throw RegistryFormatError("registry is empty: " + path.string());
    {
        std::vector<std::string> header = parse_csv_row(line);
        for (auto& field : header) field = ascii_lower(trim(field));
        if (header != std::vector<std::string>{"company", "ticker", "industry"})
            throw RegistryFormatError(
                "registry line 1: header must be company,ticker,industry");
    }

    std::vector<StockEntry> entries;
    std::map<std::string, long long> seen_at_line;
    long long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> row = parse_csv_row(line);
        if (row.size() != 3)
            throw RegistryFormatError("registry line " + std::to_string(line_no) +
                                      ": expected 3 fields, got " +
                                      std::to_string(row.size()));
        StockEntry entry{trim(row[0]), trim(row[1]), trim(row[2])};
        try {
            validate_stock_entry(entry);
        } catch (const Error& e) {
            throw RegistryFormatError("registry line " + std::to_string(line_no) + ": " +
                                      e.what());
        }
        auto [it, inserted] = seen_at_line.emplace(entry.ticker, line_no);
        if (!inserted)
            throw RegistryFormatError("registry line " + std::to_string(line_no) +
                                      ": duplicate ticker " + entry.ticker +
                                      " (first at line " + std::to_string(it->second) + ")");
        entries.push_back(std::move(entry));
    }
    if (entries.empty())
        throw RegistryFormatError("registry has a header but no rows: " + path.string());
    return entries;
}

std::vector<std::pair<std::string, std::string>> load_alias_file(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot read alias file " + path.string());
    std::vector<std::pair<std::string, std::string>> aliases;
    std::string line;
    long long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> row = parse_csv_row(line);
        if (row.size() < 2)
            throw IngestError("alias file line " + std::to_string(line_no) +
                              ": expected ticker,alias");
        std::string ticker = trim(row[0]);
        std::string alias = trim(row[1]);
        if (line_no == 1 && ascii_lower(ticker) == "ticker") continue;  // header
        if (ticker.empty() || alias.empty()) continue;
        aliases.emplace_back(std::move(ticker), std::move(alias));
    }
    return aliases;
}

PriceWindow make_windows(const std::map<Date, double>& prices_by_date,
                         Date target_date,
                         int t) {
    if (t < 1) throw ConfigError("window size t must be at least 1");
    auto end = prices_by_date.lower_bound(target_date);  // first date >= target
    std::size_t available = static_cast<std::size_t>(std::distance(prices_by_date.begin(), end));
    if (available < static_cast<std::size_t>(t) + 1)
        throw InsufficientHistory("only " + std::to_string(available) +
                                  " trading days before " + target_date.to_string() +
                                  ", need " + std::to_string(t + 1));
    auto it = end;
    std::advance(it, -(t + 1));
    PriceWindow window;
    for (; it != end; ++it) {
        window.dates.push_back(it->first);
        window.closes.push_back(it->second);
    }
    return window;
}

LoadStats load_dataset(const DatasetManifest& manifest,
                       const std::filesystem::path& root,
                       const std::vector<StockEntry>& registry,
                       int t,
                       const RecordSink& sink) {
    if (!fs::exists(root)) throw IngestError("dataset root does not exist: " + root.string());
    LoadStats stats;
    RegistryIndex index = index_registry(registry);
    if (manifest.name == "StockNet") {
        load_pricing_news_layout(root, "tweet", true, index, t, sink, stats);
    } else if (manifest.name == "CMIN-US" || manifest.name == "CMIN-CN") {
        load_pricing_news_layout(root, "news", false, index, t, sink, stats);
    } else if (manifest.name == "EDT") {
        load_edt(root, index, sink, stats);
    } else if (manifest.name == "JSONL") {
        load_canonical(root, sink, stats);
    } else {
        throw ConfigError("unknown dataset manifest: " + manifest.name);
    }
    return stats;
}

void write_canonical_record(std::ostream& out, const DatasetRecord& record) {
    ordered_json news = ordered_json::array();
    for (const NewsItem& item : record.news) {
        news.push_back(ordered_json{
            {"date", item.date.to_string()},
            {"text", item.text},
            {"source_id", item.source_id},
        });
    }
    ordered_json closes = ordered_json::array();
    ordered_json close_dates = ordered_json::array();
    for (std::size_t i = 0; i < record.history.closes.size(); ++i) {
        closes.push_back(record.history.closes[i]);
        close_dates.push_back(record.history.dates[i].to_string());
    }
    const ordered_json row = {
        {"stock",
         ordered_json{{"company", record.target.company},
                      {"ticker", record.target.ticker},
                      {"industry", record.target.industry}}},
        {"date", record.target_date.to_string()},
        {"news", std::move(news)},
        {"closes", std::move(closes)},
        {"close_dates", std::move(close_dates)},
        {"gold", std::string(direction_label(record.gold, Language::EN))},
    };
    out << row.dump() << '\n';
}

DatasetRecord parse_canonical_record(std::string_view line) {
    json row = json::parse(line, nullptr, false);
    if (row.is_discarded()) throw IngestError("malformed canonical record line");
    try {
        DatasetRecord record;
        const json& stock = row.at("stock");
        record.target = {stock.at("company").get<std::string>(),
                         stock.at("ticker").get<std::string>(),
                         stock.value("industry", std::string())};
        auto date = Date::parse(row.at("date").get<std::string>());
        if (!date) throw IngestError("bad record date");
        record.target_date = *date;
        for (const json& item : row.at("news")) {
            auto news_date = Date::parse(item.at("date").get<std::string>());
            if (!news_date) throw IngestError("bad news date");
            record.news.push_back({*news_date, item.at("text").get<std::string>(),
                                   item.value("source_id", std::string())});
        }
        const json& closes = row.at("closes");
        const json& close_dates = row.at("close_dates");
        if (closes.size() != close_dates.size())
            throw IngestError("closes and close_dates differ in length");
        for (std::size_t i = 0; i < closes.size(); ++i) {
            auto close_date = Date::parse(close_dates[i].get<std::string>());
            if (!close_date) throw IngestError("bad close date");
            record.history.dates.push_back(*close_date);
            record.history.closes.push_back(closes[i].get<double>());
        }
        auto gold = direction_from_label(row.at("gold").get<std::string>());
        if (!gold) throw IngestError("bad gold label");
        record.gold = *gold;
        return record;
    } catch (const json::exception& e) {
        throw IngestError("canonical record is missing fields: " + std::string(e.what()));
    }
}

}  // namespace llmfactor
