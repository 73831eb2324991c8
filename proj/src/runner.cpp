#include "llmfactor/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "llmfactor/errors.hpp"
#include "llmfactor/matcher.hpp"
#include "llmfactor/templates.hpp"

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

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
    return buf;
}

std::string format_mcc(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", value);
    return buf;
}

std::string direction_word(Direction d) {
    return std::string(direction_label(d, Language::EN));
}

std::string csv_escape(std::string_view field) {
    const bool needs_quotes =
        field.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

long long parse_int(const std::string& value, const std::string& key, long long line_no) {
    try {
        std::size_t consumed = 0;
        long long parsed = std::stoll(value, &consumed);
        if (consumed != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("config line " + std::to_string(line_no) + ": key '" + key +
                          "' needs an integer, got '" + value + "'");
    }
}

double parse_double(const std::string& value, const std::string& key, long long line_no) {
    try {
        std::size_t consumed = 0;
        double parsed = std::stod(value, &consumed);
        if (consumed != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("config line " + std::to_string(line_no) + ": key '" + key +
                          "' needs a number, got '" + value + "'");
    }
}

std::vector<Layer> parse_layers(const std::string& value, long long line_no) {
    std::vector<Layer> layers;
    std::stringstream parts(value);
    std::string token;
    while (std::getline(parts, token, ',')) {
        token = trim(token);
        if (token.empty()) continue;
        auto layer = layer_from_name(token);
        if (!layer)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": unknown layer '" + token + "'");
        if (std::find(layers.begin(), layers.end(), *layer) == layers.end())
            layers.push_back(*layer);
    }
    if (layers.empty())
        throw ConfigError("config line " + std::to_string(line_no) + ": layers is empty");
    return layers;
}

ordered_json prediction_json(const PredictionRecord& prediction,
                             Direction gold,
                             Layer layer) {
    ordered_json relations = ordered_json::array();
    for (const RelationFinding& finding : prediction.relations) {
        relations.push_back(ordered_json{
            {"peer_ticker", finding.peer.ticker},
            {"peer_company", finding.peer.company},
            {"relation_text", finding.relation_text},
            {"low_confidence", finding.low_confidence},
        });
    }
    ordered_json factors = ordered_json::array();
    if (prediction.factors)
        for (const std::string& factor : prediction.factors->factors) factors.push_back(factor);

    ordered_json row = {
        {"ticker", prediction.ticker},
        {"date", prediction.date.to_string()},
        {"gold", direction_word(gold)},
        {"predicted", nullptr},
        {"rationale", prediction.rationale},
        {"factors", std::move(factors)},
        {"relations", std::move(relations)},
        {"model_id", prediction.model_id},
        {"layer", std::string(layer_slug(layer))},
    };
    if (prediction.direction) row["predicted"] = direction_word(*prediction.direction);
    return row;
}

ordered_json bundle_json(const PromptBundle& bundle) {
    return ordered_json{
        {"ticker", bundle.ticker},
        {"date", bundle.date.to_string()},
        {"layer", std::string(layer_slug(bundle.layer))},
        {"news_truncated", bundle.news_truncated},
        {"relation_prompts", bundle.relation_prompts},
        {"relation_responses", bundle.relation_responses},
        {"factor_prompt", bundle.factor_prompt},
        {"factor_response", bundle.factor_response},
        {"price_prompt", bundle.price_prompt},
        {"price_response", bundle.price_response},
        {"backend_error", bundle.backend_error},
    };
}

std::shared_ptr<LlmBackend> build_mock(const ExperimentConfig& config, Language language) {
    const std::string preset = ascii_lower(trim(config.mock_preset));
    if (preset == "momentum")
        return momentum_mock(language, 3, config.backend.model_id);
    if (preset == "always-rise" || preset == "always-fall") {
        const bool rise = preset == "always-rise";
        const std::string answer =
            language == Language::EN
                ? std::string("The stock price will ") + (rise ? "rise." : "fall.")
                : std::string("该股票的股价将") + (rise ? "上涨。" : "下跌。");
        std::vector<MockBackend::Rule> rules;
        rules.emplace_back("", [answer](std::string_view) { return answer; });
        return mock_from_rules(std::move(rules), config.backend.model_id);
    }
    throw ConfigError("unknown mock preset '" + config.mock_preset + "'");
}

struct MethodKey {
    std::string method;
    std::string dataset;
};

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());

    ExperimentConfig config;
    std::string line;
    long long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        const std::size_t eq = text.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value");
        const std::string key = trim(text.substr(0, eq));
        const std::string value = trim(text.substr(eq + 1));

        if (key == "dataset") config.dataset = ascii_lower(value);
        else if (key == "root") config.root = value;
        else if (key == "registry") config.registry_path = value;
        else if (key == "language") {
            const std::string lang = ascii_lower(value);
            if (lang == "en") config.language = Language::EN;
            else if (lang == "cn") config.language = Language::CN;
            else
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": language must be en or cn");
        } else if (key == "backend") {
            const std::string kind = ascii_lower(value);
            if (kind == "mock") config.backend.kind = BackendKind::Mock;
            else if (kind == "remote") config.backend.kind = BackendKind::Remote;
            else if (kind == "replay") config.backend.kind = BackendKind::Replay;
            else
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": backend must be mock, remote, or replay");
        } else if (key == "model") config.backend.model_id = value;
        else if (key == "endpoint") config.backend.endpoint_url = value;
        else if (key == "api_key_env") config.backend.api_key_env = value;
        else if (key == "timeout_s") config.backend.timeout_s = parse_double(value, key, line_no);
        else if (key == "max_retries")
            config.backend.max_retries = static_cast<int>(parse_int(value, key, line_no));
        else if (key == "max_concurrent")
            config.backend.max_concurrent_requests =
                static_cast<int>(parse_int(value, key, line_no));
        else if (key == "backoff_base_ms")
            config.backend.backoff_base_ms = static_cast<int>(parse_int(value, key, line_no));
        else if (key == "mock_preset") config.mock_preset = value;
        else if (key == "layers") config.layers = parse_layers(value, line_no);
        else if (key == "t") config.t = static_cast<int>(parse_int(value, key, line_no));
        else if (key == "k") config.k = static_cast<int>(parse_int(value, key, line_no));
        else if (key == "factor_variant")
            config.factor_variant = static_cast<int>(parse_int(value, key, line_no));
        else if (key == "limit") config.limit = parse_int(value, key, line_no);
        else if (key == "seed")
            config.seed = static_cast<std::uint64_t>(parse_int(value, key, line_no));
        else if (key == "news_char_budget")
            config.news_char_budget =
                static_cast<std::size_t>(parse_int(value, key, line_no));
        else if (key == "output") config.output_dir = value;
        else if (key == "run_id") config.run_id = value;
        else if (key == "templates") config.templates_path = value;
        else if (key == "alias_file") config.alias_file = value;
        else
            throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" +
                              key + "'");
    }
    return config;
}

Language ExperimentConfig::resolved_language() const {
    if (language) return *language;
    return DatasetManifest::preset(dataset).language;
}

std::string ExperimentConfig::canonical_text() const {
    // Only settings that influence the produced artifacts take part; the
    // output location and transport tuning (timeouts, retries) do not.
    std::ostringstream out;
    out << "dataset = " << dataset << '\n';
    out << "root = " << root.string() << '\n';
    out << "registry = " << registry_path.string() << '\n';
    out << "language = " << (resolved_language() == Language::EN ? "en" : "cn") << '\n';
    out << "backend = "
        << (backend.kind == BackendKind::Mock
                ? "mock"
                : backend.kind == BackendKind::Remote ? "remote" : "replay")
        << '\n';
    out << "model = " << backend.model_id << '\n';
    out << "endpoint = " << backend.endpoint_url << '\n';
    out << "mock_preset = " << mock_preset << '\n';
    out << "layers = ";
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (i > 0) out << ',';
        out << layer_name(layers[i]);
    }
    out << '\n';
    out << "t = " << t << '\n';
    out << "k = " << k << '\n';
    out << "factor_variant = " << factor_variant << '\n';
    out << "limit = " << limit << '\n';
    out << "seed = " << seed << '\n';
    out << "news_char_budget = " << news_char_budget << '\n';
    out << "templates = " << templates_path.string() << '\n';
    out << "alias_file = " << alias_file.string() << '\n';
    return out.str();
}

std::string ExperimentConfig::resolved_run_id() const {
    if (!run_id.empty()) return run_id;
    return to_hex64(fnv1a64(canonical_text()));
}

// ---------------------------------------------------------------------------
// Experiment execution

RunResult run_experiment(const ExperimentConfig& config) {
    if (config.t < 1) throw ConfigError("t must be at least 1");
    if (config.k < 1) throw ConfigError("k must be at least 1");
    if (config.layers.empty()) throw ConfigError("no layers configured");
    if (config.root.empty()) throw ConfigError("no dataset root configured");

    const DatasetManifest manifest = DatasetManifest::preset(config.dataset);
    const Language language = config.resolved_language();
    const PromptTemplateSet templates =
        config.templates_path.empty()
            ? PromptTemplateSet::defaults(language, config.factor_variant)
            : PromptTemplateSet::load_file(config.templates_path, language,
                                           config.factor_variant);

    std::vector<StockEntry> registry;
    if (!config.registry_path.empty()) registry = load_stock_registry(config.registry_path);

    std::vector<DatasetRecord> records;
    LoadStats stats = load_dataset(manifest, config.root, registry, config.t,
                                   [&](DatasetRecord&& record) {
                                       records.push_back(std::move(record));
                                   });
    if (records.empty()) throw EmptyEvaluation("dataset produced no usable records");

    std::stable_sort(records.begin(), records.end(),
                     [](const DatasetRecord& a, const DatasetRecord& b) {
                         if (a.target.ticker != b.target.ticker)
                             return a.target.ticker < b.target.ticker;
                         return a.target_date < b.target_date;
                     });

    if (config.limit > 0 && static_cast<long long>(records.size()) > config.limit) {
        std::vector<std::size_t> order(records.size());
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(config.seed);
        std::shuffle(order.begin(), order.end(), rng);
        order.resize(static_cast<std::size_t>(config.limit));
        std::sort(order.begin(), order.end());  // keep (ticker, date) order
        std::vector<DatasetRecord> sampled;
        sampled.reserve(order.size());
        for (std::size_t index : order) sampled.push_back(std::move(records[index]));
        records = std::move(sampled);
    }

    // The matcher needs every record's stock present, including stocks the
    // registry did not mention.
    std::vector<StockEntry> effective_registry = registry;
    {
        std::set<std::string> known;
        for (const StockEntry& entry : registry) known.insert(entry.ticker);
        for (const DatasetRecord& record : records)
            if (known.insert(record.target.ticker).second)
                effective_registry.push_back(record.target);
    }
    StockMatcher matcher(std::move(effective_registry));
    if (!config.alias_file.empty())
        for (const auto& [ticker, alias] : load_alias_file(config.alias_file))
            matcher.add_alias(ticker, alias);

    RunResult result;
    result.run_id = config.resolved_run_id();
    result.run_dir = config.output_dir / result.run_id;
    result.load_stats = stats;
    result.records_used = static_cast<long long>(records.size());
    fs::create_directories(result.run_dir);

    {
        std::ofstream snapshot(result.run_dir / "config.txt", std::ios::binary);
        snapshot << config.canonical_text();
    }

    auto cache = std::make_shared<ResponseCache>(result.run_dir / "replay.jsonl");
    std::shared_ptr<LlmBackend> inner;
    if (config.backend.kind == BackendKind::Mock) inner = build_mock(config, language);
    else if (config.backend.kind == BackendKind::Remote)
        inner = std::make_shared<RemoteBackend>(config.backend);
    CachedBackend backend(inner, cache, config.backend.kind == BackendKind::Replay,
                          config.backend.model_id);

    for (Layer layer : config.layers) {
        SkgpOptions options;
        options.layer = layer;
        options.k = config.k;
        options.news_char_budget = config.news_char_budget;

        std::vector<std::pair<PromptBundle, PredictionRecord>> outcomes(records.size());
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;

        auto work = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= records.size()) return;
                try {
                    outcomes[i] =
                        run_skgp(records[i], matcher, templates, backend, options);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    return;
                }
            }
        };
        const int n_workers = std::max(
            1, std::min<int>(config.backend.max_concurrent_requests,
                             static_cast<int>(records.size())));
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(n_workers));
        for (int w = 0; w < n_workers; ++w) workers.emplace_back(work);
        for (std::thread& worker : workers) worker.join();
        if (failure) std::rethrow_exception(failure);

        const std::string slug(layer_slug(layer));
        LayerOutcome outcome;
        outcome.layer = layer;
        outcome.bundles_path = result.run_dir / ("bundles_" + slug + ".jsonl");
        outcome.predictions_path = result.run_dir / ("predictions_" + slug + ".jsonl");
        outcome.report_path = result.run_dir / ("report_" + slug + ".json");

        std::ofstream bundles(outcome.bundles_path, std::ios::binary);
        std::ofstream predictions(outcome.predictions_path, std::ios::binary);
        if (!bundles || !predictions)
            throw IngestError("cannot write run artifacts under " + result.run_dir.string());

        std::vector<std::pair<Direction, std::optional<Direction>>> pairs;
        pairs.reserve(records.size());
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& [bundle, prediction] = outcomes[i];
            bundles << bundle_json(bundle).dump() << '\n';
            predictions << prediction_json(prediction, records[i].gold, layer).dump()
                        << '\n';
            pairs.emplace_back(records[i].gold, prediction.direction);
        }

        const std::string label =
            manifest.name + "/" + config.backend.model_id + "/" + std::string(layer_name(layer));
        outcome.report = evaluate(pairs, Direction::Rise, label);
        write_report_json(outcome.report_path, outcome.report, manifest.name,
                          config.backend.model_id, std::string(layer_name(layer)));
        result.layers.push_back(std::move(outcome));
    }

    {
        const ordered_json run_stats = {
            {"run_id", result.run_id},
            {"dataset", manifest.name},
            {"records_used", result.records_used},
            {"records_emitted", stats.emitted},
            {"skipped_no_news", stats.skipped_no_news},
            {"skipped_no_history", stats.skipped_no_history},
            {"skipped_bad_rows", stats.skipped_bad_rows},
            {"synthesized_registry_entries", stats.synthesized_registry_entries},
            {"news_char_budget", config.news_char_budget},
        };
        std::ofstream stats_out(result.run_dir / "stats.json", std::ios::binary);
        stats_out << run_stats.dump(2) << '\n';
    }
    {
        std::vector<ReportSummary> summaries;
        for (const LayerOutcome& layer : result.layers)
            summaries.push_back(load_report_json(layer.report_path));
        std::ofstream summary(result.run_dir / "report.md", std::ios::binary);
        summary << comparison_markdown(summaries);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Persisted predictions

std::vector<PersistedPrediction> load_predictions(const std::filesystem::path& jsonl_path) {
    std::ifstream in(jsonl_path);
    if (!in) throw IngestError("cannot read predictions file " + jsonl_path.string());
    std::vector<PersistedPrediction> rows;
    std::string line;
    long long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded())
            throw IngestError("predictions line " + std::to_string(line_no) +
                              " is not valid JSON");
        try {
            PersistedPrediction prediction;
            prediction.ticker = row.at("ticker").get<std::string>();
            auto date = Date::parse(row.at("date").get<std::string>());
            if (!date) throw IngestError("bad date");
            prediction.date = *date;
            auto gold = direction_from_label(row.at("gold").get<std::string>());
            if (!gold) throw IngestError("bad gold label");
            prediction.gold = *gold;
            if (row.contains("predicted") && !row["predicted"].is_null()) {
                auto predicted = direction_from_label(row["predicted"].get<std::string>());
                if (!predicted) throw IngestError("bad predicted label");
                prediction.predicted = predicted;
            }
            prediction.rationale = row.value("rationale", std::string());
            if (row.contains("factors"))
                for (const json& factor : row["factors"])
                    prediction.factors.push_back(factor.get<std::string>());
            prediction.model_id = row.value("model_id", std::string());
            prediction.layer = row.value("layer", std::string());
            rows.push_back(std::move(prediction));
        } catch (const json::exception& e) {
            throw IngestError("predictions line " + std::to_string(line_no) + ": " +
                              e.what());
        }
    }
    return rows;
}

EvalReport evaluate_predictions(const std::vector<PersistedPrediction>& rows,
                                const std::string& label) {
    std::vector<std::pair<Direction, std::optional<Direction>>> pairs;
    pairs.reserve(rows.size());
    for (const PersistedPrediction& row : rows) pairs.emplace_back(row.gold, row.predicted);
    return evaluate(pairs, Direction::Rise, label);
}

// ---------------------------------------------------------------------------
// Factor timeline

FactorTimeline export_factor_timeline(const std::vector<PersistedPrediction>& predictions,
                                      const std::string& ticker,
                                      std::optional<Date> from,
                                      std::optional<Date> to) {
    FactorTimeline timeline;
    timeline.ticker = ticker;
    std::vector<const PersistedPrediction*> selected;
    for (const PersistedPrediction& row : predictions) {
        if (row.ticker != ticker) continue;
        if (from && row.date < *from) continue;
        if (to && *to < row.date) continue;
        selected.push_back(&row);
    }
    std::sort(selected.begin(), selected.end(),
              [](const PersistedPrediction* a, const PersistedPrediction* b) {
                  return a->date < b->date;
              });
    for (const PersistedPrediction* row : selected) {
        // Several records can share a date (article-level datasets); the
        // timeline keeps the first so dates stay strictly increasing.
        if (!timeline.rows.empty() && !(timeline.rows.back().date < row->date)) continue;
        timeline.rows.push_back({row->date, row->gold, row->predicted, row->factors});
    }
    if (timeline.rows.empty())
        throw EmptyTimeline("no predictions for " + ticker + " in the requested range");
    return timeline;
}

std::string timeline_csv(const FactorTimeline& timeline) {
    std::string out = "ticker,date,gold,predicted,factors\n";
    for (const FactorTimelineRow& row : timeline.rows) {
        std::string factors;
        for (std::size_t i = 0; i < row.factors.size(); ++i) {
            if (i > 0) factors += "; ";
            factors += row.factors[i];
        }
        out += csv_escape(timeline.ticker);
        out += ',';
        out += row.date.to_string();
        out += ',';
        out += direction_word(row.gold);
        out += ',';
        out += row.predicted ? direction_word(*row.predicted) : "parse_failure";
        out += ',';
        out += csv_escape(factors);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports and comparisons

void write_report_json(const std::filesystem::path& path,
                       const EvalReport& report,
                       const std::string& dataset,
                       const std::string& model,
                       const std::string& layer) {
    const ordered_json row = {
        {"label", report.label},
        {"dataset", dataset},
        {"model", model},
        {"layer", layer},
        {"n_records", report.matrix.total()},
        {"tp", report.matrix.tp},
        {"fp", report.matrix.fp},
        {"fn", report.matrix.fn},
        {"tn", report.matrix.tn},
        {"acc", report.acc},
        {"mcc", report.mcc},
        {"n_parse_failures", report.n_parse_failures},
    };
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot write report " + path.string());
    out << row.dump(2) << '\n';
}

ReportSummary load_report_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot read report " + path.string());
    json row = json::parse(in, nullptr, false);
    if (row.is_discarded()) throw IngestError("report is not valid JSON: " + path.string());

    ReportSummary summary;
    summary.label = row.value("label", path.stem().string());
    summary.dataset = row.value("dataset", std::string("?"));
    const std::string model = row.value("model", std::string());
    const std::string layer = row.value("layer", std::string());
    if (!model.empty() || !layer.empty())
        summary.method = model + (layer.empty() ? "" : "/" + layer);
    else
        summary.method = summary.label;
    summary.acc = row.value("acc", 0.0);
    summary.mcc = row.value("mcc", 0.0);
    summary.n_records = row.value("n_records", 0LL);
    summary.n_parse_failures = row.value("n_parse_failures", 0LL);
    return summary;
}

std::string comparison_csv(const std::vector<ReportSummary>& reports) {
    if (reports.empty()) throw EmptyEvaluation("no reports to compare");
    std::string out = "method,dataset,acc_percent,mcc,n_records,n_parse_failures\n";
    for (const ReportSummary& report : reports) {
        out += csv_escape(report.method);
        out += ',';
        out += csv_escape(report.dataset);
        out += ',';
        out += format_percent(report.acc);
        out += ',';
        out += format_mcc(report.mcc);
        out += ',';
        out += std::to_string(report.n_records);
        out += ',';
        out += std::to_string(report.n_parse_failures);
        out += '\n';
    }
    return out;
}

std::string comparison_markdown(const std::vector<ReportSummary>& reports) {
    if (reports.empty()) throw EmptyEvaluation("no reports to compare");

    std::vector<std::string> datasets;
    std::vector<std::string> methods;
    std::map<std::pair<std::string, std::string>, const ReportSummary*> cells;
    for (const ReportSummary& report : reports) {
        if (std::find(datasets.begin(), datasets.end(), report.dataset) == datasets.end())
            datasets.push_back(report.dataset);
        if (std::find(methods.begin(), methods.end(), report.method) == methods.end())
            methods.push_back(report.method);
        cells[{report.method, report.dataset}] = &report;
    }

    // Best figures per dataset column, for bolding.
    std::map<std::string, double> best_acc, best_mcc;
    for (const ReportSummary& report : reports) {
        auto [acc_it, acc_new] = best_acc.try_emplace(report.dataset, report.acc);
        if (!acc_new) acc_it->second = std::max(acc_it->second, report.acc);
        auto [mcc_it, mcc_new] = best_mcc.try_emplace(report.dataset, report.mcc);
        if (!mcc_new) mcc_it->second = std::max(mcc_it->second, report.mcc);
    }

    std::string out = "| Method |";
    for (const std::string& dataset : datasets)
        out += " " + dataset + " ACC (%) | " + dataset + " MCC |";
    out += "\n|---|";
    for (std::size_t i = 0; i < datasets.size(); ++i) out += "---|---|";
    out += "\n";

    std::vector<std::string> footnotes;
    const bool multiple = reports.size() > 1;
    for (const std::string& method : methods) {
        std::string row = "| " + method;
        for (const std::string& dataset : datasets) {
            auto it = cells.find({method, dataset});
            if (it == cells.end()) {
                row += " | - | -";
                continue;
            }
            const ReportSummary& report = *it->second;
            std::string acc_text = format_percent(report.acc);
            std::string mcc_text = format_mcc(report.mcc);
            if (multiple && report.acc == best_acc[dataset]) acc_text = "**" + acc_text + "**";
            if (multiple && report.mcc == best_mcc[dataset]) mcc_text = "**" + mcc_text + "**";
            std::string dagger;
            if (report.n_parse_failures > 0) {
                dagger = "†";
                footnotes.push_back(method + ": " + std::to_string(report.n_parse_failures) +
                                    " parse failure(s) scored as wrong on " + dataset);
            }
            row += " | " + acc_text + dagger + " | " + mcc_text;
        }
        out += row + " |\n";
    }
    for (const std::string& note : footnotes) out += "\n† " + note + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Baselines over canonical records

EvalReport evaluate_keyphrase_baseline(const std::vector<DatasetRecord>& records,
                                       const LexiconSet& lexicons,
                                       double threshold,
                                       const std::string& label) {
    std::vector<std::pair<Direction, std::optional<Direction>>> pairs;
    pairs.reserve(records.size());
    for (const DatasetRecord& record : records) {
        const KeyphraseLexicon& lexicon = lexicons.lexicon_for(record.target.ticker);
        std::optional<Direction> predicted;
        if (!lexicon.pos.empty() || !lexicon.neg.empty()) {
            const double score = keyphrase_score(concatenate_news(record.news), lexicon);
            predicted = keyphrase_direction(score, threshold);
        }
        pairs.emplace_back(record.gold, predicted);
    }
    return evaluate(pairs, Direction::Rise, label);
}

EvalReport evaluate_sentiment_baseline(
    const std::vector<DatasetRecord>& records,
    const std::map<std::pair<std::string, std::string>, std::string>& labels_by_ref,
    const std::string& label) {
    std::vector<std::pair<Direction, std::optional<Direction>>> pairs;
    pairs.reserve(records.size());
    for (const DatasetRecord& record : records) {
        std::optional<Direction> predicted;
        auto it = labels_by_ref.find({record.target.ticker, record.target_date.to_string()});
        if (it != labels_by_ref.end()) predicted = sentiment_direction(it->second);
        pairs.emplace_back(record.gold, predicted);
    }
    return evaluate(pairs, Direction::Rise, label);
}

}  // namespace llmfactor
