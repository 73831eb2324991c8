// Command-line front end: run experiments, evaluate prediction files, export
// factor timelines, compare reports, and score the non-LLM baselines.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "llmfactor/errors.hpp"
#include "llmfactor/runner.hpp"

namespace {

using namespace llmfactor;
using nlohmann::json;
using nlohmann::ordered_json;

ordered_json report_to_json(const EvalReport& report) {
    return ordered_json{
        {"label", report.label},
        {"n_records", report.matrix.total()},
        {"tp", report.matrix.tp},
        {"fp", report.matrix.fp},
        {"fn", report.matrix.fn},
        {"tn", report.matrix.tn},
        {"acc", report.acc},
        {"mcc", report.mcc},
        {"n_parse_failures", report.n_parse_failures},
    };
}

std::optional<Date> parse_date_option(const std::string& value, const char* flag) {
    if (value.empty()) return std::nullopt;
    auto date = Date::parse(value);
    if (!date) throw ConfigError(std::string(flag) + " must be YYYY-MM-DD, got '" + value + "'");
    return date;
}

std::vector<DatasetRecord> load_records_cli(const std::string& dataset,
                                            const std::string& root,
                                            const std::string& registry_path,
                                            int t,
                                            LoadStats* stats_out = nullptr) {
    std::vector<StockEntry> registry;
    if (!registry_path.empty()) registry = load_stock_registry(registry_path);
    std::vector<DatasetRecord> records;
    LoadStats stats =
        load_dataset(DatasetManifest::preset(dataset), root, registry, t,
                     [&](DatasetRecord&& record) { records.push_back(std::move(record)); });
    if (stats_out) *stats_out = stats;
    return records;
}

void write_or_print(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IngestError("cannot write " + out_path);
    out << content;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stock movement prediction via sequential knowledge-guided prompting"};
    app.require_subcommand(1);

    // --- run ---------------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "Run a configured experiment");
    std::string run_config_path;
    std::string run_output_override;
    std::string run_id_override;
    run_cmd->add_option("--config", run_config_path, "Experiment config file")->required();
    run_cmd->add_option("--output", run_output_override, "Override the output directory");
    run_cmd->add_option("--run-id", run_id_override, "Override the derived run id");

    // --- eval --------------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("eval", "Score a predictions JSONL file");
    std::string eval_predictions_path;
    std::string eval_label = "predictions";
    eval_cmd->add_option("--predictions", eval_predictions_path, "predictions_*.jsonl file")
        ->required();
    eval_cmd->add_option("--label", eval_label, "Label for the report");

    // --- timeline ----------------------------------------------------------
    auto* timeline_cmd =
        app.add_subcommand("timeline", "Export one stock's factor timeline as CSV");
    std::string timeline_predictions_path, timeline_ticker, timeline_from, timeline_to,
        timeline_out;
    timeline_cmd->add_option("--predictions", timeline_predictions_path,
                             "predictions_*.jsonl file")
        ->required();
    timeline_cmd->add_option("--ticker", timeline_ticker, "Stock ticker")->required();
    timeline_cmd->add_option("--from", timeline_from, "First date (YYYY-MM-DD)");
    timeline_cmd->add_option("--to", timeline_to, "Last date (YYYY-MM-DD)");
    timeline_cmd->add_option("--out", timeline_out, "Output CSV path (default stdout)");

    // --- compare -----------------------------------------------------------
    auto* compare_cmd = app.add_subcommand("compare", "Tabulate report_*.json files");
    std::vector<std::string> compare_paths;
    std::string compare_format = "md";
    std::string compare_out;
    compare_cmd->add_option("reports", compare_paths, "report_*.json files")
        ->required()
        ->expected(-1);
    compare_cmd->add_option("--format", compare_format, "md or csv")
        ->check(CLI::IsMember({"md", "csv"}));
    compare_cmd->add_option("--out", compare_out, "Output path (default stdout)");

    // --- ingest ------------------------------------------------------------
    auto* ingest_cmd =
        app.add_subcommand("ingest", "Convert a dataset to canonical JSONL records");
    std::string ingest_dataset, ingest_root, ingest_registry, ingest_out;
    int ingest_t = 5;
    ingest_cmd->add_option("--dataset", ingest_dataset, "stocknet|cmin-us|cmin-cn|edt|jsonl")
        ->required();
    ingest_cmd->add_option("--root", ingest_root, "Dataset root directory")->required();
    ingest_cmd->add_option("--registry", ingest_registry, "Stock registry CSV");
    ingest_cmd->add_option("--t", ingest_t, "History window size");
    ingest_cmd->add_option("--out", ingest_out, "Output JSONL path (default stdout)");

    // --- baseline ----------------------------------------------------------
    auto* baseline_cmd = app.add_subcommand("baseline", "Score non-LLM baselines");
    baseline_cmd->require_subcommand(1);

    auto* keyphrase_cmd =
        baseline_cmd->add_subcommand("keyphrase", "Lexicon scoring baseline");
    std::string kp_dataset, kp_root, kp_registry, kp_pos, kp_neg, kp_split, kp_label;
    int kp_t = 5, kp_k = 5;
    double kp_threshold = 0.5;
    bool kp_allow_overlap = false;
    keyphrase_cmd->add_option("--dataset", kp_dataset, "stocknet|cmin-us|cmin-cn|edt|jsonl")
        ->required();
    keyphrase_cmd->add_option("--root", kp_root, "Dataset root directory")->required();
    keyphrase_cmd->add_option("--registry", kp_registry, "Stock registry CSV");
    keyphrase_cmd->add_option("--pos", kp_pos, "Positive keyphrases CSV (ticker,phrase,rank)")
        ->required();
    keyphrase_cmd->add_option("--neg", kp_neg, "Negative keyphrases CSV (ticker,phrase,rank)")
        ->required();
    keyphrase_cmd->add_option("--k", kp_k, "Phrases kept per stock per label");
    keyphrase_cmd->add_option("--t", kp_t, "History window size");
    keyphrase_cmd->add_option("--threshold", kp_threshold, "Rise threshold on the score");
    keyphrase_cmd->add_flag("--allow-overlap", kp_allow_overlap,
                            "Permit a phrase in both labels (warned)");
    keyphrase_cmd
        ->add_option("--split", kp_split,
                     "Which split the lexicons were built from: train or full")
        ->required()
        ->check(CLI::IsMember({"train", "full"}));
    keyphrase_cmd->add_option("--label", kp_label, "Label for the report");

    auto* sentiment_cmd =
        baseline_cmd->add_subcommand("sentiment", "Sentiment label baseline");
    std::string sn_dataset, sn_root, sn_registry, sn_labels, sn_label;
    int sn_t = 5;
    sentiment_cmd->add_option("--dataset", sn_dataset, "stocknet|cmin-us|cmin-cn|edt|jsonl")
        ->required();
    sentiment_cmd->add_option("--root", sn_root, "Dataset root directory")->required();
    sentiment_cmd->add_option("--registry", sn_registry, "Stock registry CSV");
    sentiment_cmd
        ->add_option("--labels", sn_labels,
                     "JSONL of {\"ticker\",\"date\",\"label\"} sentiment rows")
        ->required();
    sentiment_cmd->add_option("--t", sn_t, "History window size");
    sentiment_cmd->add_option("--label", sn_label, "Label for the report");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            ExperimentConfig config = ExperimentConfig::load(run_config_path);
            if (!run_output_override.empty()) config.output_dir = run_output_override;
            if (!run_id_override.empty()) config.run_id = run_id_override;
            RunResult result = run_experiment(config);
            std::cerr << "run " << result.run_id << ": " << result.records_used
                      << " records (skipped " << result.load_stats.skipped_no_news
                      << " without news, " << result.load_stats.skipped_no_history
                      << " without history)\n";
            for (const LayerOutcome& layer : result.layers) {
                std::cout << report_to_json(layer.report).dump() << '\n';
            }
            std::cerr << "artifacts in " << result.run_dir.string() << '\n';
        } else if (*eval_cmd) {
            auto rows = load_predictions(eval_predictions_path);
            EvalReport report = evaluate_predictions(rows, eval_label);
            std::cout << report_to_json(report).dump(2) << '\n';
        } else if (*timeline_cmd) {
            auto rows = load_predictions(timeline_predictions_path);
            FactorTimeline timeline = export_factor_timeline(
                rows, timeline_ticker, parse_date_option(timeline_from, "--from"),
                parse_date_option(timeline_to, "--to"));
            write_or_print(timeline_out, timeline_csv(timeline));
        } else if (*compare_cmd) {
            std::vector<ReportSummary> summaries;
            summaries.reserve(compare_paths.size());
            for (const std::string& path : compare_paths)
                summaries.push_back(load_report_json(path));
            write_or_print(compare_out, compare_format == "csv"
                                            ? comparison_csv(summaries)
                                            : comparison_markdown(summaries));
        } else if (*ingest_cmd) {
            LoadStats stats;
            auto records =
                load_records_cli(ingest_dataset, ingest_root, ingest_registry, ingest_t, &stats);
            std::ostringstream lines;
            for (const DatasetRecord& record : records) write_canonical_record(lines, record);
            write_or_print(ingest_out, lines.str());
            std::cerr << "emitted " << stats.emitted << " records, skipped "
                      << stats.skipped_no_news << " without news, "
                      << stats.skipped_no_history << " without history, "
                      << stats.skipped_bad_rows << " bad rows\n";
        } else if (*keyphrase_cmd) {
            if (kp_split == "full")
                std::cerr << "warning: lexicons built from the full split overlap the "
                             "evaluation records; scores may be optimistic\n";
            LexiconSet lexicons = build_lexicons(kp_pos, kp_neg, kp_k, kp_allow_overlap);
            for (const std::string& warning : lexicons.overlap_warnings())
                std::cerr << "warning: " << warning << '\n';
            auto records = load_records_cli(kp_dataset, kp_root, kp_registry, kp_t);
            if (kp_label.empty()) kp_label = kp_dataset + "/keyphrase-baseline";
            EvalReport report =
                evaluate_keyphrase_baseline(records, lexicons, kp_threshold, kp_label);
            std::cout << report_to_json(report).dump(2) << '\n';
        } else if (*sentiment_cmd) {
            std::ifstream labels_in(sn_labels);
            if (!labels_in) throw IngestError("cannot read labels file " + sn_labels);
            std::map<std::pair<std::string, std::string>, std::string> labels;
            std::string line;
            while (std::getline(labels_in, line)) {
                if (line.empty()) continue;
                json row = json::parse(line, nullptr, false);
                if (row.is_discarded() || !row.contains("ticker") || !row.contains("date") ||
                    !row.contains("label"))
                    throw IngestError("labels file rows need ticker, date, and label");
                labels[{row["ticker"].get<std::string>(), row["date"].get<std::string>()}] =
                    row["label"].get<std::string>();
            }
            auto records = load_records_cli(sn_dataset, sn_root, sn_registry, sn_t);
            if (sn_label.empty()) sn_label = sn_dataset + "/sentiment-baseline";
            EvalReport report = evaluate_sentiment_baseline(records, labels, sn_label);
            std::cout << report_to_json(report).dump(2) << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
