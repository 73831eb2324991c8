#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "llmfactor/backend.hpp"
#include "llmfactor/baselines.hpp"
#include "llmfactor/domain.hpp"
#include "llmfactor/ingest.hpp"
#include "llmfactor/skgp.hpp"

namespace llmfactor {

struct ExperimentConfig {
    std::string dataset = "jsonl";
    std::filesystem::path root;
    std::filesystem::path registry_path;
    std::optional<Language> language;  // unset: the dataset's own language

    BackendConfig backend;
    std::string mock_preset = "momentum";  // momentum | always-rise | always-fall

    std::vector<Layer> layers = {Layer::PriceOnly, Layer::PlusFactor,
                                 Layer::PlusFactorRelation};
    int t = 5;
    int k = 5;
    int factor_variant = 0;
    long long limit = 0;  // 0: all records
    std::uint64_t seed = 0;
    std::size_t news_char_budget = 6000;

    std::filesystem::path output_dir = "runs";
    std::string run_id;  // empty: derived from the resolved settings
    std::filesystem::path templates_path;  // optional template override file
    std::filesystem::path alias_file;      // optional ticker,alias CSV

    // Plain key = value file; '#' lines are comments. Unknown keys are
    // rejected so typos cannot silently change an experiment.
    static ExperimentConfig load(const std::filesystem::path& path);

    // Stable text form of everything that affects results; hashing it yields
    // the default run id, so identical settings resume the same run.
    std::string canonical_text() const;
    std::string resolved_run_id() const;
    Language resolved_language() const;
};

struct LayerOutcome {
    Layer layer = Layer::PriceOnly;
    EvalReport report;
    std::filesystem::path bundles_path;
    std::filesystem::path predictions_path;
    std::filesystem::path report_path;
};

struct RunResult {
    std::string run_id;
    std::filesystem::path run_dir;
    LoadStats load_stats;
    long long records_used = 0;
    std::vector<LayerOutcome> layers;
};

// Runs every configured layer over the dataset: loads records, fans work out
// to max_concurrent_requests workers, and persists bundles, predictions,
// per-layer reports, and a summary under output_dir/run_id/. Responses are
// served from the run's replay log when already recorded, which makes an
// interrupted run resumable and a finished one replayable offline.
RunResult run_experiment(const ExperimentConfig& config);

// One prediction row as persisted in predictions_<layer>.jsonl.
struct PersistedPrediction {
    std::string ticker;
    Date date;
    Direction gold = Direction::Fall;
    std::optional<Direction> predicted;
    std::string rationale;
    std::vector<std::string> factors;
    std::string model_id;
    std::string layer;
};

std::vector<PersistedPrediction> load_predictions(const std::filesystem::path& jsonl_path);
EvalReport evaluate_predictions(const std::vector<PersistedPrediction>& rows,
                                const std::string& label);

struct FactorTimelineRow {
    Date date;
    Direction gold = Direction::Fall;
    std::optional<Direction> predicted;
    std::vector<std::string> factors;
};

struct FactorTimeline {
    std::string ticker;
    std::vector<FactorTimelineRow> rows;  // dates strictly increasing
};

// Rows for one ticker within [from, to], both bounds optional.
FactorTimeline export_factor_timeline(const std::vector<PersistedPrediction>& predictions,
                                      const std::string& ticker,
                                      std::optional<Date> from,
                                      std::optional<Date> to);
std::string timeline_csv(const FactorTimeline& timeline);

// Figures parsed back from a report_<layer>.json file.
struct ReportSummary {
    std::string label;
    std::string dataset;
    std::string method;  // model + layer
    double acc = 0.0;
    double mcc = 0.0;
    long long n_records = 0;
    long long n_parse_failures = 0;
};

void write_report_json(const std::filesystem::path& path,
                       const EvalReport& report,
                       const std::string& dataset,
                       const std::string& model,
                       const std::string& layer);
ReportSummary load_report_json(const std::filesystem::path& path);

// Comparison tables: rows are methods, column pairs are ACC% (2 decimals)
// and MCC (3 decimals) per dataset. The Markdown form bolds the best value
// per column and footnotes reports that had parse failures.
std::string comparison_markdown(const std::vector<ReportSummary>& reports);
std::string comparison_csv(const std::vector<ReportSummary>& reports);

// Baseline evaluation over canonical records: lexicon keyphrase scoring
// and sentiment labels joined by (ticker, date).
EvalReport evaluate_keyphrase_baseline(const std::vector<DatasetRecord>& records,
                                       const LexiconSet& lexicons,
                                       double threshold,
                                       const std::string& label);
EvalReport evaluate_sentiment_baseline(
    const std::vector<DatasetRecord>& records,
    const std::map<std::pair<std::string, std::string>, std::string>& labels_by_ref,
    const std::string& label);

}  // namespace llmfactor
