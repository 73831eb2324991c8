// Acceptance gate: every release-blocking behavior, one pass/fail line each.
// Exits nonzero when any criterion fails. Optional environment variables:
//   LLMFACTOR_DATA_ROOT    directory holding full corpora (stocknet/, cmin-us/,
//                          cmin-cn/, edt/) for the ingestion-count criterion
//   LLMFACTOR_LIVE_SMOKE   "1" plus LLMFACTOR_LIVE_ENDPOINT (and the api key
//                          env it needs) to run one real completion

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "llmfactor/backend.hpp"
#include "llmfactor/baselines.hpp"
#include "llmfactor/domain.hpp"
#include "llmfactor/errors.hpp"
#include "llmfactor/ingest.hpp"
#include "llmfactor/runner.hpp"
#include "llmfactor/templates.hpp"
#include "test_support.hpp"

using namespace llmfactor;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Skip : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& detail) {
    if (!ok) throw Failure(detail);
}

double exact_mcc(std::int64_t tp, std::int64_t fp, std::int64_t fn, std::int64_t tn) {
    const std::int64_t f1 = tp + fp, f2 = tp + fn, f3 = tn + fp, f4 = tn + fn;
    if (f1 == 0 || f2 == 0 || f3 == 0 || f4 == 0) return 0.0;
    const long double num =
        static_cast<long double>(tp) * tn - static_cast<long double>(fp) * fn;
    const long double den = std::sqrt(static_cast<long double>(f1 * f2)) *
                            std::sqrt(static_cast<long double>(f3 * f4));
    return static_cast<double>(num / den);
}

// --- criteria ----------------------------------------------------------------

void metrics_match_exact_oracle() {
    std::mt19937_64 gen(20240115);
    std::uniform_int_distribution<std::int64_t> count(0, 10000);
    int evaluated = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        ConfusionMatrix m{count(gen), count(gen), count(gen), count(gen)};
        if (trial % 9 == 0) m.tp = m.fp = 0;   // degenerate prediction margins
        if (trial % 13 == 0) m.fn = m.tn = 0;  // degenerate gold margins
        if (m.total() == 0) continue;
        ++evaluated;
        const double want_acc = static_cast<double>(m.tp + m.tn) / m.total();
        if (std::fabs(accuracy(m) - want_acc) > 1e-12)
            throw Failure("accuracy drifted from the oracle on trial " + std::to_string(trial));
        const double want_mcc = exact_mcc(m.tp, m.fp, m.fn, m.tn);
        if (std::fabs(mcc(m) - want_mcc) > 1e-9)
            throw Failure("mcc drifted from the oracle on trial " + std::to_string(trial));
    }
    require(evaluated > 900, "random matrix generator produced too few cases");
}

void metrics_reference_point() {
    const ConfusionMatrix m{90, 40, 10, 60};
    require(std::fabs(accuracy(m) - 0.75) <= 1e-12, "accuracy(90,40,10,60) is not 0.75");
    require(std::fabs(mcc(m) - 0.52414) <= 1e-5,
            "mcc(90,40,10,60) missed the reference value 0.52414");
    require(mcc({5, 0, 0, 0}) == 0.0, "degenerate matrix must map to mcc 0");
}

void prompts_match_golden_bytes() {
    const fs::path dir(GOLDEN_DIR);
    const json manifest = json::parse(testing::read_file(dir / "fixtures.json"));
    require(manifest.is_array() && manifest.size() >= 20, "golden manifest is incomplete");
    int checked = 0;
    for (const auto& fixture : manifest) {
        const std::string id = fixture.at("id").get<std::string>();
        const auto& args = fixture.at("args");
        const Language lang =
            fixture.at("language").get<std::string>() == "cn" ? Language::CN : Language::EN;
        const std::string kind = fixture.at("kind").get<std::string>();

        std::string got;
        if (kind == "relation") {
            got = render_relation_prompt(PromptTemplateSet::defaults(lang),
                                         args.at("target").get<std::string>(),
                                         args.at("peer").get<std::string>());
        } else if (kind == "factor") {
            got = render_factor_prompt(
                PromptTemplateSet::defaults(lang, args.at("variant").get<int>()),
                args.at("target").get<std::string>(), args.at("k").get<int>(),
                args.at("news").get<std::string>());
        } else {
            MovementWindow window;
            for (const auto& move : args.at("movements")) {
                window.dates.push_back(*Date::parse(move.at(0).get<std::string>()));
                window.moves.push_back(move.at(1).get<std::string>() == "rise"
                                           ? Direction::Rise
                                           : Direction::Fall);
            }
            got = render_price_prompt(PromptTemplateSet::defaults(lang),
                                      args.at("target").get<std::string>(), window,
                                      *Date::parse(args.at("target_date").get<std::string>()),
                                      args.at("factors").get<std::vector<std::string>>(),
                                      args.at("relations").get<std::vector<std::string>>());
        }
        if (got != testing::read_file(dir / (id + ".txt")))
            throw Failure("prompt bytes diverged from " + id);
        ++checked;
    }
    require(checked >= 20, "fewer than 20 golden fixtures were checked");
}

void keyphrase_scores_match_oracle() {
    const double s0 = keyphrase_score("flat tape", {{"beat"}, {"miss"}, false, false});
    require(std::fabs(s0 - 0.5) <= 1e-5, "sigmoid(0) must be 0.5");
    const double s2 =
        keyphrase_score("beat and upgrade", {{"beat", "upgrade"}, {}, false, false});
    require(std::fabs(s2 - 0.8807970779778823) <= 1e-5, "sigmoid(2) reference point missed");
    const double sm1 = keyphrase_score("a miss", {{}, {"miss"}, false, false});
    require(std::fabs(sm1 - 0.2689414213699951) <= 1e-5, "sigmoid(-1) reference point missed");

    const std::vector<std::string> vocabulary = {
        "demand", "supply", "beat", "miss", "upgrade", "downgrade", "growth", "loss",
        "margin", "guide",  "probe", "deal", "recall",  "buyback",
    };
    std::mt19937_64 gen(5150);
    for (int trial = 0; trial < 500; ++trial) {
        KeyphraseLexicon lexicon;
        auto random_phrase = [&] {
            std::string phrase = vocabulary[gen() % vocabulary.size()];
            if (gen() % 3 == 0) phrase += " " + vocabulary[gen() % vocabulary.size()];
            return phrase;
        };
        const int n_pos = 1 + static_cast<int>(gen() % 4);
        const int n_neg = static_cast<int>(gen() % 5);
        for (int i = 0; i < n_pos; ++i) lexicon.pos.insert(random_phrase());
        for (int i = 0; i < n_neg; ++i) {
            std::string p = random_phrase();
            if (!lexicon.pos.count(p)) lexicon.neg.insert(p);
        }

        std::string text;
        std::vector<std::string> tokens;
        const int words = 1 + static_cast<int>(gen() % 30);
        for (int i = 0; i < words; ++i) {
            tokens.push_back(vocabulary[gen() % vocabulary.size()]);
            if (i) text += ' ';
            text += tokens.back();
        }

        auto present = [&](const std::string& phrase) {
            std::istringstream ps(phrase);
            std::vector<std::string> pw;
            std::string w;
            while (ps >> w) pw.push_back(w);
            for (std::size_t i = 0; i + pw.size() <= tokens.size(); ++i) {
                bool all = true;
                for (std::size_t j = 0; j < pw.size(); ++j)
                    if (tokens[i + j] != pw[j]) { all = false; break; }
                if (all) return true;
            }
            return false;
        };
        int sum = 0;
        for (const auto& p : lexicon.pos) sum += present(p) ? 1 : 0;
        for (const auto& n : lexicon.neg) sum -= present(n) ? 1 : 0;
        const double want = 1.0 / (1.0 + std::exp(-sum));
        const double got = keyphrase_score(text, lexicon);
        if (std::fabs(got - want) > 1e-12)
            throw Failure("keyphrase score diverged from the token oracle on trial " +
                          std::to_string(trial));
    }
}

// Shared by the end-to-end and bookkeeping criteria.
struct E2eArtifacts {
    testing::TempDir tmp;
    testing::MomentumFixture data;
    RunResult first;
    ExperimentConfig config;
};

E2eArtifacts* g_e2e = nullptr;

ExperimentConfig e2e_config(const fs::path& base, const fs::path& output) {
    ExperimentConfig config;
    config.dataset = "jsonl";
    config.root = base / "ds";
    config.registry_path = base / "registry.csv";
    config.backend.kind = BackendKind::Mock;
    config.mock_preset = "momentum";
    config.output_dir = output;
    return config;
}

void offline_run_is_exact_and_deterministic() {
    static E2eArtifacts artifacts;
    artifacts.data = testing::momentum_fixture();
    testing::write_jsonl_dataset(artifacts.tmp.path() / "ds", artifacts.data.records);
    testing::write_registry_csv(artifacts.tmp.path() / "registry.csv",
                                artifacts.data.registry);
    artifacts.config = e2e_config(artifacts.tmp.path(), artifacts.tmp.path() / "out0");
    artifacts.first = run_experiment(artifacts.config);
    g_e2e = &artifacts;

    const auto& first = artifacts.first;
    require(first.records_used == 40, "the fixture must contribute 40 records");
    require(first.layers.size() == 3, "all three prompt layers must run");
    for (const auto& layer : first.layers) {
        const std::string name(layer_name(layer.layer));
        require(layer.report.matrix == artifacts.data.expected,
                name + ": confusion matrix is not tp=15 fp=5 fn=5 tn=15");
        require(std::fabs(layer.report.acc - 0.75) <= 1e-12, name + ": accuracy is not 0.75");
        require(std::fabs(layer.report.mcc - 0.5) <= 1e-9, name + ": mcc is not 0.5");
        require(layer.report.n_parse_failures == 0, name + ": unexpected parse failures");

        // Independent tally straight off the persisted predictions.
        ConfusionMatrix tally;
        auto rows = load_predictions(layer.predictions_path);
        require(rows.size() == 40, name + ": expected 40 persisted predictions");
        for (const auto& row : rows) {
            const bool gold_rise = row.gold == Direction::Rise;
            const bool predicted_rise =
                row.predicted.has_value() ? *row.predicted == Direction::Rise : !gold_rise;
            if (gold_rise && predicted_rise) ++tally.tp;
            else if (!gold_rise && predicted_rise) ++tally.fp;
            else if (gold_rise) ++tally.fn;
            else ++tally.tn;
        }
        require(tally == artifacts.data.expected,
                name + ": persisted predictions re-tally differently");

        const ReportSummary summary = load_report_json(layer.report_path);
        require(std::fabs(summary.acc - 0.75) <= 1e-12, name + ": report file accuracy drifted");
        require(std::fabs(summary.mcc - 0.5) <= 1e-9, name + ": report file mcc drifted");
    }

    for (int repeat = 1; repeat < 10; ++repeat) {
        ExperimentConfig config = e2e_config(
            artifacts.tmp.path(), artifacts.tmp.path() / ("out" + std::to_string(repeat)));
        RunResult rerun = run_experiment(config);
        require(rerun.run_id == first.run_id, "run id changed between identical runs");
        for (std::size_t i = 0; i < first.layers.size(); ++i) {
            const std::string name(layer_name(first.layers[i].layer));
            if (testing::read_file(rerun.layers[i].predictions_path) !=
                testing::read_file(first.layers[i].predictions_path))
                throw Failure(name + ": predictions differ on repeat " +
                              std::to_string(repeat));
            if (testing::read_file(rerun.layers[i].bundles_path) !=
                testing::read_file(first.layers[i].bundles_path))
                throw Failure(name + ": bundles differ on repeat " + std::to_string(repeat));
            if (testing::read_file(rerun.layers[i].report_path) !=
                testing::read_file(first.layers[i].report_path))
                throw Failure(name + ": report differs on repeat " + std::to_string(repeat));
        }
    }
}

void ablation_layers_are_bookkept() {
    require(g_e2e != nullptr, "end-to-end artifacts unavailable (previous criterion failed)");
    const auto& first = g_e2e->first;

    // One bundle line per record per layer, keyed for cross-layer compare.
    auto load_bundles = [](const fs::path& path) {
        std::map<std::pair<std::string, std::string>, json> bundles;
        std::istringstream in(testing::read_file(path));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json row = json::parse(line);
            // Key first: the assignment moves the row out.
            std::pair<std::string, std::string> key{row.at("ticker").get<std::string>(),
                                                    row.at("date").get<std::string>()};
            bundles[std::move(key)] = std::move(row);
        }
        return bundles;
    };

    auto price = load_bundles(first.layers[0].bundles_path);
    auto factor = load_bundles(first.layers[1].bundles_path);
    auto full = load_bundles(first.layers[2].bundles_path);
    require(price.size() == 40 && factor.size() == 40 && full.size() == 40,
            "each layer must bundle all 40 records");

    int peers_asked = 0;
    for (const auto& [key, bundle] : price) {
        require(bundle.at("relation_prompts").empty() &&
                    bundle.at("factor_prompt").get<std::string>().empty(),
                "price-only bundles must not contain factor or relation prompts");
        const std::string prompt = bundle.at("price_prompt").get<std::string>();
        require(prompt.find("These are the main factors") == std::string::npos &&
                    prompt.find("These are the connections") == std::string::npos,
                "price-only prompt leaked factor or relation blocks");

        const json& f = factor.at(key);
        require(!f.at("factor_prompt").get<std::string>().empty(),
                "factor-layer bundle is missing its factor prompt");
        require(f.at("relation_prompts").empty(),
                "factor-layer bundle must not ask about relations");
        require(f.at("price_prompt").get<std::string>().find("These are the main factors") !=
                    std::string::npos,
                "factor-layer prompt is missing the factors block");

        const json& r = full.at(key);
        require(r.at("factor_prompt") == f.at("factor_prompt"),
                "factor prompt changed between the factor and relation layers");
        const bool asked = !r.at("relation_prompts").empty();
        const bool quoted =
            r.at("price_prompt").get<std::string>().find("These are the connections") !=
            std::string::npos;
        require(asked == quoted,
                "relation answers must appear in the prompt exactly when peers were asked");
        peers_asked += asked ? 1 : 0;
    }
    // Every fifth fixture record mentions the peer company.
    require(peers_asked == 8, "expected 8 records with relation prompts, saw " +
                                  std::to_string(peers_asked));

    require(first.layers[0].report.label != first.layers[1].report.label &&
                first.layers[1].report.label != first.layers[2].report.label,
            "layer reports must be labeled distinctly");
}

void movement_labels_match_pairwise_oracle() {
    std::mt19937_64 gen(8675309);
    std::uniform_int_distribution<int> len_dist(2, 50);
    std::uniform_int_distribution<int> step(-2, 2);
    for (int trial = 0; trial < 1000; ++trial) {
        PriceWindow w;
        double close = 40.0;
        Date day(2019, 1, 2);
        const int n = len_dist(gen);
        for (int i = 0; i < n; ++i) {
            w.dates.push_back(day);
            w.closes.push_back(close);
            day = day + 1;
            close += step(gen);
        }
        MovementWindow moves = label_movements(w);
        if (moves.size() != w.size() - 1)
            throw Failure("movement count mismatch on trial " + std::to_string(trial));
        for (std::size_t i = 0; i + 1 < w.size(); ++i) {
            const Direction want =
                w.closes[i + 1] > w.closes[i] ? Direction::Rise : Direction::Fall;
            if (moves.moves[i] != want || moves.dates[i] != w.dates[i + 1])
                throw Failure("movement label mismatch on trial " + std::to_string(trial));
        }
    }
}

void datasets_ingest_with_exact_counts() {
    const char* data_root = std::getenv("LLMFACTOR_DATA_ROOT");
    if (data_root && *data_root) {
        int verified = 0;
        for (const char* key : {"stocknet", "cmin-us", "cmin-cn", "edt"}) {
            const fs::path root = fs::path(data_root) / key;
            if (!fs::exists(root)) continue;
            const DatasetManifest manifest = DatasetManifest::preset(key);
            long long emitted = 0;
            load_dataset(manifest, root, {}, 5, [&](DatasetRecord&&) { ++emitted; });
            if (emitted != manifest.record_count)
                throw Failure(std::string(key) + ": emitted " + std::to_string(emitted) +
                              " records, expected " + std::to_string(manifest.record_count));
            ++verified;
        }
        if (verified > 0) return;
        // Fall through to the bundled fixture when the root has no corpora.
    }

    testing::TempDir tmp;
    testing::StocknetMini mini = testing::write_stocknet_mini(tmp.path() / "stocknet");
    auto registry = load_stock_registry(mini.registry);
    std::vector<DatasetRecord> records;
    LoadStats stats =
        load_dataset(DatasetManifest::preset("stocknet"), mini.root, registry, 5,
                     [&](DatasetRecord&& r) { records.push_back(std::move(r)); });
    require(stats.emitted == 5, "mini corpus must emit 5 records");
    require(stats.skipped_no_news == 1, "mini corpus must skip 1 newsless day");
    require(stats.skipped_no_history == 2, "mini corpus must skip 2 underprovisioned days");
    require(records.size() == 5, "sink did not receive every record");
    for (std::size_t i = 0; i < records.size(); ++i) {
        require(records[i].target_date == mini.record_dates[i],
                "record dates drifted from the fixture");
        require(records[i].gold == mini.golds[i], "gold labels drifted from the fixture");
        require(records[i].history.size() == 6, "history window must hold t+1 closes");
    }
}

void live_backend_answers() {
    const char* flag = std::getenv("LLMFACTOR_LIVE_SMOKE");
    if (!flag || std::string(flag) != "1")
        throw Skip("set LLMFACTOR_LIVE_SMOKE=1 and LLMFACTOR_LIVE_ENDPOINT to enable");
    const char* endpoint = std::getenv("LLMFACTOR_LIVE_ENDPOINT");
    if (!endpoint || !*endpoint) throw Skip("LLMFACTOR_LIVE_ENDPOINT is not set");

    BackendConfig config;
    config.kind = BackendKind::Remote;
    config.endpoint_url = endpoint;
    if (const char* model = std::getenv("LLMFACTOR_LIVE_MODEL")) config.model_id = model;
    RemoteBackend backend(config);
    CompletionResult r = backend.complete(kSystemPreamble,
                                          "Reply with the single word rise or fall.");
    require(!r.text.empty(), "live backend returned an empty completion");
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<void()> run;
        double budget_s;
    };
    const std::vector<Criterion> criteria = {
        {"metrics agree with an exact integer oracle", metrics_match_exact_oracle, 1.0},
        {"metrics hit the hand-computed reference point", metrics_reference_point, 1.0},
        {"prompts are byte-identical to the golden set", prompts_match_golden_bytes, 1.0},
        {"keyphrase scores match an independent oracle", keyphrase_scores_match_oracle, 1.0},
        {"offline end-to-end run is exact and deterministic",
         offline_run_is_exact_and_deterministic, 10.0},
        {"ablation layers are bookkept separately", ablation_layers_are_bookkept, 10.0},
        {"movement labels match the pairwise oracle", movement_labels_match_pairwise_oracle,
         1.0},
        {"datasets ingest with exact counts", datasets_ingest_with_exact_counts, 60.0},
        {"a live backend answers a smoke prompt", live_backend_answers, 60.0},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string verdict = "PASS";
        std::string detail;
        try {
            criterion.run();
        } catch (const Skip& s) {
            verdict = "SKIP";
            detail = s.what();
        } catch (const std::exception& e) {
            verdict = "FAIL";
            detail = e.what();
            ++failures;
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (verdict == "PASS" && elapsed > criterion.budget_s) {
            verdict = "FAIL";
            detail = "exceeded " + std::to_string(criterion.budget_s) + "s budget";
            ++failures;
        }
        std::printf("%s  %-52s (%.2fs)%s%s\n", verdict.c_str(), criterion.name, elapsed,
                    detail.empty() ? "" : " - ", detail.c_str());
    }

    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
