#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "llmfactor/backend.hpp"
#include "llmfactor/date.hpp"
#include "llmfactor/domain.hpp"
#include "llmfactor/ingest.hpp"
#include "llmfactor/matcher.hpp"
#include "llmfactor/parse.hpp"
#include "llmfactor/templates.hpp"

namespace llmfactor {

// Which knowledge the prediction prompt receives, mirroring the ablation
// rows: price history alone, plus extracted factors, plus company relations.
enum class Layer { PriceOnly, PlusFactor, PlusFactorRelation };

std::string_view layer_name(Layer layer);        // "price+factor" style, for display
std::string_view layer_slug(Layer layer);        // "price_factor" style, for file names
std::optional<Layer> layer_from_name(std::string_view name);

struct RelationFinding {
    StockEntry target;
    StockEntry peer;
    std::string relation_text;
    std::string raw_response;
    bool low_confidence = false;
};

// Verbatim prompts and responses of every stage that ran for one record.
struct PromptBundle {
    std::string ticker;
    Date date;
    Layer layer = Layer::PriceOnly;
    std::vector<std::string> relation_prompts;
    std::vector<std::string> relation_responses;
    std::string factor_prompt;
    std::string factor_response;
    std::string price_prompt;
    std::string price_response;
    bool news_truncated = false;
    std::string backend_error;  // non-empty when a stage failed after retries
};

struct PredictionRecord {
    std::string ticker;
    Date date;
    std::optional<Direction> direction;  // nullopt: response had no usable answer
    std::string rationale;
    std::optional<FactorSet> factors;
    std::vector<RelationFinding> relations;
    std::string model_id;
};

struct SkgpOptions {
    Layer layer = Layer::PlusFactorRelation;
    int k = 5;
    // News blobs are cut to this many bytes before prompting; the bundle
    // records when that happened.
    std::size_t news_char_budget = 6000;
};

// All of a record's news texts in source order, blank-line separated.
std::string concatenate_news(const std::vector<NewsItem>& news);

// Runs the prompt chain for one record: peer matching and one relation
// prompt per matched peer (full layer only), the factor prompt (skipped for
// price-only), then the prediction prompt. A backend failure stops the chain
// and leaves the record unparsed with the error in the bundle.
std::pair<PromptBundle, PredictionRecord> run_skgp(const DatasetRecord& record,
                                                   const StockMatcher& matcher,
                                                   const PromptTemplateSet& templates,
                                                   LlmBackend& backend,
                                                   const SkgpOptions& options);

}  // namespace llmfactor
