#include "llmfactor/skgp.hpp"

#include "llmfactor/errors.hpp"

namespace llmfactor {

namespace {

std::string utf8_prefix(std::string_view s, std::size_t max_bytes) {
    if (s.size() <= max_bytes) return std::string(s);
    std::size_t cut = max_bytes;
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    return std::string(s.substr(0, cut));
}

}  // namespace

std::string_view layer_name(Layer layer) {
    switch (layer) {
        case Layer::PriceOnly: return "price";
        case Layer::PlusFactor: return "price+factor";
        case Layer::PlusFactorRelation: return "price+factor+relation";
    }
    return "price";
}

std::string_view layer_slug(Layer layer) {
    switch (layer) {
        case Layer::PriceOnly: return "price";
        case Layer::PlusFactor: return "price_factor";
        case Layer::PlusFactorRelation: return "price_factor_relation";
    }
    return "price";
}

std::optional<Layer> layer_from_name(std::string_view name) {
    if (name == "price") return Layer::PriceOnly;
    if (name == "price+factor" || name == "price_factor") return Layer::PlusFactor;
    if (name == "price+factor+relation" || name == "price_factor_relation")
        return Layer::PlusFactorRelation;
    return std::nullopt;
}

std::string concatenate_news(const std::vector<NewsItem>& news) {
    std::string blob;
    for (const NewsItem& item : news) {
        if (!blob.empty()) blob += "\n\n";
        blob += item.text;
    }
    return blob;
}

std::pair<PromptBundle, PredictionRecord> run_skgp(const DatasetRecord& record,
                                                   const StockMatcher& matcher,
                                                   const PromptTemplateSet& templates,
                                                   LlmBackend& backend,
                                                   const SkgpOptions& options) {
    if (options.k < 1) throw ConfigError("k must be at least 1");
    if (record.news.empty())
        throw IngestError("record " + record.target.ticker + "@" +
                          record.target_date.to_string() + " has no news");

    PromptBundle bundle;
    bundle.ticker = record.target.ticker;
    bundle.date = record.target_date;
    bundle.layer = options.layer;

    PredictionRecord prediction;
    prediction.ticker = record.target.ticker;
    prediction.date = record.target_date;
    prediction.model_id = backend.model_id();

    std::string news_blob = concatenate_news(record.news);
    if (news_blob.size() > options.news_char_budget) {
        news_blob = utf8_prefix(news_blob, options.news_char_budget);
        bundle.news_truncated = true;
    }

    // Relation and factor prompts talk about the company by name; the price
    // prompt uses the ticker, matching how the history lines are keyed.
    const std::string& company = record.target.company;
    const std::string& ticker = record.target.ticker;

    std::vector<std::string> relation_sentences;
    std::vector<std::string> factor_texts;
    try {
        if (options.layer == Layer::PlusFactorRelation) {
            MatchResult matches = matcher.match(news_blob, record.target);
            for (const StockEntry& peer : matches.matched) {
                bundle.relation_prompts.push_back(
                    render_relation_prompt(templates, company, peer.company));
                CompletionResult reply =
                    backend.complete(kSystemPreamble, bundle.relation_prompts.back());
                bundle.relation_responses.push_back(reply.text);
                // The raw sentence is what the prediction prompt gets; the
                // parsed phrase is kept for downstream analysis.
                relation_sentences.push_back(reply.text);
                if (auto parsed = parse_relation(reply.text, templates.language)) {
                    prediction.relations.push_back({record.target, peer,
                                                    parsed->relation_text, reply.text,
                                                    parsed->low_confidence});
                }
            }
        }

        if (options.layer != Layer::PriceOnly) {
            bundle.factor_prompt =
                render_factor_prompt(templates, company, options.k, news_blob);
            CompletionResult reply = backend.complete(kSystemPreamble, bundle.factor_prompt);
            bundle.factor_response = reply.text;
            prediction.factors = parse_factors(reply.text, options.k, templates.language);
            if (prediction.factors) factor_texts = prediction.factors->factors;
        }

        MovementWindow window;
        if (record.history.closes.size() >= 2) window = label_movements(record.history);
        bundle.price_prompt = render_price_prompt(templates, ticker, window,
                                                  record.target_date, factor_texts,
                                                  relation_sentences);
        CompletionResult reply = backend.complete(kSystemPreamble, bundle.price_prompt);
        bundle.price_response = reply.text;

        if (auto parsed = parse_direction(reply.text, templates.language)) {
            prediction.direction = parsed->direction;
            prediction.rationale = std::move(parsed->rationale);
        } else {
            prediction.direction = std::nullopt;
            prediction.rationale = reply.text;  // keep the raw tail for audit
        }
    } catch (const BackendError& e) {
        bundle.backend_error = e.what();
        prediction.direction = std::nullopt;
        prediction.rationale = std::string("backend error: ") + e.what();
    }

    return {std::move(bundle), std::move(prediction)};
}

}  // namespace llmfactor
