#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "llmfactor/date.hpp"
#include "llmfactor/domain.hpp"

namespace llmfactor {

// The prompt texts for one experiment, with {placeholder} slots. A set is
// complete for one language; individual pieces can be overridden from a
// template file.
struct PromptTemplateSet {
    Language language = Language::EN;

    std::string relation_template;   // {target}, {peer}
    std::string factor_template;     // {target}, {k}; news text is appended
    std::string price_preamble;      // fixed instruction line
    std::string factors_block;       // {factors}
    std::string relations_block;     // {relations}
    std::string time_line;           // {date}, {target}, {movement}
    std::string conclusion_line;     // {date}, {target}

    std::string movement_rise;       // past-tense word used in time lines
    std::string movement_fall;

    // Built-in texts. factor_variant selects between the equivalent factor
    // instruction phrasings (0 is the default wording).
    static PromptTemplateSet defaults(Language language, int factor_variant = 0);

    // Starts from defaults(language, factor_variant) and overrides any
    // section present in the file. Throws TemplateError on unknown sections
    // or missing placeholders.
    static PromptTemplateSet load_file(const std::filesystem::path& path,
                                       Language language,
                                       int factor_variant = 0);
};

// Number of built-in factor instruction phrasings per language.
inline constexpr int kFactorVariantCount = 3;

std::string render_relation_prompt(const PromptTemplateSet& templates,
                                   std::string_view target,
                                   std::string_view peer);

std::string render_factor_prompt(const PromptTemplateSet& templates,
                                 std::string_view target,
                                 int k,
                                 std::string_view news_text);

// Builds the final prediction prompt: preamble, optional factor and relation
// blocks, one line per historical movement, then the fill-in conclusion.
// Empty factor/relation lists omit their blocks; an empty window (no price
// history available) omits the movement lines.
std::string render_price_prompt(const PromptTemplateSet& templates,
                                std::string_view target,
                                const MovementWindow& window,
                                Date target_date,
                                const std::vector<std::string>& factors,
                                const std::vector<std::string>& relations);

}  // namespace llmfactor
