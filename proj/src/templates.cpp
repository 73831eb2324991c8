#include "llmfactor/templates.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "llmfactor/errors.hpp"

namespace llmfactor {

namespace {

void replace_all(std::string& text, std::string_view slot, std::string_view value) {
    std::size_t pos = 0;
    while ((pos = text.find(slot, pos)) != std::string::npos) {
        text.replace(pos, slot.size(), value);
        pos += value.size();
    }
}

std::string fill(std::string_view tmpl,
                 std::initializer_list<std::pair<std::string_view, std::string_view>> slots) {
    std::string out(tmpl);
    for (const auto& [slot, value] : slots) replace_all(out, slot, value);
    return out;
}

void require_placeholders(const std::string& tmpl,
                          std::string_view section,
                          std::initializer_list<std::string_view> slots) {
    for (std::string_view slot : slots) {
        if (tmpl.find(slot) == std::string::npos)
            throw TemplateError("template section '" + std::string(section) +
                                "' is missing placeholder " + std::string(slot));
    }
}

constexpr std::array<std::string_view, 3> kFactorTemplatesEn = {
    "Please extract the top {k} factors that may affect the stock price of {target} "
    "from the following news.",
    "Please identify the primary top {k} factors influencing {target}'s stock price "
    "based on the news provided",
    "Please analyze the provided news and pinpoint the top {k} major factors impacting "
    "the stock price of {target}",
};

constexpr std::array<std::string_view, 3> kFactorTemplatesCn = {
    "请从以下新闻中提取可能影响{target}股价的前{k}个因素。",
    "根据提供的新闻，请识别出影响{target}股价的主要{k}个因素",
    "请分析所提供的新闻并找出影响{target}股价的前{k}个主要因素",
};

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace

PromptTemplateSet PromptTemplateSet::defaults(Language language, int factor_variant) {
    if (factor_variant < 0 || factor_variant >= kFactorVariantCount)
        throw TemplateError("factor variant out of range: " + std::to_string(factor_variant));

    PromptTemplateSet t;
    t.language = language;
    if (language == Language::EN) {
        t.relation_template =
            "Please fill in the blank and return a complete sentence: {target} and {peer} "
            "are most likely in a ___ relationship.";
        t.factor_template = std::string(kFactorTemplatesEn[factor_variant]);
        t.price_preamble =
            "Based on the following information, please judge the direction of the stock "
            "price from rise/fall, fill in the blank and give reasons.";
        t.factors_block =
            "These are the main factors that may affect this stock's price recently: "
            "{factors}.";
        t.relations_block =
            "These are the connections between the companies that have appeared in the "
            "news: {relations}.";
        t.time_line = "On {date}, the stock price of {target} {movement}.";
        t.conclusion_line = "On {date}, the stock price of {target} will ___.";
        t.movement_rise = "rose";
        t.movement_fall = "fell";
    } else {
        t.relation_template = "请填空并返回完整的句子: {target}和{peer}最可能是___关系。";
        t.factor_template = std::string(kFactorTemplatesCn[factor_variant]);
        t.price_preamble = "根据以下信息，请判断股票价格是上涨还是下跌，填写在空白处并给出理由。";
        t.factors_block = "这些是最近可能影响该股票价格的主要因素: {factors}";
        t.relations_block = "这些是新闻中出现过的公司之间的关系: {relations}";
        t.time_line = "在{date}, {target}的股价{movement}。";
        t.conclusion_line = "在{date}, {target}的股价将___。";
        t.movement_rise = "上涨";
        t.movement_fall = "下跌";
    }
    return t;
}

PromptTemplateSet PromptTemplateSet::load_file(const std::filesystem::path& path,
                                               Language language,
                                               int factor_variant) {
    std::ifstream in(path);
    if (!in) throw TemplateError("cannot open template file: " + path.string());

    PromptTemplateSet t = defaults(language, factor_variant);
    std::string* section = nullptr;
    std::string section_name;
    bool first_line_of_section = false;

    auto resolve = [&](const std::string& name) -> std::string* {
        if (name == "relation") return &t.relation_template;
        if (name == "factor") return &t.factor_template;
        if (name == "price_preamble") return &t.price_preamble;
        if (name == "factors_block") return &t.factors_block;
        if (name == "relations_block") return &t.relations_block;
        if (name == "time_line") return &t.time_line;
        if (name == "conclusion") return &t.conclusion_line;
        if (name == "movement_rise") return &t.movement_rise;
        if (name == "movement_fall") return &t.movement_fall;
        return nullptr;
    };

    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.size() >= 2 && line.front() == '[' && line.back() == ']') {
            section_name = line.substr(1, line.size() - 2);
            section = resolve(section_name);
            if (!section)
                throw TemplateError("unknown template section '" + section_name + "' in " +
                                    path.string());
            section->clear();
            first_line_of_section = true;
            continue;
        }
        if (!section) {
            // Text before any section header: only blank lines are allowed.
            if (!line.empty())
                throw TemplateError("template file must start with a [section] header: " +
                                    path.string());
            continue;
        }
        if (!first_line_of_section) *section += '\n';
        *section += line;
        first_line_of_section = false;
    }

    // Trailing blank lines are separators between sections, not content.
    auto trim_trailing_newlines = [](std::string& s) {
        while (!s.empty() && s.back() == '\n') s.pop_back();
    };
    for (const char* name : {"relation", "factor", "price_preamble", "factors_block",
                             "relations_block", "time_line", "conclusion", "movement_rise",
                             "movement_fall"})
        trim_trailing_newlines(*resolve(name));

    require_placeholders(t.relation_template, "relation", {"{target}", "{peer}"});
    require_placeholders(t.factor_template, "factor", {"{target}", "{k}"});
    require_placeholders(t.factors_block, "factors_block", {"{factors}"});
    require_placeholders(t.relations_block, "relations_block", {"{relations}"});
    require_placeholders(t.time_line, "time_line", {"{date}", "{target}", "{movement}"});
    require_placeholders(t.conclusion_line, "conclusion", {"{date}", "{target}"});
    return t;
}

std::string render_relation_prompt(const PromptTemplateSet& templates,
                                   std::string_view target,
                                   std::string_view peer) {
    return fill(templates.relation_template, {{"{target}", target}, {"{peer}", peer}});
}

std::string render_factor_prompt(const PromptTemplateSet& templates,
                                 std::string_view target,
                                 int k,
                                 std::string_view news_text) {
    std::string prompt =
        fill(templates.factor_template, {{"{target}", target}, {"{k}", std::to_string(k)}});
    prompt += '\n';
    prompt += news_text;
    return prompt;
}

std::string render_price_prompt(const PromptTemplateSet& templates,
                                std::string_view target,
                                const MovementWindow& window,
                                Date target_date,
                                const std::vector<std::string>& factors,
                                const std::vector<std::string>& relations) {
    if (window.dates.size() != window.moves.size())
        throw TemplateError("movement window dates and moves are misaligned");

    std::vector<std::string> lines;
    lines.push_back(templates.price_preamble);
    if (!factors.empty())
        lines.push_back(fill(templates.factors_block, {{"{factors}", join(factors, "; ")}}));
    if (!relations.empty())
        lines.push_back(
            fill(templates.relations_block, {{"{relations}", join(relations, "; ")}}));
    for (std::size_t i = 0; i < window.dates.size(); ++i) {
        const std::string& movement = window.moves[i] == Direction::Rise
                                          ? templates.movement_rise
                                          : templates.movement_fall;
        lines.push_back(fill(templates.time_line, {{"{date}", window.dates[i].to_string()},
                                                   {"{target}", target},
                                                   {"{movement}", movement}}));
    }
    lines.push_back(fill(templates.conclusion_line,
                         {{"{date}", target_date.to_string()}, {"{target}", target}}));
    return join(lines, "\n");
}

}  // namespace llmfactor
