#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "llmfactor/domain.hpp"

namespace llmfactor {

// Extractors for the three model-response shapes. Each returns nullopt when
// nothing usable can be recovered; low_confidence marks results that came
// from a fallback heuristic rather than the expected answer shape.

struct ExtractedRelation {
    std::string relation_text;  // at most 10 words
    bool low_confidence = false;
};

struct FactorSet {
    int k = 0;
    std::vector<std::string> factors;  // 1..k entries, original order
    std::string raw_response;
    bool low_confidence = false;
};

struct DirectionFinding {
    Direction direction = Direction::Fall;
    std::string rationale;
};

// Pulls the relationship phrase out of a filled-in blank, e.g.
// "... are most likely in a supplier-customer relationship." Falls back to
// the first non-empty line, capped in length.
std::optional<ExtractedRelation> parse_relation(std::string_view response, Language language);

// Collects list items ("1. ...", "- ...", "1、..."), keeping at most k.
// Responses with no list markers contribute their first sentence as a single
// low-confidence factor.
std::optional<FactorSet> parse_factors(std::string_view response, int k, Language language);

// Finds the predicted movement. The filled-in form ("will rise" / "将上涨")
// wins over a bare direction word; among equals the earliest match decides.
// The rationale is whatever text follows the match.
std::optional<DirectionFinding> parse_direction(std::string_view response, Language language);

}  // namespace llmfactor
