#pragma once

#include <string>
#include <vector>

#include "priceaudit/llm_gateway.hpp"
#include "priceaudit/product.hpp"

namespace priceaudit {

enum class Relevance { Relevant, Irrelevant };

std::string to_string(Relevance relevance);

/// Stage (i) output for one candidate neighbor.
struct RelevanceVerdict {
    std::string neighbor_id;
    Relevance relevance = Relevance::Irrelevant;
    std::string explanation;
    bool explanation_overlong = false; // > 50 words; stored intact, flagged
    bool parse_failure = false;        // unusable backend reply; conservative exclusion
};

/// System prompt used for every relevance classification call.
const std::string& relevance_system_prompt();

/// Serializes target and neighbor (title, category, attributes, prices)
/// into a chat request carrying the relevance template.
ChatRequest build_relevance_prompt(const Product& target, const Product& neighbor);

/// Classifies one neighbor. A reply that cannot be parsed or validated
/// never aborts the assessment: the neighbor comes back Irrelevant with a
/// parse-failure reason recorded.
RelevanceVerdict classify_neighbor(Gateway& gateway, const Product& target, const Product& neighbor,
                                   ChatUsage* usage = nullptr);

/// Ids judged Relevant, preserving the candidates' rank order.
/// Every candidate must have a verdict.
std::vector<std::string> filter_relevant(const std::vector<RelevanceVerdict>& verdicts,
                                         const std::vector<NeighborCandidate>& candidates);

/// Whitespace-separated word count (for the 50-word explanation limit).
std::size_t word_count(const std::string& text);

} // namespace priceaudit
