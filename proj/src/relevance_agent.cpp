#include "priceaudit/relevance_agent.hpp"

#include <sstream>
#include <unordered_map>

#include "priceaudit/product_text.hpp"

namespace priceaudit {

using nlohmann::json;

std::string to_string(Relevance relevance) {
    return relevance == Relevance::Relevant ? "Relevant" : "Irrelevant";
}

const std::string& relevance_system_prompt() {
    static const std::string prompt = R"(You are a pricing relevance expert. Determine if a neighbor product is relevant for analyzing the target product's pricing strategy and market positioning.

Categories:
- "Relevant": Products that customers would directly compare prices for when making purchasing decisions. These are direct substitutes, very similar products, or products that serve the same primary use case and would influence purchasing decisions.
- "Irrelevant": Products that provide no meaningful pricing context or comparison value. This includes products in different categories, different price tiers, or serving different primary needs.

Consider these factors:
- Would customers compare prices between these products when making a purchase decision?
- Do they serve the same primary use case or need?
- Are they direct substitutes or close alternatives?
- Would one product's pricing directly influence the other's market positioning?

Use a stricter standard than typical relevance assessment - only classify as "Relevant" if the products are direct competitors that customers would actively compare.

Format your response as a JSON object with two fields:
1. 'explanation': Your detailed reasoning for the pricing relevance classification (limit to 50 words maximum)
2. 'relevance': Must be exactly "Relevant" or "Irrelevant"

Example response:
{
    "explanation": "Both are premium wireless headphones in the same price range that customers would directly compare when choosing between brands for identical use cases.",
    "relevance": "Relevant"
})";
    return prompt;
}

ChatRequest build_relevance_prompt(const Product& target, const Product& neighbor) {
    ChatRequest request;
    request.system_prompt = relevance_system_prompt();
    request.user_message = render_product_block("TARGET PRODUCT", target) + "\n" +
                           render_product_block("NEIGHBOR PRODUCT", neighbor);
    return request;
}

std::size_t word_count(const std::string& text) {
    std::istringstream in(text);
    std::string word;
    std::size_t count = 0;
    while (in >> word)
        ++count;
    return count;
}

RelevanceVerdict classify_neighbor(Gateway& gateway, const Product& target, const Product& neighbor,
                                   ChatUsage* usage) {
    RelevanceVerdict verdict;
    verdict.neighbor_id = neighbor.id;

    std::string failure;
    try {
        const ChatResponse response = gateway.complete(build_relevance_prompt(target, neighbor));
        if (usage)
            usage->record(response);
        const json reply = extract_json(response.text);
        const std::string relevance = reply.at("relevance").get<std::string>();
        if (relevance == "Relevant")
            verdict.relevance = Relevance::Relevant;
        else if (relevance == "Irrelevant")
            verdict.relevance = Relevance::Irrelevant;
        else
            throw GatewayError("relevance value '" + relevance + "' is not in the enum");
        verdict.explanation = reply.value("explanation", std::string{});
        if (verdict.explanation.empty())
            verdict.explanation = "(no explanation given)";
        verdict.explanation_overlong = word_count(verdict.explanation) > 50;
        return verdict;
    } catch (const json::exception& e) {
        failure = e.what();
    } catch (const ConfigError&) {
        throw; // misconfiguration aborts the run, never a quiet exclusion
    } catch (const RetriesExhaustedError& e) {
        failure = e.what();
        if (usage) {
            usage->attempts = e.attempts;
            usage->tokens_reported = false;
            usage->call_failed = true;
        }
    } catch (const GatewayError& e) {
        failure = e.what();
        if (usage)
            usage->call_failed = true;
    }

    verdict.relevance = Relevance::Irrelevant;
    verdict.parse_failure = true;
    verdict.explanation = "parse-failure: " + failure;
    return verdict;
}

std::vector<std::string> filter_relevant(const std::vector<RelevanceVerdict>& verdicts,
                                         const std::vector<NeighborCandidate>& candidates) {
    std::unordered_map<std::string, const RelevanceVerdict*> by_id;
    for (const auto& v : verdicts)
        by_id.emplace(v.neighbor_id, &v);

    std::vector<std::string> relevant;
    for (const auto& candidate : candidates) {
        auto it = by_id.find(candidate.product_id);
        if (it == by_id.end())
            throw GatewayError("no relevance verdict for candidate '" + candidate.product_id + "'");
        if (it->second->relevance == Relevance::Relevant)
            relevant.push_back(candidate.product_id);
    }
    return relevant;
}

} // namespace priceaudit
