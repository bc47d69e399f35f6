#include "priceaudit/decision_engine.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "priceaudit/product_text.hpp"

namespace priceaudit {

using nlohmann::json;

void PaddingConfig::validate() const {
    if (price_padding < 0.0 || price_padding >= 1.0 || !std::isfinite(price_padding))
        throw std::invalid_argument("price_padding must lie in [0, 1), got " +
                                    std::to_string(price_padding));
    if (utility_padding < 0)
        throw std::invalid_argument("utility_padding must be nonnegative");
}

std::string to_string(Zone zone) {
    switch (zone) {
    case Zone::AP: return "AP";
    case Zone::NOT_AP: return "NOT_AP";
    case Zone::TRADEOFF: return "TRADEOFF";
    case Zone::UNINFORMATIVE: return "UNINFORMATIVE";
    }
    return "UNINFORMATIVE";
}

std::string to_string(Strategy strategy) {
    return strategy == Strategy::Veto ? "veto" : "voting";
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "veto") return Strategy::Veto;
    if (name == "voting") return Strategy::Voting;
    throw std::invalid_argument("unknown strategy '" + name + "'");
}

std::string to_string(VerdictOutcome verdict) {
    switch (verdict) {
    case VerdictOutcome::Yes: return "Yes";
    case VerdictOutcome::No: return "No";
    case VerdictOutcome::Unsure: return "Unsure";
    }
    return "Unsure";
}

Zone classify_zone(double rel_gap, int net_utility, const PaddingConfig& padding) {
    padding.validate();
    const bool better = net_utility > padding.utility_padding;
    const bool worse = net_utility < -padding.utility_padding;
    const bool similar = !better && !worse;

    if (!worse && rel_gap >= padding.price_padding)
        return Zone::AP;
    if (worse && rel_gap <= 0.0)
        return Zone::NOT_AP;
    if (similar && std::abs(rel_gap) < padding.price_padding)
        return Zone::TRADEOFF;
    return Zone::UNINFORMATIVE;
}

QuadrantPoint make_point(const std::string& neighbor_id, double target_price,
                         double neighbor_price, int net_utility, const PaddingConfig& padding) {
    if (!(target_price > 0.0) || !(neighbor_price > 0.0))
        throw std::invalid_argument("quadrant points need positive prices");
    QuadrantPoint point;
    point.neighbor_id = neighbor_id;
    point.rel_gap = (target_price - neighbor_price) / target_price;
    point.net_utility = net_utility;
    point.zone = classify_zone(point.rel_gap, net_utility, padding);
    return point;
}

EvidenceCounts count_zones(std::span<const QuadrantPoint> points) {
    EvidenceCounts counts;
    for (const auto& point : points) {
        switch (point.zone) {
        case Zone::AP: ++counts.ap; break;
        case Zone::NOT_AP: ++counts.not_ap; break;
        case Zone::TRADEOFF: ++counts.tradeoff; break;
        case Zone::UNINFORMATIVE: ++counts.uninformative; break;
        }
    }
    return counts;
}

VerdictOutcome verdict_from_counts(Strategy strategy, const EvidenceCounts& counts) {
    if (strategy == Strategy::Veto) {
        if (counts.not_ap >= 1)
            return VerdictOutcome::No;
        if (counts.ap >= 1)
            return VerdictOutcome::Yes;
        return VerdictOutcome::Unsure;
    }
    if (counts.ap >= 1 && counts.ap >= counts.not_ap)
        return VerdictOutcome::Yes;
    if (counts.not_ap >= 1)
        return VerdictOutcome::No;
    return VerdictOutcome::Unsure;
}

namespace {

std::string join_ids(std::span<const QuadrantPoint> points, Zone zone, std::size_t limit = 3) {
    std::ostringstream out;
    std::size_t shown = 0, total = 0;
    for (const auto& point : points) {
        if (point.zone != zone)
            continue;
        ++total;
        if (shown < limit) {
            out << (shown ? ", " : "") << point.neighbor_id;
            ++shown;
        }
    }
    std::string ids = out.str();
    if (total > shown)
        ids += ", +" + std::to_string(total - shown) + " more";
    return ids;
}

Decision build_decision(Strategy strategy, std::span<const QuadrantPoint> points) {
    Decision decision;
    decision.strategy = strategy;
    decision.evidence = count_zones(points);
    decision.verdict = verdict_from_counts(strategy, decision.evidence);

    std::ostringstream why;
    const auto& counts = decision.evidence;
    switch (decision.verdict) {
    case VerdictOutcome::No:
        why << "Worse-and-pricier neighbor(s) [" << join_ids(points, Zone::NOT_AP) << "] ";
        why << (strategy == Strategy::Veto ? "veto the outlier hypothesis"
                                           : "outweigh the anomaly-zone evidence");
        why << " (AP=" << counts.ap << ", NOT_AP=" << counts.not_ap << ").";
        break;
    case VerdictOutcome::Yes:
        why << "Cheaper similar-or-better neighbor(s) [" << join_ids(points, Zone::AP) << "] ";
        why << (strategy == Strategy::Veto
                    ? "support an anomalously high price with no evidence against"
                    : "match or outnumber the evidence against");
        why << " (AP=" << counts.ap << ", NOT_AP=" << counts.not_ap << ").";
        break;
    case VerdictOutcome::Unsure:
        why << "No neighbor falls in an informative zone (trade-off=" << counts.tradeoff
            << ", uninformative=" << counts.uninformative << ").";
        break;
    }
    decision.explanation = why.str();
    return decision;
}

} // namespace

Decision decide_veto(std::span<const QuadrantPoint> points) {
    return build_decision(Strategy::Veto, points);
}

Decision decide_voting(std::span<const QuadrantPoint> points) {
    return build_decision(Strategy::Voting, points);
}

Decision decide(Strategy strategy, std::span<const QuadrantPoint> points) {
    return build_decision(strategy, points);
}

const std::string& decision_system_prompt() {
    static const std::string prompt = R"PROMPT(You are a pricing analysis expert. Determine if the target product is anomalous priced.
SIMPLE DECISION RULES:
1. If NO evidence FOR anomalous pricing but ANY evidence AGAINST → "No"
2. If evidence FOR anomalous pricing but NO evidence AGAINST → evaluate strength
3. If both types exist → weigh the evidence (prioritize threshold-meeting items)
4. The HEAVILY "for" or "against" far outweighs the just "against" anomalous pricing as those regions are highly price informative.
DECISION CRITERIA:
- "Yes": Evidence target is overpriced
- "No": Evidence shows pricing is justified
- "Unsure": Insufficient or conflicting evidence
Format response as JSON: {"explanation": "reasoning (80 words max)", "decision": "Yes/No/Unsure"})PROMPT";
    return prompt;
}

namespace {

std::string render_evidence(Strategy strategy, std::span<const QuadrantPoint> points,
                            double target_price) {
    std::ostringstream out;
    out << "STRATEGY: " << to_string(strategy) << "\n";
    out << "TARGET PRICE: " << format_price(target_price) << "\n";
    if (points.empty()) {
        out << "EVIDENCE POINTS: none\n";
        return out.str();
    }
    out << "EVIDENCE POINTS:\n";
    char buf[32];
    for (const auto& point : points) {
        std::snprintf(buf, sizeof(buf), "%.4f", point.rel_gap);
        out << "- neighbor: " << point.neighbor_id << " | zone: " << to_string(point.zone)
            << " | rel_gap: " << buf << " | net_utility: " << point.net_utility << "\n";
    }
    out << "Zone legend: AP = similar-or-better utility and cheaper beyond the price padding "
           "(evidence FOR overpricing); NOT_AP = worse utility and priced at or above the target "
           "(evidence AGAINST); TRADEOFF and UNINFORMATIVE carry no direct evidence.\n";
    return out.str();
}

} // namespace

Decision llm_decide(Gateway& gateway, Strategy fallback, std::span<const QuadrantPoint> points,
                    double target_price, ChatUsage* usage) {
    ChatRequest request;
    request.system_prompt = decision_system_prompt();
    request.user_message = render_evidence(fallback, points, target_price);

    std::string failure;
    try {
        const ChatResponse response = gateway.complete(request);
        if (usage)
            usage->record(response);
        const json reply = extract_json(response.text);
        const std::string value = reply.at("decision").get<std::string>();
        Decision decision;
        if (value == "Yes")
            decision.verdict = VerdictOutcome::Yes;
        else if (value == "No")
            decision.verdict = VerdictOutcome::No;
        else if (value == "Unsure")
            decision.verdict = VerdictOutcome::Unsure;
        else
            throw GatewayError("decision value '" + value + "' is not in the enum");
        decision.explanation = reply.value("explanation", std::string{});
        decision.strategy = fallback;
        decision.evidence = count_zones(points);
        decision.llm_generated = true;
        return decision;
    } catch (const json::exception& e) {
        failure = e.what();
    } catch (const ConfigError&) {
        throw;
    } catch (const GatewayError& e) {
        failure = e.what();
        if (usage)
            usage->call_failed = true;
    }

    Decision decision = decide(fallback, points);
    decision.llm_fallback = true;
    decision.explanation += " [llm reply unusable (" + failure + "); deterministic " +
                            to_string(fallback) + " rule applied]";
    return decision;
}

const std::string& padding_system_prompt() {
    static const std::string prompt =
        R"PROMPT(You are a pricing sensitivity expert. Given a target product and the prices of its relevant neighbor products, propose the minimum percentage price difference (price padding) below the target price that should count as evidence of an anomalously high price. A larger padding reduces false positives at the cost of more false negatives.
Format response as JSON: {"explanation": "reasoning (50 words max)", "padding": <number, percent if greater than 1, fraction otherwise>})PROMPT";
    return prompt;
}

PaddingProposal propose_padding(Gateway& gateway, const Product& target,
                                std::span<const NeighborSummary> neighbors, ChatUsage* usage) {
    std::ostringstream message;
    message << render_product_block("TARGET PRODUCT", target);
    if (neighbors.empty()) {
        message << "RELEVANT NEIGHBOR PRICES: none\n";
    } else {
        message << "RELEVANT NEIGHBOR PRICES:\n";
        for (const auto& neighbor : neighbors)
            message << "- id: " << neighbor.neighbor_id << " | price: " << format_price(neighbor.price)
                    << " | net_utility: " << neighbor.net_utility << "\n";
    }

    ChatRequest request;
    request.system_prompt = padding_system_prompt();
    request.user_message = message.str();

    PaddingProposal proposal;
    double value = 0.0;
    bool parsed = false;
    try {
        const ChatResponse response = gateway.complete(request);
        if (usage)
            usage->record(response);
        try {
            const json reply = extract_json(response.text);
            for (const char* key : {"padding", "padding_percent", "price_padding"}) {
                if (reply.contains(key)) {
                    value = reply[key].is_number() ? reply[key].get<double>()
                                                   : std::stod(reply[key].get<std::string>());
                    parsed = true;
                    break;
                }
            }
        } catch (const GatewayError&) {
            // No JSON object: accept a bare number anywhere in the text.
            const std::string& text = response.text;
            for (std::size_t i = 0; i < text.size() && !parsed; ++i) {
                if (std::isdigit(static_cast<unsigned char>(text[i])) ||
                    (text[i] == '.' && i + 1 < text.size() &&
                     std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
                    char* end = nullptr;
                    value = std::strtod(text.c_str() + i, &end);
                    parsed = end != text.c_str() + i;
                }
            }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const GatewayError& e) {
        proposal.note = std::string("padding proposal failed (") + e.what() + ")";
        if (usage)
            usage->call_failed = true;
    }

    if (!parsed || !std::isfinite(value)) {
        proposal.fraction = 0.50;
        proposal.fallback = true;
        if (proposal.note.empty())
            proposal.note = "padding reply unparsable";
        proposal.note += "; default 0.50 applied";
        return proposal;
    }

    if (value > 1.0)
        value /= 100.0; // percent form
    if (value < 0.10 || value > 0.90) {
        proposal.clamped = true;
        const double clamped = std::clamp(value, 0.10, 0.90);
        proposal.note = "proposed padding " + std::to_string(value) + " clamped to " +
                        std::to_string(clamped);
        value = clamped;
    }
    proposal.fraction = value;
    return proposal;
}

} // namespace priceaudit
