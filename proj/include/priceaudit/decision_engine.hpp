#pragma once

#include <span>
#include <string>
#include <vector>

#include "priceaudit/llm_gateway.hpp"
#include "priceaudit/product.hpp"

namespace priceaudit {

enum class PaddingMode { Fixed, Llm };

/// Sensitivity knobs of the quadrant framework. price_padding is the
/// minimum fractional price gap for anomaly evidence; utility_padding is
/// the half-width of the similar-utility band.
struct PaddingConfig {
    double price_padding = 0.50; // fraction in [0, 1)
    int utility_padding = 0;     // nonnegative
    PaddingMode mode = PaddingMode::Fixed;

    void validate() const;
};

enum class Zone { AP, NOT_AP, TRADEOFF, UNINFORMATIVE };

std::string to_string(Zone zone);

/// One relevant neighbor placed on the quadrant chart.
/// rel_gap = (target_price - neighbor_price) / target_price; positive
/// means the neighbor is cheaper.
struct QuadrantPoint {
    std::string neighbor_id;
    double rel_gap = 0.0;
    int net_utility = 0;
    Zone zone = Zone::UNINFORMATIVE;
};

/// Total zone classification:
///   utility class: BETTER above +utility_padding, WORSE below
///   -utility_padding, SIMILAR inside the band.
///   AP        better-or-similar utility, cheaper by at least price_padding
///   NOT_AP    worse utility, priced at or above the target
///   TRADEOFF  similar utility inside the price band
///   UNINFORMATIVE everything else
Zone classify_zone(double rel_gap, int net_utility, const PaddingConfig& padding);

/// Builds a classified point from prices; both prices must be positive.
QuadrantPoint make_point(const std::string& neighbor_id, double target_price,
                         double neighbor_price, int net_utility, const PaddingConfig& padding);

enum class Strategy { Veto, Voting };

std::string to_string(Strategy strategy);
Strategy strategy_from_string(const std::string& name);

enum class VerdictOutcome { Yes, No, Unsure };

std::string to_string(VerdictOutcome verdict);

struct EvidenceCounts {
    int ap = 0;
    int not_ap = 0;
    int tradeoff = 0;
    int uninformative = 0;
};

EvidenceCounts count_zones(std::span<const QuadrantPoint> points);

struct Decision {
    VerdictOutcome verdict = VerdictOutcome::Unsure;
    std::string explanation;
    Strategy strategy = Strategy::Veto;
    EvidenceCounts evidence;
    bool llm_generated = false;
    bool llm_fallback = false; // LLM reply unusable; deterministic rule applied
};

/// Worse-Pricier Veto: any NOT_AP neighbor forces No; otherwise any AP
/// neighbor yields Yes; no informative evidence yields Unsure.
Decision decide_veto(std::span<const QuadrantPoint> points);

/// Quadrant Voting: Yes when AP neighbors exist and outnumber-or-match
/// NOT_AP ones; otherwise No when NOT_AP evidence exists; else Unsure.
Decision decide_voting(std::span<const QuadrantPoint> points);

Decision decide(Strategy strategy, std::span<const QuadrantPoint> points);

/// Recomputes the verdict a strategy yields from stored evidence counts
/// (audit property: decisions must be reproducible from their evidence).
VerdictOutcome verdict_from_counts(Strategy strategy, const EvidenceCounts& counts);

/// System prompt of the reasoning-based decision agent.
const std::string& decision_system_prompt();

/// Serializes the zone evidence into the decision prompt and lets the
/// backend aggregate it. An unusable reply falls back to the deterministic
/// `fallback` strategy with the fallback recorded on the decision.
Decision llm_decide(Gateway& gateway, Strategy fallback, std::span<const QuadrantPoint> points,
                    double target_price, ChatUsage* usage = nullptr);

/// System prompt used when the price padding itself is delegated to the
/// backend (padding_mode = llm).
const std::string& padding_system_prompt();

struct PaddingProposal {
    double fraction = 0.50;
    bool clamped = false;
    bool fallback = false; // unparsable reply, default applied
    std::string note;
};

/// Price/utility facts about a relevant neighbor, available before any
/// zone exists (padding proposals happen ahead of zone classification).
struct NeighborSummary {
    std::string neighbor_id;
    double price = 0.0;
    int net_utility = 0;
};

/// Asks the backend for a price-padding threshold given the target and
/// the relevant neighbors' prices. Replies above 1 are read as percents;
/// the result is clamped into [0.10, 0.90]. Unparsable replies fall back
/// to 0.50 with a trace note.
PaddingProposal propose_padding(Gateway& gateway, const Product& target,
                                std::span<const NeighborSummary> neighbors,
                                ChatUsage* usage = nullptr);

} // namespace priceaudit
