#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "priceaudit/llm_gateway.hpp"
#include "priceaudit/product.hpp"

namespace priceaudit {

/// The four attribute-selection configurations of the utility stage.
enum class AttributeModeKind { Generic, StaticCategory, Dynamic, WeightedDynamic };

std::string to_string(AttributeModeKind kind);
AttributeModeKind attribute_mode_from_string(const std::string& name);

struct AttributeMode {
    AttributeModeKind mode = AttributeModeKind::Generic;
    int top_n = 5; // Dynamic/WeightedDynamic; minimum 3
    std::map<std::string, std::vector<std::string>> static_table; // StaticCategory

    void validate() const;
};

/// Loads the static category->attributes table from a line-delimited file
/// of {"category": ..., "attributes": [...]} records.
std::map<std::string, std::vector<std::string>> load_static_table(const std::string& path);

enum class ComparisonVerdict { Better, Worse, Same, Mixed };

std::string to_string(ComparisonVerdict verdict);

struct AttributeComparison {
    std::string attribute;
    ComparisonVerdict verdict = ComparisonVerdict::Same;
    int weight = 1; // in [1,3]; meaningful for scoring only in WeightedDynamic
};

/// Stage (ii) output for one relevant neighbor.
struct UtilityReport {
    std::string neighbor_id;
    std::vector<AttributeComparison> comparisons;
    int net_utility = 0;
    AttributeModeKind mode = AttributeModeKind::Generic;
    int top_n = 5;
    bool degenerate = false; // no shared attribute information
    bool valid = true;       // false: reply unusable, neighbor excluded downstream
    std::string invalid_reason;
};

/// Builds the comparison request for the configured mode. StaticCategory
/// throws when the target's category has no table entry.
ChatRequest build_utility_prompt(const AttributeMode& mode, const Product& target,
                                 const Product& neighbor);

/// Runs one target/neighbor comparison through the backend, validating
/// verdicts and clamping weights into [1,3]. Unusable replies yield an
/// invalid report instead of an exception.
UtilityReport compare_pair(Gateway& gateway, const AttributeMode& mode, const Product& target,
                           const Product& neighbor, ChatUsage* usage = nullptr);

/// better -> +1, worse -> -1, same/mixed -> 0; plain sum, or the
/// weight-multiplied sum when `weighted`.
int net_utility(std::span<const AttributeComparison> comparisons, bool weighted);

} // namespace priceaudit
