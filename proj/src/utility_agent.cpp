#include "priceaudit/utility_agent.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "priceaudit/product_text.hpp"

namespace priceaudit {

using nlohmann::json;

std::string to_string(AttributeModeKind kind) {
    switch (kind) {
    case AttributeModeKind::Generic: return "generic";
    case AttributeModeKind::StaticCategory: return "static";
    case AttributeModeKind::Dynamic: return "dynamic";
    case AttributeModeKind::WeightedDynamic: return "w-dynamic";
    }
    return "generic";
}

AttributeModeKind attribute_mode_from_string(const std::string& name) {
    if (name == "generic") return AttributeModeKind::Generic;
    if (name == "static") return AttributeModeKind::StaticCategory;
    if (name == "dynamic") return AttributeModeKind::Dynamic;
    if (name == "w-dynamic" || name == "weighted-dynamic") return AttributeModeKind::WeightedDynamic;
    throw std::invalid_argument("unknown attribute mode '" + name + "'");
}

void AttributeMode::validate() const {
    if ((mode == AttributeModeKind::Dynamic || mode == AttributeModeKind::WeightedDynamic) && top_n < 3)
        throw std::invalid_argument("dynamic attribute modes require top_n >= 3, got " +
                                    std::to_string(top_n));
}

std::map<std::string, std::vector<std::string>> load_static_table(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open static attribute table '" + path + "'");
    std::map<std::string, std::vector<std::string>> table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos)
            continue;
        json record;
        try {
            record = json::parse(line);
            std::vector<std::string> names;
            for (const auto& name : record.at("attributes"))
                names.push_back(name.get<std::string>());
            table[record.at("category").get<std::string>()] = std::move(names);
        } catch (const json::exception& e) {
            throw std::runtime_error("static attribute table line " + std::to_string(line_no) +
                                     ": " + e.what());
        }
    }
    return table;
}

std::string to_string(ComparisonVerdict verdict) {
    switch (verdict) {
    case ComparisonVerdict::Better: return "better";
    case ComparisonVerdict::Worse: return "worse";
    case ComparisonVerdict::Same: return "same";
    case ComparisonVerdict::Mixed: return "mixed";
    }
    return "same";
}

namespace {

const char* kResponseFormat =
    "\n\nResponse format (JSON only):\n"
    "{\"comparisons\": [{\"attribute\": \"<name>\", \"verdict\": \"better|worse|same|mixed\", "
    "\"weight\": <1-3>, \"analysis\": \"<reasoning>\"}, ...]}\n"
    "The TARGET PRODUCT in the user message is the BASE PRODUCT for this comparison.";

std::string generic_prompt() {
    return std::string(
               R"(You are a product comparison expert using GENERIC attribute mode.

Compare the two products using these four general price-driving criteria, applicable to all product categories:

- build quality
- features
- brand reputation
- quantity

Your task is to:
1. Compare the two products on ALL four criteria listed above
2. Assign utility scores (1-3) based on importance for this specific comparison
3. Provide detailed analysis for each criterion

For each attribute, specify if the Neighbor PRODUCT is "better", "worse", "same", or "mixed" vs the BASE PRODUCT.

CRITICAL: Return ONLY pure JSON - no markdown code blocks, no explanations, no additional text.)") +
           kResponseFormat;
}

std::string static_prompt(const std::vector<std::string>& attributes) {
    const std::string n = std::to_string(attributes.size());
    std::ostringstream out;
    out << "You are a product comparison expert using STATIC attribute mode.\n\n";
    out << "CRITICAL: You MUST use these EXACT " << n
        << " attributes - NO selection or substitution allowed:\n\n";
    for (const auto& name : attributes)
        out << "- " << name << "\n";
    out << "\nYour task is to:\n";
    out << "1. Compare the two products using ALL " << n << " attributes listed above\n";
    out << "2. Assign utility scores (1-3) based on importance for this specific comparison\n";
    out << "3. Include Brand as a critical comparison with utility = 3 (critical differentiator)\n";
    out << "4. Include Quantity with detailed composition breakdown and utility = 3\n";
    out << "5. Provide detailed analysis for each attribute\n\n";
    out << "For each attribute, specify if the Neighbor PRODUCT is \"better\", \"worse\", \"same\", "
           "or \"mixed\" vs the BASE PRODUCT.\n\n";
    out << "Consider target demographics: bulk buyers, individual consumers, commercial users.\n\n";
    out << "STATIC MODE RULES:\n";
    out << "- You MUST use ALL " << n << " attributes listed above - no exceptions\n";
    out << "- NO selection or generation of different attributes allowed\n";
    out << "- Focus on functional attributes that impact product functionality and user experience\n";
    out << "- Use the exact attribute names as provided above\n\n";
    out << "MANDATORY REQUIREMENTS:\n";
    out << "- Use ALL " << n << " attributes listed above (no selection allowed)\n";
    out << "- Brand must ALWAYS be included as a attribute with utility = 3 (critical differentiator)\n";
    out << "- Quantity must ALWAYS be included with detailed composition breakdown and utility = 3\n\n";
    out << "CRITICAL: Return ONLY pure JSON - no markdown code blocks, no explanations, no "
           "additional text.";
    return out.str() + kResponseFormat;
}

std::string dynamic_prompt(int top_n, bool weighted) {
    std::ostringstream out;
    out << "You are a product comparison expert with intelligent attribute selection "
           "capabilities.\n\n";
    out << "Your task is to:\n";
    out << "1. ANALYZE both product descriptions to identify which attributes are mentioned, "
           "implied, or can be reasonably inferred\n";
    out << "2. MATCH available attributes to the product content - only select attributes where "
           "both products have relevant information\n";
    out << "3. SELECT exactly " << top_n
        << " attributes that are most relevant and differentiating for these specific products\n";
    out << "4. Compare the products using these selected attributes with utility scoring\n";
    out << "5. Include Quantity as a critical attribute with detailed composition breakdown for "
           "all comparisons\n";
    out << "6. Provide detailed analysis for each attribute\n\n";
    out << "For each attribute, specify if the Neighbor PRODUCT is \"better\", \"worse\", "
           "\"same\", or \"mixed\" vs the BASE PRODUCT.\n";
    out << "Also assign utility scores (1-3) based on importance for this specific comparison.";
    if (weighted)
        out << "\nThe utility scores you assign are applied as relative importance weights when "
               "the attribute verdicts are aggregated into a net utility score.";
    return out.str() + kResponseFormat;
}

} // namespace

ChatRequest build_utility_prompt(const AttributeMode& mode, const Product& target,
                                 const Product& neighbor) {
    mode.validate();
    ChatRequest request;
    switch (mode.mode) {
    case AttributeModeKind::Generic:
        request.system_prompt = generic_prompt();
        break;
    case AttributeModeKind::StaticCategory: {
        auto it = mode.static_table.find(target.category);
        if (it == mode.static_table.end())
            throw std::runtime_error("static attribute table has no entry for category '" +
                                     target.category + "'");
        request.system_prompt = static_prompt(it->second);
        break;
    }
    case AttributeModeKind::Dynamic:
        request.system_prompt = dynamic_prompt(mode.top_n, false);
        break;
    case AttributeModeKind::WeightedDynamic:
        request.system_prompt = dynamic_prompt(mode.top_n, true);
        break;
    }
    request.user_message = render_product_block("TARGET PRODUCT", target) + "\n" +
                           render_product_block("NEIGHBOR PRODUCT", neighbor);
    return request;
}

int net_utility(std::span<const AttributeComparison> comparisons, bool weighted) {
    int total = 0;
    for (const auto& comparison : comparisons) {
        int score = 0;
        if (comparison.verdict == ComparisonVerdict::Better)
            score = 1;
        else if (comparison.verdict == ComparisonVerdict::Worse)
            score = -1;
        total += weighted ? comparison.weight * score : score;
    }
    return total;
}

namespace {

ComparisonVerdict parse_verdict(std::string value) {
    std::transform(value.begin(), value.end(), value.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (value == "better") return ComparisonVerdict::Better;
    if (value == "worse") return ComparisonVerdict::Worse;
    if (value == "same") return ComparisonVerdict::Same;
    if (value == "mixed") return ComparisonVerdict::Mixed;
    throw GatewayError("comparison verdict '" + value + "' is not in the enum");
}

} // namespace

UtilityReport compare_pair(Gateway& gateway, const AttributeMode& mode, const Product& target,
                           const Product& neighbor, ChatUsage* usage) {
    UtilityReport report;
    report.neighbor_id = neighbor.id;
    report.mode = mode.mode;
    report.top_n = mode.top_n;

    std::string failure;
    try {
        const ChatResponse response = gateway.complete(build_utility_prompt(mode, target, neighbor));
        if (usage)
            usage->record(response);
        const json reply = extract_json(response.text);
        if (!reply.contains("comparisons") || !reply["comparisons"].is_array())
            throw GatewayError("utility reply carries no comparisons array");
        for (const json& entry : reply["comparisons"]) {
            AttributeComparison comparison;
            comparison.attribute = entry.at("attribute").get<std::string>();
            comparison.verdict = parse_verdict(entry.at("verdict").get<std::string>());
            if (entry.contains("weight")) {
                const double raw = entry["weight"].is_number()
                                       ? entry["weight"].get<double>()
                                       : std::stod(entry["weight"].get<std::string>());
                comparison.weight = std::clamp(static_cast<int>(std::lround(raw)), 1, 3);
            }
            report.comparisons.push_back(std::move(comparison));
        }
        report.degenerate = report.comparisons.empty();
        report.net_utility =
            net_utility(report.comparisons, mode.mode == AttributeModeKind::WeightedDynamic);
        return report;
    } catch (const json::exception& e) {
        failure = e.what();
    } catch (const ConfigError&) {
        throw;
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

    report.valid = false;
    report.invalid_reason = failure;
    report.comparisons.clear();
    report.net_utility = 0;
    return report;
}

} // namespace priceaudit
