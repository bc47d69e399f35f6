#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>
#include <string>

#include "priceaudit/catalog.hpp"
#include "priceaudit/llm_gateway.hpp"
#include "priceaudit/product_text.hpp"

namespace priceaudit {

using nlohmann::json;

namespace {

std::set<std::string> token_set(const std::string& title) {
    const auto tokens = tokenize_title(title);
    return {tokens.begin(), tokens.end()};
}

double title_jaccard(const std::string& a, const std::string& b) {
    const auto sa = token_set(a);
    const auto sb = token_set(b);
    if (sa.empty() && sb.empty())
        return 1.0;
    std::size_t inter = 0;
    for (const auto& t : sa)
        inter += sb.count(t);
    const std::size_t uni = sa.size() + sb.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

bool parse_full_double(const std::string& s, double& out) {
    const std::size_t begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos)
        return false;
    const std::size_t end = s.find_last_not_of(" \t");
    const std::string trimmed = s.substr(begin, end - begin + 1);
    char* stop = nullptr;
    out = std::strtod(trimmed.c_str(), &stop);
    return stop && *stop == '\0' && stop != trimmed.c_str();
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

json relevance_rule(const json& payload) {
    if (!payload.contains("target") || !payload.contains("neighbor"))
        throw GatewayError("mock relevance payload needs target and neighbor");
    const json& target = payload["target"];
    const json& neighbor = payload["neighbor"];
    if (!target.contains("title") || !target.contains("category") ||
        !neighbor.contains("title") || !neighbor.contains("category"))
        throw GatewayError("mock relevance payload needs title and category on both products");

    const std::string tc = target["category"].get<std::string>();
    const std::string nc = neighbor["category"].get<std::string>();
    const double jaccard =
        title_jaccard(target["title"].get<std::string>(), neighbor["title"].get<std::string>());
    const bool relevant = (tc == nc) && jaccard >= 0.2;

    std::string explanation;
    if (relevant) {
        explanation = "Same category '" + tc + "' with title overlap " + fixed3(jaccard) +
                      "; customers would directly compare prices between these products.";
    } else if (tc != nc) {
        explanation = "Categories differ ('" + tc + "' vs '" + nc +
                      "'), so the neighbor offers no pricing comparison value.";
    } else {
        explanation = "Title overlap " + fixed3(jaccard) +
                      " is below 0.2; the products are not close enough substitutes.";
    }
    return json{{"explanation", explanation}, {"relevance", relevant ? "Relevant" : "Irrelevant"}};
}

json utility_rule(const json& payload) {
    if (!payload.contains("target") || !payload.contains("neighbor"))
        throw GatewayError("mock utility payload needs target and neighbor");
    const json& ta = payload["target"].value("attributes", json::object());
    const json& na = payload["neighbor"].value("attributes", json::object());
    if (!ta.is_object() || !na.is_object())
        throw GatewayError("mock utility payload attributes must be objects");

    json comparisons = json::array();
    for (const auto& [name, tv] : ta.items()) {
        if (!na.contains(name))
            continue; // attribute missing on one side: skipped
        const std::string target_value = tv.is_string() ? tv.get<std::string>() : tv.dump();
        const json& nv = na[name];
        const std::string neighbor_value = nv.is_string() ? nv.get<std::string>() : nv.dump();

        std::string verdict;
        double t_num = 0.0, n_num = 0.0;
        if (parse_full_double(target_value, t_num) && parse_full_double(neighbor_value, n_num)) {
            verdict = n_num > t_num ? "better" : n_num < t_num ? "worse" : "same";
        } else {
            verdict = target_value == neighbor_value ? "same" : "mixed";
        }
        const std::string name_lower = lower(name);
        const int weight = (name_lower == "brand" || name_lower == "quantity") ? 3 : 2;
        comparisons.push_back(json{{"attribute", name},
                                   {"verdict", verdict},
                                   {"weight", weight},
                                   {"analysis", "target=" + target_value + " neighbor=" + neighbor_value}});
    }
    return json{{"comparisons", comparisons},
                {"explanation", comparisons.empty()
                                    ? std::string("No attribute is present on both products.")
                                    : "Compared " + std::to_string(comparisons.size()) +
                                          " shared attribute(s) by value."}};
}

json decision_rule(const json& payload) {
    if (!payload.contains("strategy") || !payload.contains("points"))
        throw GatewayError("mock decision payload needs strategy and points");
    const std::string strategy = payload["strategy"].get<std::string>();
    if (strategy != "veto" && strategy != "voting")
        throw GatewayError("mock decision payload has unknown strategy '" + strategy + "'");

    int ap = 0, not_ap = 0;
    std::vector<std::string> ap_ids, not_ap_ids;
    for (const json& point : payload["points"]) {
        const std::string zone = point.value("zone", "");
        const std::string id = point.value("neighbor_id", "?");
        if (zone == "AP") {
            ++ap;
            ap_ids.push_back(id);
        } else if (zone == "NOT_AP") {
            ++not_ap;
            not_ap_ids.push_back(id);
        }
    }

    // Same counting rules the deterministic engine applies; kept separate
    // on purpose so tests can cross-check the two paths.
    std::string decision;
    std::ostringstream why;
    if (strategy == "veto") {
        if (not_ap >= 1) {
            decision = "No";
            why << "Worse-and-pricier neighbor(s) [";
            for (std::size_t i = 0; i < not_ap_ids.size(); ++i)
                why << (i ? ", " : "") << not_ap_ids[i];
            why << "] veto the outlier hypothesis.";
        } else if (ap >= 1) {
            decision = "Yes";
            why << ap << " cheaper similar-or-better neighbor(s) and no evidence against.";
        } else {
            decision = "Unsure";
            why << "No neighbor falls in an informative zone.";
        }
    } else {
        if (ap >= 1 && ap >= not_ap) {
            decision = "Yes";
            why << "Anomaly-zone neighbors (" << ap << ") outnumber or match evidence against ("
                << not_ap << ").";
        } else if (not_ap >= 1) {
            decision = "No";
            why << "Evidence against (" << not_ap << ") outweighs anomaly-zone neighbors (" << ap
                << ").";
        } else {
            decision = "Unsure";
            why << "No neighbor falls in an informative zone.";
        }
    }
    return json{{"explanation", why.str()}, {"decision", decision}};
}

} // namespace

json mock_oracle(MockRole role, const json& payload) {
    switch (role) {
    case MockRole::Relevance:
        return relevance_rule(payload);
    case MockRole::Utility:
        return utility_rule(payload);
    case MockRole::Padding:
        return json{{"explanation", "Fixed mock padding."}, {"padding", 0.40}};
    case MockRole::Decision:
        return decision_rule(payload);
    }
    throw GatewayError("unknown mock role");
}

namespace detail {

namespace {

json parse_decision_payload(const std::string& user_message) {
    json payload = json::object();
    std::istringstream lines(user_message);
    std::string line;
    json points = json::array();
    while (std::getline(lines, line)) {
        if (line.rfind("STRATEGY:", 0) == 0) {
            std::string value = line.substr(9);
            value.erase(0, value.find_first_not_of(' '));
            payload["strategy"] = value;
        } else if (line.rfind("- neighbor:", 0) == 0) {
            json point = json::object();
            std::istringstream fields(line.substr(2));
            std::string field;
            while (std::getline(fields, field, '|')) {
                const std::size_t colon = field.find(':');
                if (colon == std::string::npos)
                    continue;
                std::string key = field.substr(0, colon);
                std::string value = field.substr(colon + 1);
                auto strip = [](std::string& s) {
                    s.erase(0, s.find_first_not_of(' '));
                    const auto last = s.find_last_not_of(' ');
                    if (last != std::string::npos)
                        s.erase(last + 1);
                };
                strip(key);
                strip(value);
                if (key == "neighbor")
                    point["neighbor_id"] = value;
                else if (key == "zone")
                    point["zone"] = value;
                else if (key == "rel_gap")
                    point["rel_gap"] = std::strtod(value.c_str(), nullptr);
                else if (key == "net_utility")
                    point["net_utility"] = std::strtol(value.c_str(), nullptr, 10);
            }
            points.push_back(std::move(point));
        }
    }
    payload["points"] = std::move(points);
    return payload;
}

json pair_payload(const std::string& user_message) {
    return json{{"target", parse_product_block(user_message, "TARGET PRODUCT")},
                {"neighbor", parse_product_block(user_message, "NEIGHBOR PRODUCT")}};
}

} // namespace

Transport::Reply mock_complete(const ChatRequest& request) {
    json reply;
    const std::string& prompt = request.system_prompt;
    if (prompt.find(kRelevanceMarker) != std::string::npos) {
        reply = mock_oracle(MockRole::Relevance, pair_payload(request.user_message));
    } else if (prompt.find(kUtilityMarker) != std::string::npos) {
        reply = mock_oracle(MockRole::Utility, pair_payload(request.user_message));
    } else if (prompt.find(kPaddingMarker) != std::string::npos) {
        reply = mock_oracle(MockRole::Padding, json::object());
    } else if (prompt.find(kDecisionMarker) != std::string::npos) {
        reply = mock_oracle(MockRole::Decision, parse_decision_payload(request.user_message));
    } else {
        throw GatewayError("mock backend cannot recognize the requesting agent");
    }

    Transport::Reply out;
    out.text = reply.dump();
    // Deterministic token estimate: four characters per token.
    out.prompt_tokens =
        static_cast<long long>((request.system_prompt.size() + request.user_message.size()) / 4);
    out.completion_tokens = static_cast<long long>(out.text.size() / 4);
    out.tokens_reported = true;
    return out;
}

} // namespace detail

} // namespace priceaudit
