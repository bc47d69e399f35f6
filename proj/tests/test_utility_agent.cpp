#include <doctest.h>

#include <algorithm>
#include <random>

#include "priceaudit/utility_agent.hpp"
#include "support/fixtures.hpp"

using namespace priceaudit;
using priceaudit::testing::TempDir;
using priceaudit::testing::make_product;
using priceaudit::testing::write_file;

namespace {

class CannedTransport : public Transport {
public:
    explicit CannedTransport(std::string text) : text_(std::move(text)) {}
    Reply send(const ChatRequest&) override { return {text_, 10, 5, true}; }

private:
    std::string text_;
};

AttributeComparison cmp(std::string attribute, ComparisonVerdict verdict, int weight = 1) {
    return {std::move(attribute), verdict, weight};
}

std::vector<AttributeComparison> random_comparisons(std::mt19937& gen, std::size_t count) {
    std::vector<AttributeComparison> out;
    const ComparisonVerdict verdicts[] = {ComparisonVerdict::Better, ComparisonVerdict::Worse,
                                          ComparisonVerdict::Same, ComparisonVerdict::Mixed};
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(cmp("a" + std::to_string(i), verdicts[gen() % 4],
                          1 + static_cast<int>(gen() % 3)));
    return out;
}

} // namespace

TEST_CASE("net_utility follows the +1/0/-1 scoring map") {
    const std::vector<AttributeComparison> mixed_bag = {
        cmp("a", ComparisonVerdict::Better), cmp("b", ComparisonVerdict::Worse),
        cmp("c", ComparisonVerdict::Same), cmp("d", ComparisonVerdict::Better)};
    CHECK(net_utility(mixed_bag, false) == 1);

    const std::vector<AttributeComparison> weighted = {
        cmp("a", ComparisonVerdict::Better, 3), cmp("b", ComparisonVerdict::Worse, 1),
        cmp("c", ComparisonVerdict::Same, 2)};
    CHECK(net_utility(weighted, true) == 2);

    CHECK(net_utility(std::vector<AttributeComparison>{}, false) == 0);
    CHECK(net_utility(std::vector<AttributeComparison>{}, true) == 0);

    const std::vector<AttributeComparison> mixed_only = {cmp("a", ComparisonVerdict::Mixed, 3)};
    CHECK(net_utility(mixed_only, true) == 0);
}

TEST_CASE("net_utility properties: bounds, permutation invariance, negation") {
    std::mt19937 gen(53);
    for (int round = 0; round < 300; ++round) {
        auto comparisons = random_comparisons(gen, gen() % 9);
        const int n = static_cast<int>(comparisons.size());
        for (const bool weighted : {false, true}) {
            const int value = net_utility(comparisons, weighted);
            CHECK(std::abs(value) <= (weighted ? 3 * n : n));

            auto shuffled = comparisons;
            std::shuffle(shuffled.begin(), shuffled.end(), gen);
            CHECK(net_utility(shuffled, weighted) == value);

            auto negated = comparisons;
            for (auto& c : negated) {
                if (c.verdict == ComparisonVerdict::Better)
                    c.verdict = ComparisonVerdict::Worse;
                else if (c.verdict == ComparisonVerdict::Worse)
                    c.verdict = ComparisonVerdict::Better;
            }
            CHECK(net_utility(negated, weighted) == -value);
        }
    }
}

TEST_CASE("generic prompt lists exactly the four fixed criteria") {
    AttributeMode mode;
    const ChatRequest request = build_utility_prompt(mode, make_product("t", "thing", "cat", 10.0),
                                                     make_product("n", "thing", "cat", 12.0));
    CHECK(request.system_prompt.find("build quality") != std::string::npos);
    CHECK(request.system_prompt.find("features") != std::string::npos);
    CHECK(request.system_prompt.find("brand reputation") != std::string::npos);
    CHECK(request.system_prompt.find("quantity") != std::string::npos);
    CHECK(request.system_prompt.find("GENERIC attribute mode") != std::string::npos);
}

TEST_CASE("static prompt embeds the full category attribute list") {
    AttributeMode mode;
    mode.mode = AttributeModeKind::StaticCategory;
    mode.static_table["cat"] = {"brand", "quantity", "wattage", "capacity", "material", "warranty"};
    const ChatRequest request = build_utility_prompt(mode, make_product("t", "thing", "cat", 10.0),
                                                     make_product("n", "thing", "cat", 12.0));
    for (const char* name : {"brand", "quantity", "wattage", "capacity", "material", "warranty"})
        CHECK(request.system_prompt.find(name) != std::string::npos);
    CHECK(request.system_prompt.find("NO selection or substitution") != std::string::npos);
    CHECK(request.system_prompt.find("EXACT 6 attributes") != std::string::npos);
    CHECK(request.system_prompt.find("Assign utility scores (1-3)") != std::string::npos);

    mode.static_table.clear();
    CHECK_THROWS_WITH_AS(build_utility_prompt(mode, make_product("t", "thing", "cat", 10.0),
                                              make_product("n", "thing", "cat", 12.0)),
                         doctest::Contains("no entry for category"), std::runtime_error);
}

TEST_CASE("dynamic prompt demands exactly top_n attributes") {
    AttributeMode mode;
    mode.mode = AttributeModeKind::Dynamic;
    mode.top_n = 3;
    const ChatRequest request = build_utility_prompt(mode, make_product("t", "thing", "cat", 10.0),
                                                     make_product("n", "thing", "cat", 12.0));
    CHECK(request.system_prompt.find("SELECT exactly 3 attributes") != std::string::npos);

    mode.top_n = 2;
    CHECK_THROWS_AS(build_utility_prompt(mode, make_product("t", "thing", "cat", 10.0),
                                         make_product("n", "thing", "cat", 12.0)),
                    std::invalid_argument);

    mode.mode = AttributeModeKind::WeightedDynamic;
    mode.top_n = 5;
    const ChatRequest weighted = build_utility_prompt(mode, make_product("t", "thing", "cat", 10.0),
                                                      make_product("n", "thing", "cat", 12.0));
    CHECK(weighted.system_prompt.find("importance weights") != std::string::npos);
}

TEST_CASE("compare_pair under the mock compares shared attributes") {
    Gateway gateway{BackendConfig{}};
    AttributeMode mode;
    const Product target =
        make_product("t", "power drill", "tools", 80.0, {{"wattage", "80"}, {"brand", "acme"}});
    const Product neighbor =
        make_product("n", "power drill", "tools", 70.0, {{"wattage", "100"}, {"brand", "acme"}});
    const UtilityReport report = compare_pair(gateway, mode, target, neighbor);
    REQUIRE(report.valid);
    REQUIRE(report.comparisons.size() == 2);
    // attributes arrive sorted by name: brand, wattage
    CHECK(report.comparisons[0].attribute == "brand");
    CHECK(report.comparisons[0].verdict == ComparisonVerdict::Same);
    CHECK(report.comparisons[0].weight == 3);
    CHECK(report.comparisons[1].attribute == "wattage");
    CHECK(report.comparisons[1].verdict == ComparisonVerdict::Better);
    CHECK(report.comparisons[1].weight == 2);
    CHECK(report.net_utility == 1); // generic mode: unweighted sum
    CHECK_FALSE(report.degenerate);
}

TEST_CASE("weighted dynamic mode multiplies scores by weights") {
    Gateway gateway{BackendConfig{}};
    AttributeMode mode;
    mode.mode = AttributeModeKind::WeightedDynamic;
    const Product target =
        make_product("t", "power drill", "tools", 80.0, {{"quantity", "1"}, {"wattage", "80"}});
    const Product neighbor =
        make_product("n", "power drill", "tools", 70.0, {{"quantity", "2"}, {"wattage", "60"}});
    const UtilityReport report = compare_pair(gateway, mode, target, neighbor);
    REQUIRE(report.valid);
    // quantity better (weight 3) + wattage worse (weight 2) -> +3 - 2 = 1
    CHECK(report.net_utility == 1);
}

TEST_CASE("an out-of-enum verdict invalidates the report") {
    const std::string reply =
        R"({"comparisons":[{"attribute":"wattage","verdict":"superior","weight":2}]})";
    Gateway gateway{BackendConfig{}, std::make_unique<CannedTransport>(reply)};
    const UtilityReport report = compare_pair(gateway, AttributeMode{},
                                              make_product("t", "thing", "cat", 10.0),
                                              make_product("n", "thing", "cat", 12.0));
    CHECK_FALSE(report.valid);
    CHECK(report.invalid_reason.find("superior") != std::string::npos);
    CHECK(report.net_utility == 0);
}

TEST_CASE("weights outside 1..3 are clamped; missing weights default to 1") {
    const std::string reply = R"({"comparisons":[
        {"attribute":"a","verdict":"better","weight":9},
        {"attribute":"b","verdict":"worse","weight":0},
        {"attribute":"c","verdict":"same"}]})";
    Gateway gateway{BackendConfig{}, std::make_unique<CannedTransport>(reply)};
    const UtilityReport report = compare_pair(gateway, AttributeMode{},
                                              make_product("t", "thing", "cat", 10.0),
                                              make_product("n", "thing", "cat", 12.0));
    REQUIRE(report.valid);
    CHECK(report.comparisons[0].weight == 3);
    CHECK(report.comparisons[1].weight == 1);
    CHECK(report.comparisons[2].weight == 1);
}

TEST_CASE("zero shared attributes yields a degenerate report with net 0") {
    Gateway gateway{BackendConfig{}};
    const Product target = make_product("t", "thing one", "cat", 10.0, {{"color", "red"}});
    const Product neighbor = make_product("n", "thing two", "cat", 12.0, {{"size", "xl"}});
    const UtilityReport report = compare_pair(gateway, AttributeMode{}, target, neighbor);
    REQUIRE(report.valid);
    CHECK(report.degenerate);
    CHECK(report.net_utility == 0);
    CHECK(report.comparisons.empty());
}

TEST_CASE("stored reports recompute to their own net_utility") {
    Gateway gateway{BackendConfig{}};
    std::mt19937 gen(59);
    for (int round = 0; round < 50; ++round) {
        std::map<std::string, std::string> ta, na;
        const int n = 1 + static_cast<int>(gen() % 5);
        for (int i = 0; i < n; ++i) {
            const std::string name = (i == 0) ? "brand" : "attr" + std::to_string(i);
            ta[name] = std::to_string(gen() % 5);
            na[name] = std::to_string(gen() % 5);
        }
        for (const auto kind : {AttributeModeKind::Generic, AttributeModeKind::WeightedDynamic}) {
            AttributeMode mode;
            mode.mode = kind;
            const UtilityReport report =
                compare_pair(gateway, mode, make_product("t", "widget thing", "cat", 10.0, ta),
                             make_product("n", "widget thing", "cat", 12.0, na));
            REQUIRE(report.valid);
            CHECK(net_utility(report.comparisons, kind == AttributeModeKind::WeightedDynamic) ==
                  report.net_utility);
        }
    }
}

TEST_CASE("static attribute tables load from line-delimited records") {
    TempDir dir;
    write_file(dir.file("table.jsonl"),
               R"({"category":"tools","attributes":["brand","quantity","wattage"]})"
               "\n"
               R"({"category":"mice","attributes":["brand","dpi"]})"
               "\n");
    const auto table = load_static_table(dir.file("table.jsonl"));
    REQUIRE(table.size() == 2);
    CHECK(table.at("tools") == std::vector<std::string>{"brand", "quantity", "wattage"});

    write_file(dir.file("bad.jsonl"), R"({"category":"x"})" "\n");
    CHECK_THROWS_WITH_AS(load_static_table(dir.file("bad.jsonl")), doctest::Contains("line 1"),
                         std::runtime_error);
}
