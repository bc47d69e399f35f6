#include <doctest.h>

#include <chrono>
#include <set>
#include <thread>

#include <httplib.h>

#include "priceaudit/pipeline.hpp"
#include "support/fixtures.hpp"

using namespace priceaudit;
using priceaudit::testing::PlantedSpec;
using priceaudit::testing::make_mouse_veto_catalog;
using priceaudit::testing::make_mouse_voting_catalog;
using priceaudit::testing::make_planted_catalog;
using priceaudit::testing::make_product;

namespace {

PipelineConfig mock_config(double padding = 0.30, Strategy strategy = Strategy::Veto) {
    PipelineConfig config;
    config.k = 7;
    config.padding.price_padding = padding;
    config.strategy = strategy;
    return config; // backend defaults to the mock
}

// Delegates to a mock gateway after a pause, to make call overlap visible.
class SlowMockTransport : public Transport {
public:
    explicit SlowMockTransport(int delay_ms) : delay_ms_(delay_ms), inner_(BackendConfig{}) {}
    Reply send(const ChatRequest& request) override {
        std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms_));
        const ChatResponse response = inner_.complete(request);
        return {response.text, response.prompt_tokens, response.completion_tokens,
                response.tokens_reported};
    }

private:
    int delay_ms_;
    Gateway inner_;
};

class AlwaysDownTransport : public Transport {
public:
    Reply send(const ChatRequest&) override { throw TransientError("backend down"); }
};

} // namespace

TEST_CASE("a planted 3x-priced target with better cheaper neighbors is flagged") {
    // hand trace under the mock rules: all five co-members share the
    // category and four title tokens (jaccard 0.5 -> Relevant); every one
    // has higher power at a third of the price (net_utility +1, rel_gap
    // ~0.67 >= 0.30 -> AP); no neighbor is worse and pricier -> veto Yes.
    PlantedSpec spec;
    spec.groups = 1;
    spec.outlier_ratio = 3.0;
    const auto planted = make_planted_catalog(spec);
    Pipeline pipeline(planted.catalog, mock_config(0.30));
    const AssessmentRecord record = pipeline.assess_target("g0-outlier");
    CHECK(record.decision.verdict == VerdictOutcome::Yes);
    CHECK(record.decision.evidence.ap == 5);
    CHECK(record.decision.evidence.not_ap == 0);
    CHECK(record.error.empty());
}

TEST_CASE("a worse neighbor priced 20% above the target vetoes the outlier call") {
    Pipeline pipeline(make_mouse_veto_catalog(), mock_config(0.50));
    const AssessmentRecord record = pipeline.assess_target("mouse-target");
    CHECK(record.decision.verdict == VerdictOutcome::No);
    CHECK(record.decision.evidence.not_ap == 1);
    REQUIRE(record.points.size() == 1);
    CHECK(record.points[0].rel_gap == doctest::Approx(-0.20));
    CHECK(record.points[0].zone == Zone::NOT_AP);
}

TEST_CASE("the voting example: three better at $100 beat two worse at $200") {
    Pipeline voting(make_mouse_voting_catalog(), mock_config(0.30, Strategy::Voting));
    CHECK(voting.assess_target("mouse-target").decision.verdict == VerdictOutcome::Yes);

    Pipeline veto(make_mouse_voting_catalog(), mock_config(0.30, Strategy::Veto));
    CHECK(veto.assess_target("mouse-target").decision.verdict == VerdictOutcome::No);
}

TEST_CASE("a singleton catalog yields Unsure with empty evidence") {
    Catalog lonely;
    lonely.add(make_product("only", "the only product", "cat", 10.0));
    Pipeline pipeline(lonely, mock_config());
    const AssessmentRecord record = pipeline.assess_target("only");
    CHECK(record.decision.verdict == VerdictOutcome::Unsure);
    CHECK(record.candidates.empty());
    CHECK(record.points.empty());
}

TEST_CASE("records explain every candidate and recompute their decisions") {
    const auto planted = make_planted_catalog(PlantedSpec{3, 5, 2.5, 1.0, 7});
    Pipeline pipeline(planted.catalog, mock_config());
    for (const std::string& id : {std::string("g0-outlier"), std::string("g1-n2")}) {
        const AssessmentRecord record = pipeline.assess_target(id);
        CHECK(record.candidates.size() == 7);
        std::set<std::string> relevant_ids;
        for (const auto& verdict : record.relevance)
            if (verdict.relevance == Relevance::Relevant)
                relevant_ids.insert(verdict.neighbor_id);
        // stage monotonicity: utility ran exactly on the relevant set
        std::set<std::string> utility_ids;
        for (const auto& report : record.utility)
            utility_ids.insert(report.neighbor_id);
        CHECK(utility_ids == relevant_ids);
        // trace completeness: every candidate carries a final status
        for (const auto& trace : record.candidates) {
            CHECK(trace.status != "pending");
            const bool known = trace.status.rfind("filtered:", 0) == 0 ||
                               trace.status.rfind("excluded:", 0) == 0 ||
                               trace.status.rfind("decision:", 0) == 0;
            CHECK(known);
        }
        // decision recomputable from stored evidence
        CHECK(verdict_from_counts(record.decision.strategy, count_zones(record.points)) ==
              record.decision.verdict);
        // every call is accounted with a stage label
        CHECK(record.calls.size() >= record.candidates.size());
        for (const auto& call : record.calls) {
            CHECK((call.stage == "relevance" || call.stage == "utility" || call.stage == "padding" ||
                   call.stage == "decision"));
            CHECK(call.usage.tokens_reported);
        }
    }
}

TEST_CASE("assess_batch keeps order and isolates unknown targets") {
    const auto planted = make_planted_catalog(PlantedSpec{2, 5, 2.5, 1.0, 7});
    Pipeline pipeline(planted.catalog, mock_config());

    CHECK(pipeline.assess_batch({}).empty());

    const auto records = pipeline.assess_batch({"g0-n0", "no-such-id", "g1-n1"});
    REQUIRE(records.size() == 3);
    CHECK(records[0].target_id == "g0-n0");
    CHECK(records[0].error.empty());
    CHECK(records[1].target_id == "no-such-id");
    CHECK_FALSE(records[1].error.empty());
    CHECK(records[1].decision.verdict == VerdictOutcome::Unsure);
    CHECK(records[2].target_id == "g1-n1");
    CHECK(records[2].error.empty());
}

TEST_CASE("identical inputs serialize to byte-identical traces") {
    const auto planted = make_planted_catalog(PlantedSpec{2, 5, 2.5, 1.0, 7});
    std::vector<std::string> ids;
    for (const auto& product : planted.catalog.products())
        ids.push_back(product.id);

    Pipeline first(planted.catalog, mock_config());
    Pipeline second(planted.catalog, mock_config());
    const std::string a = records_to_jsonl(first.assess_batch(ids));
    const std::string b = records_to_jsonl(second.assess_batch(ids));
    CHECK(a == b);
    CHECK(a.find("duration") == std::string::npos);

    SerializeOptions with_timing;
    with_timing.include_timing = true;
    const std::string timed = records_to_jsonl(first.assess_batch(ids), with_timing);
    CHECK(timed.find("duration_ms") != std::string::npos);
}

TEST_CASE("in-flight backend calls never exceed max_concurrency") {
    const auto planted = make_planted_catalog(PlantedSpec{1, 7, 2.5, 1.0, 7});

    PipelineConfig bounded = mock_config();
    bounded.max_concurrency = 2;
    auto gateway2 = std::make_shared<Gateway>(BackendConfig{}, std::make_unique<SlowMockTransport>(15));
    Pipeline two(planted.catalog, bounded, gateway2);
    two.assess_target("g0-outlier");
    CHECK(gateway2->max_in_flight() <= 2);

    PipelineConfig wider = mock_config();
    wider.max_concurrency = 4;
    auto gateway4 = std::make_shared<Gateway>(BackendConfig{}, std::make_unique<SlowMockTransport>(30));
    Pipeline four(planted.catalog, wider, gateway4);
    four.assess_target("g0-outlier");
    CHECK(gateway4->max_in_flight() <= 4);
    CHECK(gateway4->max_in_flight() >= 2); // the fan-out really overlaps
}

TEST_CASE("a backend that fails on every neighbor yields Unsure with no usable evidence") {
    const auto planted = make_planted_catalog(PlantedSpec{1, 5, 2.5, 1.0, 7});
    auto gateway = std::make_shared<Gateway>(BackendConfig{}, std::make_unique<AlwaysDownTransport>(),
                                             [](double) {});
    Pipeline pipeline(planted.catalog, mock_config(), gateway);
    const AssessmentRecord record = pipeline.assess_target("g0-outlier");
    CHECK(record.decision.verdict == VerdictOutcome::Unsure);
    CHECK(record.decision.explanation.find("no usable evidence") != std::string::npos);
    for (const auto& trace : record.candidates)
        CHECK(trace.status == "filtered:relevance-parse-failure");
}

TEST_CASE("gateway call counts match the per-assessment call trace") {
    PlantedSpec spec;
    spec.groups = 1;
    const auto planted = make_planted_catalog(spec);
    auto gateway = std::make_shared<Gateway>(BackendConfig{});
    Pipeline pipeline(planted.catalog, mock_config(), gateway);
    const AssessmentRecord record = pipeline.assess_target("g0-outlier");
    CHECK(gateway->total_calls() == static_cast<long long>(record.calls.size()));
    // 5 relevance + 5 utility under the mock, no padding/decision calls
    CHECK(record.calls.size() == 10);
}

TEST_CASE("a failure on one neighbor reduces the evidence without aborting") {
    // fail every call that mentions one specific co-member
    class SelectiveFailTransport : public Transport {
    public:
        Reply send(const ChatRequest& request) override {
            if (request.user_message.find("id: g0-n1") != std::string::npos)
                throw TransientError("synthetic outage for one neighbor");
            const ChatResponse response = inner_.complete(request);
            return {response.text, response.prompt_tokens, response.completion_tokens,
                    response.tokens_reported};
        }

    private:
        Gateway inner_{BackendConfig{}};
    };

    PlantedSpec spec;
    spec.groups = 1;
    spec.outlier_ratio = 3.0;
    const auto planted = make_planted_catalog(spec);
    auto gateway = std::make_shared<Gateway>(BackendConfig{},
                                             std::make_unique<SelectiveFailTransport>(), [](double) {});
    Pipeline pipeline(planted.catalog, mock_config(0.30), gateway);
    const AssessmentRecord record = pipeline.assess_target("g0-outlier");
    // four of five neighbors still reach the decision stage
    CHECK(record.decision.verdict == VerdictOutcome::Yes);
    CHECK(record.decision.evidence.ap == 4);
    bool excluded_seen = false;
    for (const auto& trace : record.candidates)
        if (trace.candidate.product_id == "g0-n1") {
            CHECK(trace.status == "filtered:relevance-parse-failure");
            excluded_seen = true;
        }
    CHECK(excluded_seen);
    CHECK_FALSE(record.notes.empty());
}

TEST_CASE("llm decision and padding modes run end to end against the mock") {
    const auto planted = make_planted_catalog(PlantedSpec{1, 5, 3.0, 1.0, 7});

    PipelineConfig llm_decision = mock_config(0.30);
    llm_decision.decision_mode = DecisionMode::Llm;
    Pipeline with_llm(planted.catalog, llm_decision);
    const AssessmentRecord record = with_llm.assess_target("g0-outlier");
    CHECK(record.decision.verdict == VerdictOutcome::Yes); // mock mirrors the veto rule
    CHECK(record.decision.llm_generated);

    PipelineConfig llm_padding = mock_config(0.30);
    llm_padding.padding.mode = PaddingMode::Llm;
    Pipeline with_padding(planted.catalog, llm_padding);
    const AssessmentRecord padded = with_padding.assess_target("g0-outlier");
    CHECK(padded.effective_price_padding == doctest::Approx(0.40)); // mock constant
    CHECK(padded.decision.verdict == VerdictOutcome::Yes);          // gap ~0.67 clears 0.40
}

TEST_CASE("the full pipeline runs over the http backend end to end") {
    // loopback chat-completion server answering with the mock rules
    httplib::Server server;
    Gateway oracle{BackendConfig{}};
    std::string seen_auth;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        seen_auth = req.get_header_value("Authorization");
        const auto body = nlohmann::json::parse(req.body);
        ChatRequest inner;
        inner.system_prompt = body["messages"][0]["content"].get<std::string>();
        inner.user_message = body["messages"][1]["content"].get<std::string>();
        const ChatResponse reply = oracle.complete(inner);
        const nlohmann::json out = {
            {"choices",
             nlohmann::json::array(
                 {nlohmann::json{{"message", {{"role", "assistant"}, {"content", reply.text}}}}})},
            {"usage",
             {{"prompt_tokens", reply.prompt_tokens}, {"completion_tokens", reply.completion_tokens}}},
        };
        res.set_content(out.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&server] { server.listen_after_bind(); });
    server.wait_until_ready();
    setenv("PRICE_AUDIT_PIPELINE_KEY", "token", 1);

    PipelineConfig config = mock_config(0.30, Strategy::Voting);
    config.backend.kind = BackendKind::Http;
    config.backend.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    config.backend.model_name = "loopback";
    config.backend.credential_env_var = "PRICE_AUDIT_PIPELINE_KEY";

    Pipeline pipeline(make_mouse_voting_catalog(), config);
    const AssessmentRecord record = pipeline.assess_target("mouse-target");
    server.stop();
    server_thread.join();

    CHECK(record.decision.verdict == VerdictOutcome::Yes);
    CHECK(record.decision.evidence.ap == 3);
    CHECK(record.decision.evidence.not_ap == 2);
    CHECK(seen_auth == "Bearer token");
    for (const auto& call : record.calls)
        CHECK(call.usage.tokens_reported);
}

TEST_CASE("pipeline config validation rejects broken setups") {
    const auto planted = make_planted_catalog(PlantedSpec{1, 2, 2.5, 1.0, 7});
    PipelineConfig config = mock_config();
    config.k = 0;
    CHECK_THROWS_AS(Pipeline(planted.catalog, config), std::invalid_argument);
    config = mock_config();
    config.max_concurrency = 0;
    CHECK_THROWS_AS(Pipeline(planted.catalog, config), std::invalid_argument);
    config = mock_config();
    config.backend.kind = BackendKind::Http;
    config.backend.endpoint.clear();
    CHECK_THROWS_AS(Pipeline(planted.catalog, config), std::invalid_argument);
}
