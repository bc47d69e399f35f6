#include "priceaudit/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

namespace priceaudit {

using nlohmann::json;

std::string to_string(DecisionMode mode) {
    return mode == DecisionMode::Deterministic ? "deterministic" : "llm";
}

DecisionMode decision_mode_from_string(const std::string& name) {
    if (name == "deterministic") return DecisionMode::Deterministic;
    if (name == "llm") return DecisionMode::Llm;
    throw std::invalid_argument("unknown decision mode '" + name + "'");
}

void PipelineConfig::validate() const {
    if (k <= 0)
        throw std::invalid_argument("k must be positive");
    if (max_concurrency <= 0)
        throw std::invalid_argument("max_concurrency must be positive");
    padding.validate();
    attribute_mode.validate();
    if (backend.kind == BackendKind::Http && backend.endpoint.empty())
        throw std::invalid_argument("http backend requires an endpoint");
}

json config_to_json(const PipelineConfig& config) {
    return json{
        {"k", config.k},
        {"price_padding", config.padding.price_padding},
        {"utility_padding", config.padding.utility_padding},
        {"padding_mode", config.padding.mode == PaddingMode::Fixed ? "fixed" : "llm"},
        {"attribute_mode", to_string(config.attribute_mode.mode)},
        {"top_n", config.attribute_mode.top_n},
        {"strategy", to_string(config.strategy)},
        {"decision_mode", to_string(config.decision_mode)},
        {"backend", json{{"kind", config.backend.kind == BackendKind::Mock ? "mock" : "http"},
                         {"model", config.backend.model_name}}},
        {"max_concurrency", config.max_concurrency},
    };
}

namespace {

// Runs fn(0..count-1) on at most `bound` worker threads. Results land in
// caller-indexed slots, so completion order never shows in the trace.
template <typename Fn>
void parallel_for_indexed(std::size_t count, int bound, Fn&& fn) {
    if (count == 0)
        return;
    const int workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(std::max(bound, 1)), count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count)
                    return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error)
                        first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& thread : pool)
        thread.join();
    if (first_error)
        std::rethrow_exception(first_error);
}

json usage_to_json(const ChatUsage& usage) {
    return json{{"prompt_tokens", usage.prompt_tokens},
                {"completion_tokens", usage.completion_tokens},
                {"attempts", usage.attempts},
                {"tokens_reported", usage.tokens_reported},
                {"failed", usage.call_failed}};
}

} // namespace

json record_to_json(const AssessmentRecord& record, const SerializeOptions& options) {
    json candidates = json::array();
    for (const auto& trace : record.candidates) {
        candidates.push_back(json{{"product_id", trace.candidate.product_id},
                                  {"similarity", trace.candidate.similarity},
                                  {"rank", trace.candidate.rank},
                                  {"status", trace.status}});
    }

    json relevance = json::array();
    for (const auto& verdict : record.relevance) {
        relevance.push_back(json{{"neighbor_id", verdict.neighbor_id},
                                 {"relevance", to_string(verdict.relevance)},
                                 {"explanation", verdict.explanation},
                                 {"explanation_overlong", verdict.explanation_overlong},
                                 {"parse_failure", verdict.parse_failure}});
    }

    json utility = json::array();
    for (const auto& report : record.utility) {
        json comparisons = json::array();
        for (const auto& comparison : report.comparisons) {
            comparisons.push_back(json{{"attribute", comparison.attribute},
                                       {"verdict", to_string(comparison.verdict)},
                                       {"weight", comparison.weight}});
        }
        utility.push_back(json{{"neighbor_id", report.neighbor_id},
                               {"comparisons", comparisons},
                               {"net_utility", report.net_utility},
                               {"mode", to_string(report.mode)},
                               {"degenerate", report.degenerate},
                               {"valid", report.valid},
                               {"invalid_reason", report.invalid_reason}});
    }

    json points = json::array();
    for (const auto& point : record.points) {
        points.push_back(json{{"neighbor_id", point.neighbor_id},
                              {"rel_gap", point.rel_gap},
                              {"net_utility", point.net_utility},
                              {"zone", to_string(point.zone)}});
    }

    json calls = json::array();
    for (const auto& call : record.calls) {
        json entry = usage_to_json(call.usage);
        entry["stage"] = call.stage;
        entry["neighbor_id"] = call.neighbor_id;
        calls.push_back(std::move(entry));
    }

    json decision = {
        {"verdict", to_string(record.decision.verdict)},
        {"strategy", to_string(record.decision.strategy)},
        {"explanation", record.decision.explanation},
        {"evidence", json{{"ap", record.decision.evidence.ap},
                          {"not_ap", record.decision.evidence.not_ap},
                          {"tradeoff", record.decision.evidence.tradeoff},
                          {"uninformative", record.decision.evidence.uninformative}}},
        {"llm_generated", record.decision.llm_generated},
        {"llm_fallback", record.decision.llm_fallback},
    };

    long long prompt_total = 0, completion_total = 0;
    bool counts_complete = true;
    for (const auto& call : record.calls) {
        prompt_total += call.usage.prompt_tokens;
        completion_total += call.usage.completion_tokens;
        counts_complete = counts_complete && call.usage.tokens_reported;
    }

    json out = {
        {"schema_version", 1},
        {"target_id", record.target_id},
        {"config", config_to_json(record.config)},
        {"candidates", candidates},
        {"relevance", relevance},
        {"utility", utility},
        {"effective_price_padding", record.effective_price_padding},
        {"points", points},
        {"decision", decision},
        {"calls", calls},
        {"tokens", json{{"prompt_total", prompt_total},
                        {"completion_total", completion_total},
                        {"calls", record.calls.size()},
                        {"counts_complete", counts_complete}}},
        {"notes", record.notes},
        {"error", record.error},
    };
    if (options.include_timing)
        out["duration_ms"] = record.duration_ms;
    return out;
}

std::string records_to_jsonl(const std::vector<AssessmentRecord>& records,
                             const SerializeOptions& options) {
    std::string out;
    for (const auto& record : records) {
        out += record_to_json(record, options).dump();
        out += '\n';
    }
    return out;
}

Pipeline::Pipeline(const Catalog& catalog, PipelineConfig config)
    : Pipeline(catalog, std::move(config), nullptr) {}

Pipeline::Pipeline(const Catalog& catalog, PipelineConfig config, std::shared_ptr<Gateway> gateway)
    : catalog_(with_fallback_embeddings(catalog)), config_(std::move(config)) {
    config_.validate();
    gateway_ = gateway ? std::move(gateway) : std::make_shared<Gateway>(config_.backend);
}

AssessmentRecord Pipeline::assess_target(const std::string& target_id) {
    const auto started = std::chrono::steady_clock::now();

    AssessmentRecord record;
    record.target_id = target_id;
    record.config = config_;
    record.effective_price_padding = config_.padding.price_padding;

    const Product& target = catalog_.at(target_id);

    // stage 0: candidate retrieval
    const std::vector<NeighborCandidate> candidates = knn_neighbors(catalog_, target_id, config_.k);
    record.candidates.reserve(candidates.size());
    for (const auto& candidate : candidates)
        record.candidates.push_back({candidate, "pending"});

    std::mutex calls_mutex;
    auto log_call = [&](const std::string& stage, const std::string& neighbor_id,
                        const ChatUsage& usage) {
        std::lock_guard<std::mutex> lock(calls_mutex);
        record.calls.push_back({stage, neighbor_id, usage});
    };

    // stage (i): relevance classification, fanned out per neighbor
    std::vector<RelevanceVerdict> verdicts(candidates.size());
    std::vector<ChatUsage> relevance_usage(candidates.size());
    parallel_for_indexed(candidates.size(), config_.max_concurrency, [&](std::size_t i) {
        const Product& neighbor = catalog_.at(candidates[i].product_id);
        verdicts[i] = classify_neighbor(*gateway_, target, neighbor, &relevance_usage[i]);
    });
    for (std::size_t i = 0; i < candidates.size(); ++i)
        log_call("relevance", candidates[i].product_id, relevance_usage[i]);
    record.relevance = verdicts;

    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (verdicts[i].parse_failure) {
            record.candidates[i].status = "filtered:relevance-parse-failure";
            record.notes.push_back("relevance reply for '" + candidates[i].product_id +
                                   "' unusable; neighbor conservatively excluded");
        } else if (verdicts[i].relevance == Relevance::Irrelevant) {
            record.candidates[i].status = "filtered:irrelevant";
        }
        if (verdicts[i].explanation_overlong)
            record.notes.push_back("relevance explanation for '" + candidates[i].product_id +
                                   "' exceeds 50 words; stored intact");
    }

    const std::vector<std::string> relevant_ids = filter_relevant(verdicts, candidates);

    // stage (ii): utility comparison on relevant neighbors only
    std::vector<UtilityReport> reports(relevant_ids.size());
    std::vector<ChatUsage> utility_usage(relevant_ids.size());
    parallel_for_indexed(relevant_ids.size(), config_.max_concurrency, [&](std::size_t i) {
        const Product& neighbor = catalog_.at(relevant_ids[i]);
        reports[i] = compare_pair(*gateway_, config_.attribute_mode, target, neighbor, &utility_usage[i]);
    });
    for (std::size_t i = 0; i < relevant_ids.size(); ++i)
        log_call("utility", relevant_ids[i], utility_usage[i]);
    record.utility = reports;

    auto candidate_index = [&](const std::string& id) -> std::size_t {
        for (std::size_t i = 0; i < candidates.size(); ++i)
            if (candidates[i].product_id == id)
                return i;
        return candidates.size();
    };

    // padding: fixed from config, or proposed by the backend
    PaddingConfig effective = config_.padding;
    if (config_.padding.mode == PaddingMode::Llm) {
        std::vector<NeighborSummary> summary;
        for (const auto& report : reports) {
            if (report.valid)
                summary.push_back({report.neighbor_id, catalog_.at(report.neighbor_id).price,
                                   report.net_utility});
        }
        ChatUsage usage;
        const PaddingProposal proposal = propose_padding(*gateway_, target, summary, &usage);
        log_call("padding", "", usage);
        effective.price_padding = proposal.fraction;
        if (!proposal.note.empty())
            record.notes.push_back("padding: " + proposal.note);
    }
    record.effective_price_padding = effective.price_padding;

    // stage (iii): zone classification and decision
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const std::size_t ci = candidate_index(relevant_ids[i]);
        if (!reports[i].valid) {
            if (ci < candidates.size())
                record.candidates[ci].status = "excluded:invalid-utility";
            record.notes.push_back("utility reply for '" + relevant_ids[i] +
                                   "' unusable; neighbor excluded from decision");
            continue;
        }
        const Product& neighbor = catalog_.at(relevant_ids[i]);
        const QuadrantPoint point =
            make_point(neighbor.id, target.price, neighbor.price, reports[i].net_utility, effective);
        if (ci < candidates.size())
            record.candidates[ci].status = "decision:" + to_string(point.zone);
        record.points.push_back(point);
    }

    if (config_.decision_mode == DecisionMode::Llm) {
        ChatUsage usage;
        record.decision = llm_decide(*gateway_, config_.strategy, record.points, target.price, &usage);
        log_call("decision", "", usage);
        if (record.decision.llm_fallback)
            record.notes.push_back("llm decision unusable; deterministic " +
                                   to_string(config_.strategy) + " applied");
    } else {
        record.decision = decide(config_.strategy, record.points);
    }

    // A target whose every backend call failed carries no usable evidence.
    if (!candidates.empty() && record.points.empty()) {
        bool all_failed = true;
        for (const auto& verdict : verdicts)
            all_failed = all_failed && verdict.parse_failure;
        if (all_failed) {
            record.decision.explanation =
                "no usable evidence: all " + std::to_string(candidates.size()) +
                " relevance calls failed";
            record.notes.push_back("no usable evidence: backend failed on every neighbor");
        }
    }

    record.duration_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - started)
                             .count();
    return record;
}

std::vector<AssessmentRecord> Pipeline::assess_batch(const std::vector<std::string>& target_ids) {
    std::vector<AssessmentRecord> records;
    records.reserve(target_ids.size());
    for (const auto& id : target_ids) {
        try {
            records.push_back(assess_target(id));
        } catch (const std::exception& e) {
            AssessmentRecord failed;
            failed.target_id = id;
            failed.config = config_;
            failed.effective_price_padding = config_.padding.price_padding;
            failed.error = e.what();
            failed.decision.verdict = VerdictOutcome::Unsure;
            failed.decision.strategy = config_.strategy;
            failed.decision.explanation = "assessment failed: " + std::string(e.what());
            records.push_back(std::move(failed));
        }
    }
    return records;
}

} // namespace priceaudit
