#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "priceaudit/catalog.hpp"
#include "priceaudit/decision_engine.hpp"
#include "priceaudit/llm_gateway.hpp"
#include "priceaudit/relevance_agent.hpp"
#include "priceaudit/utility_agent.hpp"

namespace priceaudit {

enum class DecisionMode { Deterministic, Llm };

std::string to_string(DecisionMode mode);
DecisionMode decision_mode_from_string(const std::string& name);

struct PipelineConfig {
    int k = 7;
    PaddingConfig padding;
    AttributeMode attribute_mode;
    Strategy strategy = Strategy::Veto;
    DecisionMode decision_mode = DecisionMode::Deterministic;
    BackendConfig backend;
    int max_concurrency = 4;

    void validate() const;
};

nlohmann::json config_to_json(const PipelineConfig& config);

/// One candidate with the reason it did or did not reach the decision
/// stage ("decision:<zone>", "filtered:irrelevant",
/// "filtered:relevance-parse-failure", "excluded:invalid-utility").
struct CandidateTrace {
    NeighborCandidate candidate;
    std::string status;
};

/// One backend call's accounting inside an assessment.
struct CallTrace {
    std::string stage; // relevance | utility | padding | decision
    std::string neighbor_id;
    ChatUsage usage;
};

/// Complete replayable trace of one target assessment.
struct AssessmentRecord {
    std::string target_id;
    PipelineConfig config;
    std::vector<CandidateTrace> candidates;
    std::vector<RelevanceVerdict> relevance;
    std::vector<UtilityReport> utility;
    double effective_price_padding = 0.0;
    std::vector<QuadrantPoint> points;
    Decision decision;
    std::vector<CallTrace> calls;
    std::vector<std::string> notes;
    std::string error; // nonempty only for isolated per-target failures
    double duration_ms = 0.0;
};

struct SerializeOptions {
    // Volatile wall-clock timing is kept out of the canonical record so
    // that identical inputs serialize byte-identically; opt in to embed it.
    bool include_timing = false;
};

nlohmann::json record_to_json(const AssessmentRecord& record, const SerializeOptions& options = {});

/// One JSON object per record, one per line.
std::string records_to_jsonl(const std::vector<AssessmentRecord>& records,
                             const SerializeOptions& options = {});

/// Runs the three-stage assessment under one configuration. The catalog
/// is copied with fallback embeddings filled in and is immutable from
/// then on; assessments are safe to run from multiple threads.
class Pipeline {
public:
    Pipeline(const Catalog& catalog, PipelineConfig config);
    Pipeline(const Catalog& catalog, PipelineConfig config, std::shared_ptr<Gateway> gateway);

    /// Full trace for one target. Throws CatalogError on an unknown id.
    AssessmentRecord assess_target(const std::string& target_id);

    /// One record per id, output order = input order. Per-target failures
    /// are isolated into that target's record instead of propagating.
    std::vector<AssessmentRecord> assess_batch(const std::vector<std::string>& target_ids);

    const Catalog& catalog() const { return catalog_; }
    const PipelineConfig& config() const { return config_; }
    Gateway& gateway() { return *gateway_; }

private:
    Catalog catalog_;
    PipelineConfig config_;
    std::shared_ptr<Gateway> gateway_;
};

} // namespace priceaudit
