#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "priceaudit/pipeline.hpp"

namespace priceaudit {

enum class SetName { Silver, OneSided, Edge, Unannotated };

std::string to_string(SetName name);
SetName set_name_from_string(const std::string& name);

enum class Label { Outlier, NotOutlier, Unlabeled };

std::string to_string(Label label);

struct LabeledItem {
    std::string product_id;
    Label label = Label::Unlabeled;
    std::vector<int> annotator_labels; // optional, 1 = outlier
};

/// One evaluation subset. Invariants: one_sided items are all
/// not_outlier, unannotated items all unlabeled, silver/edge binary.
struct LabeledSet {
    SetName name = SetName::Silver;
    std::vector<LabeledItem> items;

    void validate() const;
};

/// Loads line-delimited {product_id, set, label, annotator_labels?}
/// records, grouped per set and validated.
std::vector<LabeledSet> load_labels(const std::string& path);

struct PrfResult {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Harmonic mean of precision and recall; 0 whenever either is 0.
double f1_from_precision_recall(double precision, double recall);

/// Positive class is a Yes verdict; No and Unsure both count as negative
/// predictions. Denominator-free cases yield 0. Labels must be binary.
PrfResult precision_recall_f1(std::span<const VerdictOutcome> predictions,
                              std::span<const Label> labels);

/// Fraction of verdicts that are not Yes, on a one-sided (all
/// not_outlier) set. No and Unsure both agree with the annotators.
double agreement_rate(std::span<const VerdictOutcome> predictions, std::span<const Label> labels);

/// Fraction of Yes verdicts; input must be nonempty.
double outlier_rate(std::span<const VerdictOutcome> predictions);

/// Cohen's kappa (p_o - p_e) / (1 - p_e) over two binary label lists;
/// 1 when both observed and expected agreement are perfect.
double cohen_kappa(std::span<const int> labels_a, std::span<const int> labels_b);

/// One grid point of a hyperparameter sweep, mirroring the reported
/// metric columns: silver-set P/R/F1, edge-set P/R/F1, one-sided
/// agreement, unannotated outlier rate. Missing sets leave fields empty.
struct MetricsRow {
    PipelineConfig config;
    std::optional<PrfResult> silver;
    std::optional<PrfResult> edge;
    std::optional<double> agreement;
    std::optional<double> outlier;
    bool failed = false;
    std::string error;
};

struct SweepGrid {
    std::vector<double> paddings;
    std::vector<int> ks;
    std::vector<AttributeModeKind> modes;
    std::vector<Strategy> strategies;
};

/// Runs the pipeline over every provided set at every grid point (rows
/// ordered lexicographically: paddings, then ks, modes, strategies).
/// Per-row failures are flagged on the row, not propagated.
std::vector<MetricsRow> sweep(const Catalog& catalog, const std::vector<LabeledSet>& sets,
                              const PipelineConfig& base, const SweepGrid& grid);

nlohmann::json metrics_row_to_json(const MetricsRow& row);

/// Delimited metrics table plus the Unsure-handling disclosure header.
std::string format_metrics_table(const std::vector<MetricsRow>& rows);

struct CostEstimate {
    double hours = 0.0;
    double cost = 0.0;
};

struct CostProfile {
    double items_per_hour = 0.0;
    double unit_cost = 0.0; // currency per item
};

/// Audit throughput/cost profiles: the agent reviews 37 items/hour at
/// $0.1053/item; a human reviews 3 items/hour at $10/hour.
CostProfile agent_cost_profile();
CostProfile human_cost_profile();

/// hours = n / items_per_hour, cost = n * unit_cost. n must be >= 0.
CostEstimate cost_time(double n, const CostProfile& profile);
CostEstimate cost_time(double n, double items_per_hour, double unit_cost);

/// "%.2f" with thousands separators ("42120000" -> "42,120,000.00").
std::string format_grouped(double value);

} // namespace priceaudit
