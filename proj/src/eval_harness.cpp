#include "priceaudit/eval_harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace priceaudit {

using nlohmann::json;

std::string to_string(SetName name) {
    switch (name) {
    case SetName::Silver: return "silver";
    case SetName::OneSided: return "one_sided";
    case SetName::Edge: return "edge";
    case SetName::Unannotated: return "unannotated";
    }
    return "silver";
}

SetName set_name_from_string(const std::string& name) {
    if (name == "silver") return SetName::Silver;
    if (name == "one_sided") return SetName::OneSided;
    if (name == "edge") return SetName::Edge;
    if (name == "unannotated") return SetName::Unannotated;
    throw std::invalid_argument("unknown set name '" + name + "'");
}

std::string to_string(Label label) {
    switch (label) {
    case Label::Outlier: return "outlier";
    case Label::NotOutlier: return "not_outlier";
    case Label::Unlabeled: return "unlabeled";
    }
    return "unlabeled";
}

void LabeledSet::validate() const {
    for (const auto& item : items) {
        switch (name) {
        case SetName::OneSided:
            if (item.label != Label::NotOutlier)
                throw std::invalid_argument("one_sided item '" + item.product_id +
                                            "' must be labeled not_outlier");
            break;
        case SetName::Unannotated:
            if (item.label != Label::Unlabeled)
                throw std::invalid_argument("unannotated item '" + item.product_id +
                                            "' must be unlabeled");
            break;
        case SetName::Silver:
        case SetName::Edge:
            if (item.label == Label::Unlabeled)
                throw std::invalid_argument(to_string(name) + " item '" + item.product_id +
                                            "' must carry a binary label");
            break;
        }
    }
}

std::vector<LabeledSet> load_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open label file '" + path + "'");

    std::map<SetName, LabeledSet> by_set;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos)
            continue;
        try {
            const json record = json::parse(line);
            const SetName set = set_name_from_string(record.at("set").get<std::string>());
            LabeledItem item;
            item.product_id = record.at("product_id").get<std::string>();
            const std::string label = record.value("label", std::string("unlabeled"));
            if (label == "outlier")
                item.label = Label::Outlier;
            else if (label == "not_outlier")
                item.label = Label::NotOutlier;
            else if (label == "unlabeled")
                item.label = Label::Unlabeled;
            else
                throw std::invalid_argument("unknown label '" + label + "'");
            if (record.contains("annotator_labels"))
                for (const auto& a : record["annotator_labels"])
                    item.annotator_labels.push_back(a.get<int>());
            auto& dest = by_set[set];
            dest.name = set;
            dest.items.push_back(std::move(item));
        } catch (const std::exception& e) {
            throw std::runtime_error("label file line " + std::to_string(line_no) + ": " + e.what());
        }
    }

    std::vector<LabeledSet> sets;
    for (auto& [name, set] : by_set) {
        set.validate();
        sets.push_back(std::move(set));
    }
    return sets;
}

double f1_from_precision_recall(double precision, double recall) {
    if (precision <= 0.0 || recall <= 0.0)
        return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

PrfResult precision_recall_f1(std::span<const VerdictOutcome> predictions,
                              std::span<const Label> labels) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("predictions and labels differ in length");
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (labels[i] == Label::Unlabeled)
            throw std::invalid_argument("precision/recall needs binary labels");
        const bool predicted_yes = predictions[i] == VerdictOutcome::Yes;
        const bool actual = labels[i] == Label::Outlier;
        if (predicted_yes && actual)
            ++tp;
        else if (predicted_yes && !actual)
            ++fp;
        else if (!predicted_yes && actual)
            ++fn;
    }
    PrfResult result;
    result.precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    result.recall = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    result.f1 = f1_from_precision_recall(result.precision, result.recall);
    return result;
}

double agreement_rate(std::span<const VerdictOutcome> predictions, std::span<const Label> labels) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("predictions and labels differ in length");
    if (predictions.empty())
        throw std::invalid_argument("agreement_rate needs a nonempty set");
    for (const Label label : labels)
        if (label != Label::NotOutlier)
            throw std::invalid_argument("agreement_rate requires a one-sided (all not_outlier) set");
    long agreeing = 0;
    for (const VerdictOutcome verdict : predictions)
        if (verdict != VerdictOutcome::Yes)
            ++agreeing;
    return static_cast<double>(agreeing) / static_cast<double>(predictions.size());
}

double outlier_rate(std::span<const VerdictOutcome> predictions) {
    if (predictions.empty())
        throw std::invalid_argument("outlier_rate needs a nonempty input");
    long yes = 0;
    for (const VerdictOutcome verdict : predictions)
        if (verdict == VerdictOutcome::Yes)
            ++yes;
    return static_cast<double>(yes) / static_cast<double>(predictions.size());
}

double cohen_kappa(std::span<const int> labels_a, std::span<const int> labels_b) {
    if (labels_a.size() != labels_b.size())
        throw std::invalid_argument("kappa label lists differ in length");
    if (labels_a.empty())
        throw std::invalid_argument("kappa needs nonempty lists");
    const double n = static_cast<double>(labels_a.size());
    long agree = 0, a_pos = 0, b_pos = 0;
    for (std::size_t i = 0; i < labels_a.size(); ++i) {
        const bool a = labels_a[i] != 0;
        const bool b = labels_b[i] != 0;
        if (a == b)
            ++agree;
        a_pos += a;
        b_pos += b;
    }
    const double po = agree / n;
    const double pe = (a_pos / n) * (b_pos / n) + ((n - a_pos) / n) * ((n - b_pos) / n);
    if (pe == 1.0)
        return po == 1.0 ? 1.0 : 0.0;
    return (po - pe) / (1.0 - pe);
}

namespace {

std::vector<VerdictOutcome> verdicts_for(Pipeline& pipeline, const LabeledSet& set) {
    std::vector<std::string> ids;
    ids.reserve(set.items.size());
    for (const auto& item : set.items)
        ids.push_back(item.product_id);
    const auto records = pipeline.assess_batch(ids);
    std::size_t errors = 0;
    std::string first_error;
    std::vector<VerdictOutcome> verdicts;
    verdicts.reserve(ids.size());
    for (const auto& record : records) {
        if (!record.error.empty() && ++errors == 1)
            first_error = record.error;
        verdicts.push_back(record.decision.verdict);
    }
    // isolated per-target failures degrade to Unsure; a set where every
    // assessment failed is a systemic problem and fails the row
    if (!records.empty() && errors == records.size())
        throw std::runtime_error("all " + std::to_string(errors) + " assessments of set '" +
                                 to_string(set.name) + "' failed: " + first_error);
    return verdicts;
}

std::vector<Label> labels_of(const LabeledSet& set) {
    std::vector<Label> labels;
    labels.reserve(set.items.size());
    for (const auto& item : set.items)
        labels.push_back(item.label);
    return labels;
}

} // namespace

std::vector<MetricsRow> sweep(const Catalog& catalog, const std::vector<LabeledSet>& sets,
                              const PipelineConfig& base, const SweepGrid& grid) {
    if (grid.paddings.empty() || grid.ks.empty() || grid.modes.empty() || grid.strategies.empty())
        throw std::invalid_argument("sweep grid must be nonempty in every dimension");

    std::vector<MetricsRow> rows;
    for (const double padding : grid.paddings) {
        for (const int k : grid.ks) {
            for (const AttributeModeKind mode : grid.modes) {
                for (const Strategy strategy : grid.strategies) {
                    MetricsRow row;
                    row.config = base;
                    row.config.padding.price_padding = padding;
                    row.config.k = k;
                    row.config.attribute_mode.mode = mode;
                    row.config.strategy = strategy;
                    try {
                        Pipeline pipeline(catalog, row.config);
                        for (const LabeledSet& set : sets) {
                            const auto verdicts = verdicts_for(pipeline, set);
                            const auto labels = labels_of(set);
                            switch (set.name) {
                            case SetName::Silver:
                                row.silver = precision_recall_f1(verdicts, labels);
                                break;
                            case SetName::Edge:
                                row.edge = precision_recall_f1(verdicts, labels);
                                break;
                            case SetName::OneSided:
                                row.agreement = agreement_rate(verdicts, labels);
                                break;
                            case SetName::Unannotated:
                                row.outlier = outlier_rate(verdicts);
                                break;
                            }
                        }
                    } catch (const std::exception& e) {
                        row.failed = true;
                        row.error = e.what();
                    }
                    rows.push_back(std::move(row));
                }
            }
        }
    }
    return rows;
}

json metrics_row_to_json(const MetricsRow& row) {
    json out = {{"config", config_to_json(row.config)}, {"failed", row.failed}};
    if (row.failed)
        out["error"] = row.error;
    if (row.silver)
        out["silver"] = json{{"precision", row.silver->precision},
                             {"recall", row.silver->recall},
                             {"f1", row.silver->f1}};
    if (row.edge)
        out["edge"] = json{{"precision", row.edge->precision},
                           {"recall", row.edge->recall},
                           {"f1", row.edge->f1}};
    if (row.agreement)
        out["agreement"] = *row.agreement;
    if (row.outlier)
        out["outlier_rate"] = *row.outlier;
    return out;
}

namespace {

std::string cell(const std::optional<double>& value) {
    if (!value)
        return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", *value);
    return buf;
}

} // namespace

std::string format_metrics_table(const std::vector<MetricsRow>& rows) {
    std::ostringstream out;
    out << "# Unsure verdicts count as negative predictions (and as agreement on one-sided sets).\n";
    out << "padding\tk\tmode\tstrategy\tss_f1\tss_pre\tss_rec\tec_f1\tec_pre\tec_rec\tagreement\toutlier_rate\tstatus\n";
    for (const auto& row : rows) {
        char padding[16];
        std::snprintf(padding, sizeof(padding), "%.2f", row.config.padding.price_padding);
        out << padding << '\t' << row.config.k << '\t' << to_string(row.config.attribute_mode.mode)
            << '\t' << to_string(row.config.strategy) << '\t';
        auto prf = [&](const std::optional<PrfResult>& r) {
            if (!r)
                return std::string("-\t-\t-");
            return cell(r->f1) + "\t" + cell(r->precision) + "\t" + cell(r->recall);
        };
        out << prf(row.silver) << '\t' << prf(row.edge) << '\t' << cell(row.agreement) << '\t'
            << cell(row.outlier) << '\t' << (row.failed ? "error: " + row.error : "ok") << '\n';
    }
    return out.str();
}

CostProfile agent_cost_profile() { return {37.0, 0.1053}; }

CostProfile human_cost_profile() { return {3.0, 10.0 / 3.0}; }

CostEstimate cost_time(double n, const CostProfile& profile) {
    return cost_time(n, profile.items_per_hour, profile.unit_cost);
}

CostEstimate cost_time(double n, double items_per_hour, double unit_cost) {
    if (n < 0.0)
        throw std::invalid_argument("item count must be nonnegative");
    if (items_per_hour <= 0.0)
        throw std::invalid_argument("throughput must be positive");
    return {n / items_per_hour, n * unit_cost};
}

std::string format_grouped(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", value);
    std::string digits(buf);
    const std::size_t dot = digits.find('.');
    std::size_t start = digits.size() > 0 && (digits[0] == '-' || digits[0] == '+') ? 1 : 0;
    std::size_t end = dot == std::string::npos ? digits.size() : dot;
    std::string grouped;
    for (std::size_t i = start; i < end; ++i) {
        if (i > start && (end - i) % 3 == 0)
            grouped += ',';
        grouped += digits[i];
    }
    return digits.substr(0, start) + grouped + digits.substr(end);
}

} // namespace priceaudit
