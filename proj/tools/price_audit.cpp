// price_audit: explainable price-outlier auditing over a product catalog.
//
// Subcommands: ingest, neighbors, assess, batch, eval, sweep, cost, plot.
// Configuration precedence: built-in defaults < --config file < flags.

#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "priceaudit/catalog.hpp"
#include "priceaudit/eval_harness.hpp"
#include "priceaudit/pipeline.hpp"
#include "priceaudit/plot.hpp"

using namespace priceaudit;
using nlohmann::json;

namespace {

constexpr const char* kUsage =
    "usage: price_audit <subcommand> [options]\n"
    "\n"
    "subcommands:\n"
    "  ingest     validate a catalog file and report counts\n"
    "  neighbors  print the top-k similar products for a target\n"
    "  assess     run the three-stage assessment for one target\n"
    "  batch      assess many targets, one JSON record per line\n"
    "  eval       compute metrics over labeled sets under one config\n"
    "  sweep      run a hyperparameter grid and print the metrics table\n"
    "  cost       project audit time and cost for a workload\n"
    "  plot       render a target's quadrant chart (SVG + JSON twin)\n"
    "\n"
    "run 'price_audit <subcommand> --help' for options\n";

// flag values that override the config file when present
struct Overrides {
    std::optional<std::string> catalog_path;
    std::optional<std::string> labels_path;
    std::optional<int> k;
    std::optional<double> price_padding;
    std::optional<int> utility_padding;
    std::optional<std::string> padding_mode;
    std::optional<std::string> attribute_mode;
    std::optional<std::string> static_table_path;
    std::optional<int> top_n;
    std::optional<std::string> strategy;
    std::optional<std::string> decision_mode;
    std::optional<std::string> endpoint;
    std::optional<std::string> model;
    std::optional<std::string> credential_env;
    std::optional<int> max_concurrency;
    bool mock = false;
};

struct Resolved {
    PipelineConfig config;
    std::string catalog_path;
    std::string labels_path;
    std::string static_table_path;
};

void add_config_options(CLI::App* cmd, std::string& config_path, Overrides& o) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--catalog", o.catalog_path, "catalog file (line-delimited JSON)");
    cmd->add_option("--labels", o.labels_path, "label file (line-delimited JSON)");
    cmd->add_option("--k", o.k, "candidate neighbors to retrieve");
    cmd->add_option("--price-padding", o.price_padding, "minimum fractional price gap in [0,1)");
    cmd->add_option("--utility-padding", o.utility_padding, "similar-utility band half-width");
    cmd->add_option("--padding-mode", o.padding_mode, "fixed|llm");
    cmd->add_option("--attribute-mode", o.attribute_mode, "generic|static|dynamic|w-dynamic");
    cmd->add_option("--static-table", o.static_table_path, "category attribute table (static mode)");
    cmd->add_option("--top-n", o.top_n, "attributes selected in dynamic modes (>= 3)");
    cmd->add_option("--strategy", o.strategy, "veto|voting");
    cmd->add_option("--decision-mode", o.decision_mode, "deterministic|llm");
    cmd->add_option("--endpoint", o.endpoint, "chat-completion endpoint URL (http backend)");
    cmd->add_option("--model", o.model, "backend model name");
    cmd->add_option("--credential-env", o.credential_env, "env var holding the API credential");
    cmd->add_option("--max-concurrency", o.max_concurrency, "bound on in-flight backend calls");
    cmd->add_flag("--mock", o.mock, "use the deterministic offline backend");
}

Resolved resolve(const std::string& config_path, const Overrides& o) {
    Resolved r;
    json file = json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in)
            throw std::invalid_argument("cannot open config file '" + config_path + "'");
        try {
            in >> file;
        } catch (const json::exception& e) {
            throw std::invalid_argument("config file '" + config_path + "': " + e.what());
        }
    }

    auto str = [&](const char* key, const std::optional<std::string>& flag, std::string fallback) {
        try {
            return flag ? *flag : file.value(key, fallback);
        } catch (const json::exception&) {
            throw std::invalid_argument(std::string("config file key '") + key + "' must be a string");
        }
    };
    auto num = [&](const char* key, const auto& flag, auto fallback) {
        try {
            return flag ? *flag : file.value(key, fallback);
        } catch (const json::exception&) {
            throw std::invalid_argument(std::string("config file key '") + key + "' has the wrong type");
        }
    };

    r.catalog_path = str("catalog", o.catalog_path, "");
    r.labels_path = str("labels", o.labels_path, "");
    r.static_table_path = str("static_table", o.static_table_path, "");

    PipelineConfig& c = r.config;
    c.k = num("k", o.k, c.k);
    c.padding.price_padding = num("price_padding", o.price_padding, c.padding.price_padding);
    c.padding.utility_padding = num("utility_padding", o.utility_padding, c.padding.utility_padding);
    const std::string padding_mode = str("padding_mode", o.padding_mode, "fixed");
    if (padding_mode == "fixed")
        c.padding.mode = PaddingMode::Fixed;
    else if (padding_mode == "llm")
        c.padding.mode = PaddingMode::Llm;
    else
        throw std::invalid_argument("unknown padding mode '" + padding_mode + "'");
    c.attribute_mode.mode = attribute_mode_from_string(str("attribute_mode", o.attribute_mode, "generic"));
    c.attribute_mode.top_n = num("top_n", o.top_n, c.attribute_mode.top_n);
    c.strategy = strategy_from_string(str("strategy", o.strategy, "veto"));
    c.decision_mode = decision_mode_from_string(str("decision_mode", o.decision_mode, "deterministic"));
    c.max_concurrency = num("max_concurrency", o.max_concurrency, c.max_concurrency);

    c.backend.endpoint = str("endpoint", o.endpoint, "");
    c.backend.model_name = str("model", o.model, "mock-oracle");
    c.backend.credential_env_var = str("credential_env", o.credential_env, "PRICE_AUDIT_API_KEY");
    const bool file_mock = file.value("mock", false);
    if (o.mock || file_mock || c.backend.endpoint.empty())
        c.backend.kind = BackendKind::Mock;
    else
        c.backend.kind = BackendKind::Http;

    if (c.attribute_mode.mode == AttributeModeKind::StaticCategory) {
        if (r.static_table_path.empty())
            throw std::invalid_argument("static attribute mode needs --static-table");
        c.attribute_mode.static_table = load_static_table(r.static_table_path);
    }
    c.validate();
    return r;
}

void print_run_header(const std::string& subcommand, const Resolved& r) {
    const PipelineConfig& c = r.config;
    std::cerr << "price_audit " << subcommand << " | catalog=" << (r.catalog_path.empty() ? "-" : r.catalog_path)
              << " k=" << c.k << " price_padding=" << c.padding.price_padding
              << " utility_padding=" << c.padding.utility_padding
              << " padding_mode=" << (c.padding.mode == PaddingMode::Fixed ? "fixed" : "llm")
              << " attribute_mode=" << to_string(c.attribute_mode.mode)
              << " top_n=" << c.attribute_mode.top_n << " strategy=" << to_string(c.strategy)
              << " decision_mode=" << to_string(c.decision_mode)
              << " backend=" << (c.backend.kind == BackendKind::Mock ? "mock" : "http")
              << " model=" << c.backend.model_name << " max_concurrency=" << c.max_concurrency
              << "\n";
}

Catalog require_catalog(const Resolved& r) {
    if (r.catalog_path.empty())
        throw std::invalid_argument("a catalog is required (--catalog or config file)");
    Catalog catalog = load_catalog(r.catalog_path);
    for (const auto& warning : catalog.warnings())
        std::cerr << "warning: " << warning << "\n";
    return catalog;
}

void write_output(const std::string& out_path, const std::string& content) {
    if (out_path.empty() || out_path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write output file '" + out_path + "'");
    out << content;
    std::cerr << "wrote " << out_path << "\n";
}

std::vector<std::string> read_target_ids(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open target list '" + path + "'");
    std::vector<std::string> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (!line.empty())
            ids.push_back(line);
    }
    return ids;
}

int run_ingest(const Resolved& r) {
    const Catalog catalog = require_catalog(r);
    std::set<std::string> categories;
    std::size_t embedded = 0;
    for (const auto& product : catalog.products()) {
        categories.insert(product.category);
        embedded += product.embedding.has_value();
    }
    std::cout << "products: " << catalog.size() << "\n";
    std::cout << "categories: " << categories.size() << "\n";
    std::cout << "embedded: " << embedded << " (fallback featurizer covers the rest)\n";
    if (catalog.embedding_dim())
        std::cout << "embedding_dim: " << *catalog.embedding_dim() << "\n";
    std::cout << "warnings: " << catalog.warnings().size() << "\n";
    std::cout << "catalog OK\n";
    return 0;
}

int run_neighbors(const Resolved& r, const std::string& target_id) {
    const Catalog catalog = with_fallback_embeddings(require_catalog(r));
    const auto neighbors = knn_neighbors(catalog, target_id, r.config.k);
    std::cout << "rank\tsimilarity\tid\ttitle\n";
    for (const auto& neighbor : neighbors) {
        char sim[32];
        std::snprintf(sim, sizeof(sim), "%.5f", neighbor.similarity);
        std::cout << neighbor.rank << '\t' << sim << '\t' << neighbor.product_id << '\t'
                  << catalog.at(neighbor.product_id).title << "\n";
    }
    return 0;
}

int run_assess(const Resolved& r, const std::string& target_id, const std::string& out_path,
               bool timings) {
    const Catalog catalog = require_catalog(r);
    Pipeline pipeline(catalog, r.config);
    const AssessmentRecord record = pipeline.assess_target(target_id);
    SerializeOptions options;
    options.include_timing = timings;
    write_output(out_path, record_to_json(record, options).dump(2) + "\n");
    std::cerr << "verdict: " << to_string(record.decision.verdict) << " ("
              << record.decision.explanation << ")\n";
    return 0;
}

int run_batch(const Resolved& r, const std::string& targets_path, bool all,
              const std::string& out_path, bool timings) {
    const Catalog catalog = require_catalog(r);
    std::vector<std::string> ids;
    if (all)
        for (const auto& product : catalog.products())
            ids.push_back(product.id);
    else if (!targets_path.empty())
        ids = read_target_ids(targets_path);
    else
        throw std::invalid_argument("batch needs --targets <file> or --all");

    Pipeline pipeline(catalog, r.config);
    const auto records = pipeline.assess_batch(ids);
    SerializeOptions options;
    options.include_timing = timings;
    write_output(out_path, records_to_jsonl(records, options));

    std::size_t yes = 0, no = 0, unsure = 0, errors = 0;
    for (const auto& record : records) {
        errors += !record.error.empty();
        if (record.decision.verdict == VerdictOutcome::Yes)
            ++yes;
        else if (record.decision.verdict == VerdictOutcome::No)
            ++no;
        else
            ++unsure;
    }
    std::cerr << "assessed " << records.size() << " target(s): yes=" << yes << " no=" << no
              << " unsure=" << unsure << " errors=" << errors << "\n";
    return 0;
}

SweepGrid single_point_grid(const PipelineConfig& config) {
    SweepGrid grid;
    grid.paddings = {config.padding.price_padding};
    grid.ks = {config.k};
    grid.modes = {config.attribute_mode.mode};
    grid.strategies = {config.strategy};
    return grid;
}

int run_eval(const Resolved& r, const std::string& out_path) {
    if (r.labels_path.empty())
        throw std::invalid_argument("eval needs --labels");
    const Catalog catalog = require_catalog(r);
    const auto sets = load_labels(r.labels_path);
    const auto rows = sweep(catalog, sets, r.config, single_point_grid(r.config));
    std::cout << format_metrics_table(rows);
    std::string machine;
    for (const auto& row : rows)
        machine += metrics_row_to_json(row).dump() + "\n";
    if (!out_path.empty())
        write_output(out_path, machine);
    return rows.front().failed ? 1 : 0;
}

int run_sweep(const Resolved& r, std::vector<double> paddings, std::vector<int> ks,
              std::vector<std::string> modes, std::vector<std::string> strategies,
              const std::string& out_path) {
    if (r.labels_path.empty())
        throw std::invalid_argument("sweep needs --labels");
    const Catalog catalog = require_catalog(r);
    const auto sets = load_labels(r.labels_path);

    SweepGrid grid = single_point_grid(r.config);
    if (!paddings.empty())
        grid.paddings = std::move(paddings);
    if (!ks.empty())
        grid.ks = std::move(ks);
    if (!modes.empty()) {
        grid.modes.clear();
        for (const auto& mode : modes)
            grid.modes.push_back(attribute_mode_from_string(mode));
    }
    if (!strategies.empty()) {
        grid.strategies.clear();
        for (const auto& strategy : strategies)
            grid.strategies.push_back(strategy_from_string(strategy));
    }

    const auto rows = sweep(catalog, sets, r.config, grid);
    std::cout << format_metrics_table(rows);
    std::string machine;
    for (const auto& row : rows)
        machine += metrics_row_to_json(row).dump() + "\n";
    if (!out_path.empty())
        write_output(out_path, machine);
    return 0;
}

int run_cost(double n, const std::string& profile, std::optional<double> throughput,
             std::optional<double> unit_cost) {
    CostProfile p;
    if (profile == "agent")
        p = agent_cost_profile();
    else if (profile == "human")
        p = human_cost_profile();
    else
        throw std::invalid_argument("unknown cost profile '" + profile + "' (agent|human)");
    if (throughput)
        p.items_per_hour = *throughput;
    if (unit_cost)
        p.unit_cost = *unit_cost;
    const CostEstimate estimate = cost_time(n, p);
    std::string items = format_grouped(n);
    if (items.size() > 3 && items.compare(items.size() - 3, 3, ".00") == 0)
        items.resize(items.size() - 3);
    std::cout << "items: " << items << "\n";
    std::cout << "profile: " << profile << " (" << p.items_per_hour << " items/hour, $"
              << p.unit_cost << "/item)\n";
    std::cout << "estimated time: " << format_grouped(estimate.hours) << " h\n";
    std::cout << "estimated cost: $" << format_grouped(estimate.cost) << "\n";
    return 0;
}

int run_plot(const Resolved& r, const std::string& target_id, std::string out_path) {
    const Catalog catalog = require_catalog(r);
    Pipeline pipeline(catalog, r.config);
    const AssessmentRecord record = pipeline.assess_target(target_id);

    if (out_path.empty())
        out_path = target_id + "-quadrant.svg";
    std::string twin_path = out_path;
    if (twin_path.size() > 4 && twin_path.substr(twin_path.size() - 4) == ".svg")
        twin_path = twin_path.substr(0, twin_path.size() - 4) + ".json";
    else
        twin_path += ".json";

    write_output(out_path, render_quadrant_svg(record));
    write_output(twin_path, quadrant_plot_data(record).dump(2) + "\n");
    std::cerr << "verdict: " << to_string(record.decision.verdict) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    const std::set<std::string> known = {"ingest", "neighbors", "assess", "batch",
                                         "eval",   "sweep",     "cost",   "plot"};
    if (argc < 2) {
        std::cerr << kUsage;
        return 2;
    }
    const std::string first = argv[1];
    if (first == "--help" || first == "-h" || first == "help") {
        std::cout << kUsage;
        return 0;
    }
    if (!known.count(first)) {
        std::cerr << "unknown subcommand '" << first << "'\n\n" << kUsage;
        return 2;
    }

    CLI::App app{"explainable price-outlier auditing"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides overrides;
    std::string target_id, targets_path, out_path, cost_profile = "agent";
    bool all_targets = false, timings = false;
    double cost_n = 0.0;
    std::optional<double> cost_throughput, cost_unit;
    std::vector<double> sweep_paddings;
    std::vector<int> sweep_ks;
    std::vector<std::string> sweep_modes, sweep_strategies;

    CLI::App* ingest = app.add_subcommand("ingest", "validate a catalog file");
    add_config_options(ingest, config_path, overrides);

    CLI::App* neighbors = app.add_subcommand("neighbors", "top-k similar products");
    add_config_options(neighbors, config_path, overrides);
    neighbors->add_option("--target", target_id, "target product id")->required();

    CLI::App* assess = app.add_subcommand("assess", "assess one target");
    add_config_options(assess, config_path, overrides);
    assess->add_option("--target", target_id, "target product id")->required();
    assess->add_option("--out", out_path, "output file ('-' for stdout)");
    assess->add_flag("--timings", timings, "embed wall-clock timing in records");

    CLI::App* batch = app.add_subcommand("batch", "assess many targets");
    add_config_options(batch, config_path, overrides);
    batch->add_option("--targets", targets_path, "file with one target id per line");
    batch->add_flag("--all", all_targets, "assess every product in the catalog");
    batch->add_option("--out", out_path, "output file ('-' for stdout)");
    batch->add_flag("--timings", timings, "embed wall-clock timing in records");

    CLI::App* eval = app.add_subcommand("eval", "metrics under one configuration");
    add_config_options(eval, config_path, overrides);
    eval->add_option("--out", out_path, "machine-readable metrics output file");

    CLI::App* sweep_cmd = app.add_subcommand("sweep", "hyperparameter grid");
    add_config_options(sweep_cmd, config_path, overrides);
    sweep_cmd->add_option("--paddings", sweep_paddings, "price paddings to sweep")->delimiter(',');
    sweep_cmd->add_option("--ks", sweep_ks, "neighbor counts to sweep")->delimiter(',');
    sweep_cmd->add_option("--modes", sweep_modes, "attribute modes to sweep")->delimiter(',');
    sweep_cmd->add_option("--strategies", sweep_strategies, "strategies to sweep")->delimiter(',');
    sweep_cmd->add_option("--out", out_path, "machine-readable metrics output file");

    CLI::App* cost = app.add_subcommand("cost", "audit time/cost projection");
    cost->add_option("--n", cost_n, "number of items")->required();
    cost->add_option("--profile", cost_profile, "agent|human");
    cost->add_option("--throughput", cost_throughput, "items per hour override");
    cost->add_option("--unit-cost", cost_unit, "currency per item override");

    CLI::App* plot = app.add_subcommand("plot", "quadrant chart for one target");
    add_config_options(plot, config_path, overrides);
    plot->add_option("--target", target_id, "target product id")->required();
    plot->add_option("--out", out_path, "SVG output path (JSON twin written alongside)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (cost->parsed())
            return run_cost(cost_n, cost_profile, cost_throughput, cost_unit);

        const Resolved resolved = resolve(config_path, overrides);
        if (ingest->parsed()) {
            print_run_header("ingest", resolved);
            return run_ingest(resolved);
        }
        if (neighbors->parsed()) {
            print_run_header("neighbors", resolved);
            return run_neighbors(resolved, target_id);
        }
        if (assess->parsed()) {
            print_run_header("assess", resolved);
            return run_assess(resolved, target_id, out_path, timings);
        }
        if (batch->parsed()) {
            print_run_header("batch", resolved);
            return run_batch(resolved, targets_path, all_targets, out_path, timings);
        }
        if (eval->parsed()) {
            print_run_header("eval", resolved);
            return run_eval(resolved, out_path);
        }
        if (sweep_cmd->parsed()) {
            print_run_header("sweep", resolved);
            return run_sweep(resolved, sweep_paddings, sweep_ks, sweep_modes, sweep_strategies,
                             out_path);
        }
        if (plot->parsed()) {
            print_run_header("plot", resolved);
            return run_plot(resolved, target_id, out_path);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const CatalogError& e) {
        std::cerr << "catalog error: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const GatewayError& e) {
        std::cerr << "gateway error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << kUsage;
    return 2;
}
