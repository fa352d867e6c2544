#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "xgbvar/complexity.hpp"
#include "xgbvar/errors.hpp"
#include "xgbvar/estimator.hpp"
#include "xgbvar/harness.hpp"
#include "xgbvar/ingest.hpp"
#include "xgbvar/io.hpp"
#include "xgbvar/minimax.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitBudget = 3;
constexpr int kExitUsage = 64;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw xgbvar::ParseError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw xgbvar::ParseError("cannot open output file: " + out_path);
    out << text;
}

// Accepts either a serialized ensemble ({"d", "c", "atoms"}) or an XGBoost
// JSON dump (array of trees, or {"trees": [...]}).
xgbvar::SparseEnsemble load_model(const std::string& path) {
    const std::string text = read_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw xgbvar::ParseError(std::string("model: malformed JSON: ") + e.what());
    }
    if (doc.is_object() && doc.contains("atoms")) return xgbvar::ensemble_from_json(text);
    return xgbvar::dump_to_ensemble(xgbvar::parse_xgb_dump(text));
}

int run(int argc, char** argv) {
    CLI::App app{"Depth-bounded tree-ensemble complexity, lattice least squares, "
                 "and rate experiments"};
    app.require_subcommand(1);

    // complexity
    auto* cmd_complexity = app.add_subcommand(
        "complexity", "L1 complexity and Hardy-Krause report for a model or ensemble");
    std::string model_path, out_path;
    int s = 2;
    bool no_v_tilde = false;
    cmd_complexity->add_option("model", model_path, "model dump or ensemble JSON")->required();
    cmd_complexity->add_option("--s", s, "depth bound")->check(CLI::PositiveNumber);
    cmd_complexity->add_option("--out", out_path, "output path (default stdout)");
    cmd_complexity->add_flag("--no-v-tilde", no_v_tilde, "skip the disjoint-split variant");

    // fit
    auto* cmd_fit = app.add_subcommand("fit", "least squares over the midpoint lattice");
    std::string data_path, response = "y", mode = "constrained", fit_out;
    int fit_s = 2;
    double v_budget = 1.0, alpha = 0.0;
    int rounds = 50;
    double learning_rate = 0.3, min_gain = 0.0, lambda = 0.0;
    std::uint64_t fit_seed = 0;
    cmd_fit->add_option("data", data_path, "CSV dataset")->required();
    cmd_fit->add_option("--response", response, "response column name");
    cmd_fit->add_option("--s", fit_s, "depth bound")->check(CLI::PositiveNumber);
    cmd_fit->add_option("--v", v_budget, "L1 budget (constrained / dual-alpha)");
    cmd_fit->add_option("--alpha", alpha, "L1 penalty (penalized / greedy)");
    cmd_fit->add_option("--mode", mode, "constrained | penalized | greedy | dual-alpha");
    cmd_fit->add_option("--rounds", rounds, "greedy boosting rounds");
    cmd_fit->add_option("--learning-rate", learning_rate, "greedy learning rate");
    cmd_fit->add_option("--min-gain", min_gain, "greedy minimum split gain");
    cmd_fit->add_option("--lambda", lambda, "greedy L2 leaf penalty");
    cmd_fit->add_option("--seed", fit_seed, "seed (unused by deterministic fits)");
    cmd_fit->add_option("--out", fit_out, "output path (default stdout)");

    // rate
    auto* cmd_rate = app.add_subcommand("rate", "Monte Carlo risk table and log-log slope");
    std::string config_path, rate_out, slope_out, format = "csv";
    std::int64_t seed_override = -1;
    cmd_rate->add_option("config", config_path, "experiment config JSON")->required();
    cmd_rate->add_option("--out", rate_out, "risk table output path (default stdout)");
    cmd_rate->add_option("--slope-out", slope_out, "slope JSON output path");
    cmd_rate->add_option("--format", format, "table format: csv | json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd_rate->add_option("--seed", seed_override, "override the config seed");

    // lowerbound
    auto* cmd_lower = app.add_subcommand(
        "lowerbound", "packing-family checks and the Assouad risk lower bound");
    std::string family_path, lower_out;
    cmd_lower->add_option("config", family_path, "family config JSON")->required();
    cmd_lower->add_option("--out", lower_out, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (cmd_complexity->parsed()) {
        const xgbvar::SparseEnsemble ens = load_model(model_path);
        const xgbvar::ComplexityReport report =
            xgbvar::complexity_report(ens, s, !no_v_tilde);
        write_output(xgbvar::report_to_json(report), out_path);
        return kExitOk;
    }

    if (cmd_fit->parsed()) {
        const xgbvar::Dataset data = xgbvar::load_dataset(read_file(data_path), response);
        std::string payload;
        if (mode == "constrained") {
            payload = xgbvar::fit_to_json(xgbvar::constrained_lse(data, fit_s, v_budget));
        } else if (mode == "penalized") {
            payload = xgbvar::fit_to_json(xgbvar::penalized_lse(data, fit_s, alpha));
        } else if (mode == "dual-alpha") {
            const xgbvar::FitResult constrained =
                xgbvar::constrained_lse(data, fit_s, v_budget);
            const double a = xgbvar::dual_alpha_from_fit(data, fit_s, constrained);
            xgbvar::FitResult fit = xgbvar::penalized_lse(data, fit_s, a);
            payload = xgbvar::fit_to_json(fit);
        } else if (mode == "greedy") {
            xgbvar::BoostConfig config;
            config.max_depth = fit_s;
            config.alpha = alpha;
            config.lambda = lambda;
            config.rounds = rounds;
            config.learning_rate = learning_rate;
            config.min_gain = min_gain;
            const auto trees = xgbvar::greedy_boost(data, config);
            xgbvar::SparseEnsemble ens(data.d(), 0.0);
            for (const auto& tree : trees)
                ens = ens.axpy(1.0, xgbvar::tree_to_ensemble(tree, data.d()));
            nlohmann::ordered_json doc;
            doc["mode"] = "greedy";
            doc["trees"] = trees.size();
            doc["objective"] = xgbvar::objective_value(data, ens, alpha);
            doc["ensemble"] = nlohmann::json::parse(xgbvar::ensemble_to_json(ens));
            payload = doc.dump(2);
        } else {
            std::cerr << "unknown mode: " << mode << "\n";
            return kExitUsage;
        }
        write_output(payload, fit_out);
        return kExitOk;
    }

    if (cmd_rate->parsed()) {
        xgbvar::ExperimentConfig config =
            xgbvar::experiment_config_from_json(read_file(config_path));
        if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);
        const xgbvar::RiskTable table = xgbvar::run_rate_experiment(config);
        write_output(format == "csv" ? xgbvar::risk_table_to_csv(table)
                                     : xgbvar::risk_table_to_json(table),
                     rate_out);
        const xgbvar::RateFit rate = xgbvar::fit_rate(table);
        if (!slope_out.empty()) write_output(xgbvar::rate_fit_to_json(rate), slope_out);
        return kExitOk;
    }

    if (cmd_lower->parsed()) {
        const xgbvar::FamilyConfig config =
            xgbvar::family_config_from_json(read_file(family_path));
        xgbvar::PackingFamily family(config.s_bar, config.l, config.v_budget, config.box,
                                     config.sigma);
        const xgbvar::FamilyCheckReport report =
            xgbvar::family_checks(family, config.pairs, config.seed);
        nlohmann::ordered_json doc =
            nlohmann::ordered_json::parse(xgbvar::family_report_to_json(report));
        if (config.n > 0) {
            const xgbvar::AssouadBound bound = xgbvar::assouad_bound(family, config.n);
            doc["assouad"] = nlohmann::ordered_json::parse(xgbvar::assouad_to_json(bound));
        }
        write_output(doc.dump(2), lower_out);
        return kExitOk;
    }

    return kExitUsage;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const xgbvar::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const xgbvar::InfeasibleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const xgbvar::BudgetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBudget;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    }
}
