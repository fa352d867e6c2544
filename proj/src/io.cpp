#include "xgbvar/io.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

namespace xgbvar {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json atom_to_json(const BasisAtom& atom, double coef) {
    ordered_json a;
    a["L"] = atom.lower_coords;
    a["l"] = atom.lower_thresholds;
    a["U"] = atom.upper_coords;
    a["u"] = atom.upper_thresholds;
    a["coef"] = coef;
    return a;
}

json parse_or_throw(const std::string& text, const char* who) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(who) + ": malformed JSON: " + e.what());
    }
}

} // namespace

std::string ensemble_to_json(const SparseEnsemble& ens) {
    ordered_json doc;
    doc["d"] = ens.dims();
    doc["c"] = ens.constant();
    doc["atoms"] = ordered_json::array();
    for (const auto& [atom, coef] : ens.atoms()) doc["atoms"].push_back(atom_to_json(atom, coef));
    return doc.dump(2);
}

SparseEnsemble ensemble_from_json(const std::string& text) {
    const json doc = parse_or_throw(text, "ensemble_from_json");
    try {
        SparseEnsemble ens(doc.at("d").get<int>(), doc.value("c", 0.0));
        for (const json& a : doc.value("atoms", json::array())) {
            BasisAtom atom;
            atom.lower_coords = a.value("L", std::vector<int>{});
            atom.lower_thresholds = a.value("l", std::vector<double>{});
            atom.upper_coords = a.value("U", std::vector<int>{});
            atom.upper_thresholds = a.value("u", std::vector<double>{});
            ens.add_atom(std::move(atom), a.at("coef").get<double>());
        }
        return ens;
    } catch (const json::exception& e) {
        throw ParseError(std::string("ensemble_from_json: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("ensemble_from_json: ") + e.what());
    }
}

std::string report_to_json(const ComplexityReport& report) {
    ordered_json doc;
    doc["v_xgb"] = report.v_xgb;
    ordered_json hk;
    for (const auto& [anchor, value] : report.hk) hk[anchor] = value;
    doc["hk"] = hk;
    if (report.v_tilde)
        doc["v_tilde"] = *report.v_tilde;
    else
        doc["v_tilde"] = nullptr;
    doc["bounds_ok"] = report.bounds_ok;
    doc["s"] = report.s_used;
    return doc.dump(2);
}

std::string fit_to_json(const FitResult& fit) {
    ordered_json doc;
    doc["mode"] = fit.mode;
    doc["c"] = fit.constant;
    doc["beta"] = ordered_json::array();
    for (std::size_t k = 0; k < fit.atoms.size(); ++k) {
        ordered_json entry = atom_to_json(fit.atoms[k], fit.coefficients[k]);
        entry["column"] = fit.columns[k];
        doc["beta"].push_back(entry);
    }
    doc["rss"] = fit.rss;
    doc["objective"] = fit.objective;
    doc["active_l1"] = fit.active_l1;
    doc["kkt_residual"] = fit.kkt_residual;
    doc["iterations"] = fit.iterations;
    doc["converged"] = fit.converged;
    if (fit.mode == "constrained") doc["v"] = fit.v_budget;
    if (fit.mode == "penalized") doc["alpha"] = fit.alpha;
    return doc.dump(2);
}

namespace {

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

} // namespace

std::string risk_table_to_csv(const RiskTable& table) {
    std::ostringstream out;
    out << "n,mean_risk,stderr,replicates\n";
    for (const auto& row : table.rows)
        out << row.n << ',' << format_double(row.mean_risk) << ',' << format_double(row.std_error)
            << ',' << row.replicates << '\n';
    return out.str();
}

std::string risk_table_to_json(const RiskTable& table) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : table.rows) {
        ordered_json r;
        r["n"] = row.n;
        r["mean_risk"] = row.mean_risk;
        r["stderr"] = row.std_error;
        r["replicates"] = row.replicates;
        r["failures"] = row.failures;
        rows.push_back(r);
    }
    ordered_json doc;
    doc["rows"] = rows;
    return doc.dump(2);
}

std::string rate_fit_to_json(const RateFit& fit) {
    ordered_json doc;
    if (fit.interpolation_regime) {
        doc["interpolation"] = true;
        doc["slope"] = nullptr;
    } else {
        doc["interpolation"] = false;
        doc["slope"] = fit.slope;
        doc["intercept"] = fit.intercept;
        doc["r_squared"] = fit.r_squared;
        doc["slope_stderr"] = fit.slope_std_error;
        doc["rows_used"] = fit.rows_used;
    }
    return doc.dump(2);
}

std::string family_report_to_json(const FamilyCheckReport& report) {
    ordered_json doc;
    doc["haar_orthonormal"] = report.haar_orthonormal;
    doc["haar_max_error"] = report.haar_max_error;
    doc["inner_products_ok"] = report.inner_products_ok;
    doc["inner_product_max_error"] = report.inner_product_max_error;
    doc["mass_ok"] = report.mass_ok;
    doc["max_mass"] = report.max_mass;
    doc["near_distance_ok"] = report.near_distance_ok;
    doc["near_distance_margin"] = report.near_distance_margin;
    doc["far_distance_ok"] = report.far_distance_ok;
    doc["far_distance_margin"] = report.far_distance_margin;
    doc["bessel_ok"] = report.bessel_ok;
    doc["bessel_max_error"] = report.bessel_max_error;
    doc["sampled_pairs"] = report.sampled_pairs;
    doc["all_ok"] = report.all_ok();
    return doc.dump(2);
}

std::string assouad_to_json(const AssouadBound& bound) {
    ordered_json doc;
    doc["bound"] = bound.bound;
    doc["under_threshold"] = bound.under_threshold;
    doc["l"] = bound.l;
    doc["q"] = bound.q;
    doc["sample_threshold"] = bound.sample_threshold;
    return doc.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
    const json doc = parse_or_throw(text, "experiment_config_from_json");
    ExperimentConfig config;
    try {
        config.d = doc.at("d").get<int>();
        config.s = doc.at("s").get<int>();
        config.v_budget = doc.value("v", 1.0);
        config.alpha = doc.value("alpha", 0.0);
        config.box = doc.at("box").get<std::vector<double>>();
        config.sigma = doc.value("sigma", 0.0);
        config.n_list = doc.at("n_list").get<std::vector<int>>();
        config.replicates = doc.value("replicates", 1);
        // Reproducibility is contractual: no wall-clock fallback.
        config.seed = doc.at("seed").get<std::uint64_t>();
        config.quadrature_points = doc.value("quadrature_points", 10'000);
        config.threads = doc.value("threads", 0);
        const std::string estimator = doc.value("estimator", std::string("constrained"));
        if (estimator == "constrained")
            config.estimator = EstimatorKind::constrained;
        else if (estimator == "penalized")
            config.estimator = EstimatorKind::penalized;
        else if (estimator == "greedy")
            config.estimator = EstimatorKind::greedy;
        else
            throw ParseError("experiment_config_from_json: unknown estimator '" + estimator + "'");
        if (doc.contains("boost")) {
            const json& b = doc["boost"];
            config.boost.rounds = b.value("rounds", 0);
            config.boost.alpha = b.value("alpha", 0.0);
            config.boost.lambda = b.value("lambda", 0.0);
            config.boost.learning_rate = b.value("learning_rate", 1.0);
            config.boost.min_gain = b.value("min_gain", 0.0);
        }
        const json& target = doc.at("target");
        const std::string kind = target.at("kind").get<std::string>();
        if (kind == "ensemble") {
            config.target.spec = ensemble_from_json(target.dump());
        } else if (kind == "packing") {
            PackingTarget packing;
            packing.s_bar = target.at("s_bar").get<int>();
            packing.l = target.at("l").get<int>();
            packing.v_budget = target.value("v", config.v_budget);
            packing.eta_seed = target.value("eta_seed", static_cast<std::uint64_t>(0));
            config.target.spec = packing;
        } else {
            throw ParseError("experiment_config_from_json: unknown target kind '" + kind + "'");
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("experiment_config_from_json: ") + e.what());
    }
    return config;
}

FamilyConfig family_config_from_json(const std::string& text) {
    const json doc = parse_or_throw(text, "family_config_from_json");
    FamilyConfig config;
    try {
        config.s_bar = doc.at("s_bar").get<int>();
        config.l = doc.at("l").get<int>();
        config.v_budget = doc.value("v", 1.0);
        config.box = doc.value("box", std::vector<double>{});
        if (config.box.empty()) config.box.assign(static_cast<std::size_t>(config.s_bar), 1.0);
        config.sigma = doc.value("sigma", 1.0);
        config.n = doc.value("n", static_cast<std::int64_t>(0));
        config.seed = doc.value("seed", static_cast<std::uint64_t>(1));
        config.pairs = doc.value("pairs", 8);
    } catch (const json::exception& e) {
        throw ParseError(std::string("family_config_from_json: ") + e.what());
    }
    return config;
}

} // namespace xgbvar
