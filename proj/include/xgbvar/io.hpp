#pragma once

#include <string>

#include "xgbvar/complexity.hpp"
#include "xgbvar/estimator.hpp"
#include "xgbvar/harness.hpp"
#include "xgbvar/minimax.hpp"
#include "xgbvar/types.hpp"

namespace xgbvar {

// Ensemble JSON: {"d": int, "c": double, "atoms": [{"L": [..0-based..],
// "l": [..], "U": [..], "u": [..], "coef": double}, ...]}.
std::string ensemble_to_json(const SparseEnsemble& ens);
SparseEnsemble ensemble_from_json(const std::string& text);

// Fixed field names: v_xgb, hk (anchor string -> value), v_tilde, bounds_ok, s.
std::string report_to_json(const ComplexityReport& report);

std::string fit_to_json(const FitResult& fit);

std::string risk_table_to_csv(const RiskTable& table);
std::string risk_table_to_json(const RiskTable& table);

std::string rate_fit_to_json(const RateFit& fit);

std::string family_report_to_json(const FamilyCheckReport& report);
std::string assouad_to_json(const AssouadBound& bound);

// Experiment configuration, JSON mirror of ExperimentConfig:
// {"d", "s", "v", "alpha", "box", "sigma", "n_list", "replicates", "seed",
//  "estimator": "constrained"|"penalized"|"greedy",
//  "target": {"kind": "ensemble", ...ensemble json...} |
//            {"kind": "packing", "s_bar", "l", "v", "eta_seed"},
//  optional "boost": {"rounds", "alpha", "lambda", "learning_rate", "min_gain"},
//  optional "quadrature_points", "threads"}.
ExperimentConfig experiment_config_from_json(const std::string& text);

// Packing-family configuration:
// {"s_bar", "l", "v", "box": [...], "sigma", optional "n", "seed", "pairs"}.
struct FamilyConfig {
    int s_bar = 1;
    int l = 1;
    double v_budget = 1.0;
    std::vector<double> box;
    double sigma = 1.0;
    std::int64_t n = 0; // 0 = no bound evaluation
    std::uint64_t seed = 1;
    int pairs = 8;
};
FamilyConfig family_config_from_json(const std::string& text);

} // namespace xgbvar
