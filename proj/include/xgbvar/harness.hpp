#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "xgbvar/estimator.hpp"
#include "xgbvar/minimax.hpp"
#include "xgbvar/types.hpp"

namespace xgbvar {

// A target regression function: either a piecewise-constant ensemble or a
// member of the packing family (selected by a sign seed).
struct PackingTarget {
    int s_bar = 1;
    int l = 1;
    double v_budget = 1.0;
    double sigma = 0.0; // family bookkeeping only; noise comes from the config
    std::uint64_t eta_seed = 0;
};

struct TargetFunction {
    // Defaults to an (invalid) packing target; configs always set `spec`.
    std::variant<PackingTarget, SparseEnsemble> spec;

    // Materialized evaluator over the experiment box.
    double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
    bool piecewise_constant() const { return std::holds_alternative<SparseEnsemble>(spec); }
    const SparseEnsemble& ensemble() const { return std::get<SparseEnsemble>(spec); }

    void materialize(const std::vector<double>& box); // builds the packing family if needed

  private:
    std::shared_ptr<PackingFamily> family_;
    std::vector<int> eta_;
};

enum class EstimatorKind { constrained, penalized, greedy };

struct ExperimentConfig {
    int d = 1;
    int s = 1;
    double v_budget = 1.0;
    double alpha = 0.0; // penalized mode
    std::vector<double> box; // widths M_j; the box is prod [-M_j/2, M_j/2]
    double sigma = 0.0;
    TargetFunction target;
    std::vector<int> n_list;
    int replicates = 1;
    std::uint64_t seed = 0;
    EstimatorKind estimator = EstimatorKind::constrained;
    BoostConfig boost; // greedy mode
    int quadrature_points = 10'000;
    int threads = 0; // 0 = hardware concurrency

    void validate() const;
};

struct RiskRow {
    int n = 0;
    double mean_risk = 0.0;
    double std_error = 0.0;
    int replicates = 0;
    int failures = 0;
};

struct RiskTable {
    std::vector<RiskRow> rows;
};

// Uniform design on the box with additive Gaussian noise; reproducible from
// (seed, n, replicate) independent of scheduling.
Dataset gen_data(const ExperimentConfig& config, int n, int replicate);

// Integrated squared error against the target under the uniform density:
// exact cellwise integration when both functions are piecewise constant,
// Monte Carlo with a dedicated quadrature stream otherwise.
double estimate_risk(const ExperimentConfig& config, const SparseEnsemble& fitted,
                     int quadrature_points = 0 /* 0 = config default */);

// Full pipeline per (n, replicate): generate, fit, score. Failures are
// recorded per row and excluded from the means.
RiskTable run_rate_experiment(const ExperimentConfig& config);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_std_error = 0.0;
    int rows_used = 0;
    bool interpolation_regime = false; // nearly-zero risks; no usable rows
};

// Least squares of log(mean risk) on log(n) over rows with positive risk.
RateFit fit_rate(const RiskTable& table);

} // namespace xgbvar
