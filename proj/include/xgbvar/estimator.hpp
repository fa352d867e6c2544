#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "xgbvar/design.hpp"
#include "xgbvar/types.hpp"

namespace xgbvar {

struct FitResult {
    double constant = 0.0;
    // Nonzero coefficients over the midpoint index set.
    std::vector<std::int64_t> columns;
    std::vector<BasisAtom> atoms;
    std::vector<double> coefficients;
    double rss = 0.0;
    double objective = 0.0; // rss, plus alpha * active_l1 for penalized fits
    double active_l1 = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
    bool converged = true;
    std::string mode;
    double v_budget = 0.0;
    double alpha = 0.0;

    SparseEnsemble to_ensemble(int dims) const;
};

// Replaces every threshold by the data-equivalent midpoint: a lower
// threshold in (v_m, v_{m+1}] snaps to the m-th midpoint, one at or below
// the smallest value drops out of L, one above the largest value kills the
// atom (dually for upper thresholds). Emptied atoms fold into the constant.
// The result agrees with the input at every grid value combination and its
// weight never increases. Atoms must satisfy |L|+|U| <= s.
SparseEnsemble snap_to_midpoints(const SparseEnsemble& ens, const Grid& grid, int s);

struct SolverOptions {
    double tol_rel_obj = 1e-10;  // inner stop on relative objective change
    int max_inner_iterations = 50'000;
    int max_outer_iterations = 400; // active-set expansions
    double kkt_tol = 1e-8;          // violation tolerance for expansion
    std::int64_t table_budget = 32'000'000;
};

// Least squares over the midpoint class subject to ||beta||_1 <= V, with a
// free intercept. The inner solver is accelerated proximal gradient with
// exact Euclidean projection onto the L1 ball; columns are activated lazily
// from the full gradient and the face is polished by an equality-constrained
// solve. kkt_residual is measured on the full column set.
FitResult constrained_lse(const Dataset& data, int s, double v_budget,
                          const SolverOptions& options = {});

// Least squares plus alpha * ||beta||_1 with a free intercept, solved by
// proximal gradient with soft-thresholding and an exact intercept update.
FitResult penalized_lse(const Dataset& data, int s, double alpha,
                        const SolverOptions& options = {});

// The penalty level at which the penalized problem reproduces a constrained
// optimum: max_j |2 X_j' r| at the constrained solution when the budget is
// tight, 0 when it is slack.
double dual_alpha(const Dataset& data, int s, double v_budget,
                  const SolverOptions& options = {});
double dual_alpha_from_fit(const Dataset& data, int s, const FitResult& constrained_fit,
                           const SolverOptions& options = {});

struct BoostConfig {
    int max_depth = 6;
    double alpha = 0.0;
    double lambda = 0.0;
    int rounds = 0;
    double learning_rate = 1.0;
    double min_gain = 0.0;
};

// Exact greedy second-order boosting with squared loss, L1-shrunk leaf
// weights, and split thresholds restricted to the data midpoints. The first
// returned tree is the constant initialization at mean(y). Ties are broken
// by lowest coordinate, then lowest threshold. Leaf weights are stored
// already scaled by the learning rate.
std::vector<RegressionTree> greedy_boost(const Dataset& data, const BoostConfig& config);

// Sum of squared residuals plus alpha times the ensemble weight.
double objective_value(const Dataset& data, const SparseEnsemble& ens, double alpha);

// Euclidean projection onto the L1 ball of radius `radius` (in place).
void project_l1_ball(Eigen::Ref<Eigen::VectorXd> v, double radius);

} // namespace xgbvar
