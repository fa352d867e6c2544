#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "xgbvar/errors.hpp"

namespace xgbvar {

// min c'x  s.t.  A x = b,  x_j >= 0 for j with free[j] == false.
struct LinearProgram {
    Eigen::VectorXd objective;
    Eigen::MatrixXd eq_matrix;
    Eigen::VectorXd eq_rhs;
    std::vector<bool> free_vars; // empty means all variables nonnegative
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpSolution {
    Eigen::VectorXd primal;
    Eigen::VectorXd dual;
    double objective_value = 0.0;
    LpStatus status = LpStatus::optimal;
    int iterations = 0;
    // Certificate residuals, filled when status == optimal:
    double primal_residual = 0.0; // ||A x - b||_inf
    double dual_residual = 0.0;   // max violation of reduced-cost signs
    double duality_gap = 0.0;     // |c'x - b'y|
};

// Dense two-phase primal simplex with Bland's rule. Feasibility and
// optimality tolerances are 1e-9. Throws BudgetError when the tableau
// exceeds the entry budget and std::runtime_error on numerical breakdown.
LpSolution solve_lp(const LinearProgram& lp);

struct BasisPursuitResult {
    double constant = 0.0;
    Eigen::VectorXd beta;
    double value = 0.0; // sum |beta_j|, the exact minimum
    LpSolution certificate;
};

// min ||beta||_1  s.t.  X beta + c 1 = z  with c free.
// Throws InfeasibleError when the affine system has no solution.
BasisPursuitResult basis_pursuit(const Eigen::MatrixXd& X, const Eigen::VectorXd& z);

} // namespace xgbvar
