#include "xgbvar/lp.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>

namespace xgbvar {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kOptTol = 1e-9;
constexpr double kPivotTol = 1e-11;

// Primal simplex on min c'x s.t. Ax = b, x >= 0, with Bland's rule and an
// explicit basis inverse refreshed periodically. `basis` holds the initial
// basic variable per row and is updated in place. Columns listed in
// `blocked` may not enter the basis (used to keep artificials out in
// phase 2). Returns false if unbounded.
bool primal_simplex(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                    const Eigen::VectorXd& c, std::vector<int>& basis,
                    const std::vector<bool>& blocked, Eigen::MatrixXd& Binv,
                    Eigen::VectorXd& xB, Eigen::VectorXd& y, int& iterations) {
    const int m = static_cast<int>(A.rows());
    const int n = static_cast<int>(A.cols());
    const int max_iters = 2000 + 60 * (m + n);
    const int refresh_every = 150;

    auto refactorize = [&]() {
        Eigen::MatrixXd B(m, m);
        for (int r = 0; r < m; ++r) B.col(r) = A.col(basis[r]);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
        if (!lu.isInvertible())
            throw std::runtime_error("solve_lp: singular basis during refactorization");
        Binv = lu.inverse();
        xB = Binv * b;
    };

    for (int it = 0; it < max_iters; ++it) {
        if (it % refresh_every == 0 && it > 0) refactorize();
        // Dual prices and reduced costs.
        Eigen::VectorXd cB(m);
        for (int r = 0; r < m; ++r) cB[r] = c[basis[r]];
        y = Binv.transpose() * cB;
        // Bland: first non-basic, non-blocked column with negative reduced cost.
        std::vector<char> in_basis(n, 0);
        for (int r = 0; r < m; ++r) in_basis[basis[r]] = 1;
        int enter = -1;
        for (int j = 0; j < n; ++j) {
            if (in_basis[j] || blocked[j]) continue;
            const double rc = c[j] - y.dot(A.col(j));
            if (rc < -kOptTol) {
                enter = j;
                break;
            }
        }
        if (enter < 0) {
            iterations += it;
            return true; // optimal
        }
        const Eigen::VectorXd u = Binv * A.col(enter);
        // Ratio test; Bland tie-break on smallest basic variable index.
        int leave = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int r = 0; r < m; ++r) {
            if (u[r] > kPivotTol) {
                const double ratio = std::max(xB[r], 0.0) / u[r];
                if (ratio < best_ratio - kPivotTol ||
                    (ratio < best_ratio + kPivotTol &&
                     (leave < 0 || basis[r] < basis[leave]))) {
                    best_ratio = ratio;
                    leave = r;
                }
            }
        }
        if (leave < 0) {
            iterations += it;
            return false; // unbounded
        }
        // Pivot: eta update of the basis inverse.
        const double piv = u[leave];
        Eigen::RowVectorXd pivot_row = Binv.row(leave) / piv;
        for (int r = 0; r < m; ++r) {
            if (r == leave) continue;
            if (u[r] != 0.0) Binv.row(r) -= u[r] * pivot_row;
        }
        Binv.row(leave) = pivot_row;
        basis[leave] = enter;
        xB = Binv * b;
        for (int r = 0; r < m; ++r)
            if (xB[r] < 0.0 && xB[r] > -kFeasTol) xB[r] = 0.0;
    }
    throw std::runtime_error("solve_lp: iteration limit reached (numerical breakdown?)");
}

} // namespace

LpSolution solve_lp(const LinearProgram& lp) {
    const int m = static_cast<int>(lp.eq_matrix.rows());
    const int n_orig = static_cast<int>(lp.eq_matrix.cols());
    if (lp.eq_rhs.size() != m || lp.objective.size() != n_orig)
        throw std::invalid_argument("solve_lp: inconsistent dimensions");
    if (!lp.eq_matrix.allFinite() || !lp.eq_rhs.allFinite() || !lp.objective.allFinite())
        throw std::invalid_argument("solve_lp: non-finite entries");
    if (static_cast<std::int64_t>(m) * n_orig > 200'000'000)
        throw BudgetError("solve_lp: problem exceeds dense tableau budget");

    // Split free variables into differences of nonnegative pairs.
    std::vector<int> split_index(n_orig, -1);
    int n = n_orig;
    for (int j = 0; j < n_orig; ++j) {
        if (!lp.free_vars.empty() && lp.free_vars[j]) split_index[j] = n++;
    }
    const int n_art = m;
    Eigen::MatrixXd A(m, n + n_art);
    Eigen::VectorXd b = lp.eq_rhs;
    A.setZero();
    A.leftCols(n_orig) = lp.eq_matrix;
    for (int j = 0; j < n_orig; ++j)
        if (split_index[j] >= 0) A.col(split_index[j]) = -lp.eq_matrix.col(j);
    // Flip rows so b >= 0, then install artificial identity columns.
    for (int r = 0; r < m; ++r) {
        if (b[r] < 0) {
            A.row(r) = -A.row(r);
            b[r] = -b[r];
        }
        A(r, n + r) = 1.0;
    }

    Eigen::VectorXd cost = Eigen::VectorXd::Zero(n + n_art);
    cost.head(n_orig) = lp.objective;
    for (int j = 0; j < n_orig; ++j)
        if (split_index[j] >= 0) cost[split_index[j]] = -lp.objective[j];

    LpSolution sol;
    std::vector<int> basis(m);
    for (int r = 0; r < m; ++r) basis[r] = n + r;
    Eigen::MatrixXd Binv = Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd xB = b;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

    // Phase 1: minimize the sum of artificials.
    Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(n + n_art);
    phase1_cost.tail(n_art).setOnes();
    std::vector<bool> none_blocked(n + n_art, false);
    if (!primal_simplex(A, b, phase1_cost, basis, none_blocked, Binv, xB, y, sol.iterations))
        throw std::runtime_error("solve_lp: phase 1 unbounded");
    double infeas = 0.0;
    for (int r = 0; r < m; ++r)
        if (basis[r] >= n) infeas += std::max(xB[r], 0.0);
    if (infeas > kFeasTol * (1.0 + b.lpNorm<Eigen::Infinity>())) {
        sol.status = LpStatus::infeasible;
        return sol;
    }

    // Drive leftover artificials out of the basis with degenerate pivots so
    // phase 2 cannot regrow them. Rows whose tableau entries vanish on every
    // original column are redundant constraints and stay inert.
    for (int r = 0; r < m; ++r) {
        if (basis[r] < n) continue;
        std::vector<char> in_basis(n + n_art, 0);
        for (int rr = 0; rr < m; ++rr) in_basis[basis[rr]] = 1;
        int enter = -1;
        double best_mag = 1e-7;
        for (int j = 0; j < n; ++j) {
            if (in_basis[j]) continue;
            const double entry = Binv.row(r).dot(A.col(j));
            if (std::abs(entry) > best_mag) {
                best_mag = std::abs(entry);
                enter = j;
            }
        }
        if (enter < 0) continue; // redundant row
        const Eigen::VectorXd u = Binv * A.col(enter);
        const double piv = u[r];
        Eigen::RowVectorXd pivot_row = Binv.row(r) / piv;
        for (int rr = 0; rr < m; ++rr) {
            if (rr == r) continue;
            if (u[rr] != 0.0) Binv.row(rr) -= u[rr] * pivot_row;
        }
        Binv.row(r) = pivot_row;
        basis[r] = enter;
        xB = Binv * b;
        for (int rr = 0; rr < m; ++rr)
            if (xB[rr] < 0.0 && xB[rr] > -kFeasTol) xB[rr] = 0.0;
    }

    // Phase 2: any surviving artificial sits on a redundant row and cannot
    // move; artificials may never enter.
    std::vector<bool> blocked(n + n_art, false);
    for (int j = n; j < n + n_art; ++j) blocked[j] = true;
    if (!primal_simplex(A, b, cost, basis, blocked, Binv, xB, y, sol.iterations)) {
        sol.status = LpStatus::unbounded;
        return sol;
    }

    Eigen::VectorXd x_full = Eigen::VectorXd::Zero(n + n_art);
    for (int r = 0; r < m; ++r) x_full[basis[r]] = std::max(xB[r], 0.0);
    sol.primal = x_full.head(n_orig);
    for (int j = 0; j < n_orig; ++j)
        if (split_index[j] >= 0) sol.primal[j] -= x_full[split_index[j]];
    sol.dual = y;
    // Dual prices refer to the sign-flipped rows; map back to the original rows.
    for (int r = 0; r < m; ++r)
        if (lp.eq_rhs[r] < 0) sol.dual[r] = -sol.dual[r];
    sol.objective_value = lp.objective.dot(sol.primal);
    sol.status = LpStatus::optimal;

    sol.primal_residual = (lp.eq_matrix * sol.primal - lp.eq_rhs).lpNorm<Eigen::Infinity>();
    if (sol.primal_residual > kFeasTol * (1.0 + lp.eq_rhs.lpNorm<Eigen::Infinity>()) * 100.0)
        throw std::runtime_error("solve_lp: numerical breakdown (primal residual " +
                                 std::to_string(sol.primal_residual) + ")");
    double dual_viol = 0.0;
    const Eigen::VectorXd rc = lp.objective - lp.eq_matrix.transpose() * sol.dual;
    for (int j = 0; j < n_orig; ++j) {
        const bool is_free = !lp.free_vars.empty() && lp.free_vars[j];
        if (is_free)
            dual_viol = std::max(dual_viol, std::abs(rc[j]));
        else
            dual_viol = std::max(dual_viol, -rc[j]);
    }
    sol.dual_residual = dual_viol;
    sol.duality_gap = std::abs(sol.objective_value - sol.dual.dot(lp.eq_rhs));
    return sol;
}

BasisPursuitResult basis_pursuit(const Eigen::MatrixXd& X, const Eigen::VectorXd& z) {
    const int n = static_cast<int>(z.size());
    const int p = static_cast<int>(X.cols());
    if (X.rows() != n) throw std::invalid_argument("basis_pursuit: X/z row mismatch");

    BasisPursuitResult out;
    out.beta = Eigen::VectorXd::Zero(p);

    const double z0 = n > 0 ? z[0] : 0.0;
    if ((z.array() == z0).all()) {
        out.constant = z0;
        out.value = 0.0;
        return out;
    }

    // Variables [beta+ (p), beta- (p), c]; the unit costs on both halves of
    // the split price |beta_j| exactly since an optimum never keeps both
    // halves positive.
    LinearProgram lp;
    lp.objective = Eigen::VectorXd::Zero(2 * p + 1);
    lp.objective.head(2 * p).setOnes();
    lp.eq_matrix.resize(n, 2 * p + 1);
    lp.eq_matrix.leftCols(p) = X;
    lp.eq_matrix.middleCols(p, p) = -X;
    lp.eq_matrix.col(2 * p).setOnes();
    lp.eq_rhs = z;
    lp.free_vars.assign(2 * p + 1, false);
    lp.free_vars[2 * p] = true; // c free, cost 0

    LpSolution sol = solve_lp(lp);
    if (sol.status == LpStatus::infeasible)
        throw InfeasibleError("basis_pursuit: the affine system X beta + c 1 = z has no solution");
    if (sol.status == LpStatus::unbounded)
        throw std::runtime_error("basis_pursuit: unexpected unbounded program");

    out.beta = sol.primal.head(p) - sol.primal.segment(p, p);
    out.constant = sol.primal[2 * p];
    out.value = out.beta.cwiseAbs().sum();
    out.certificate = std::move(sol);
    return out;
}

} // namespace xgbvar
