#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "xgbvar/rng.hpp"
#include "xgbvar/types.hpp"

using namespace xgbvar;

namespace {

Eigen::RowVectorXd point1(double x) {
    Eigen::RowVectorXd p(1);
    p << x;
    return p;
}

Eigen::RowVectorXd point2(double a, double b) {
    Eigen::RowVectorXd p(2);
    p << a, b;
    return p;
}

BasisAtom lower_atom(int j, double l) {
    BasisAtom atom;
    atom.lower_coords = {j};
    atom.lower_thresholds = {l};
    return atom;
}

BasisAtom upper_atom(int j, double u) {
    BasisAtom atom;
    atom.upper_coords = {j};
    atom.upper_thresholds = {u};
    return atom;
}

} // namespace

TEST_CASE("eval_atom follows the indicator-product definition") {
    CHECK(eval_atom(lower_atom(0, 0.0), point1(1.0)) == 1.0);

    BasisAtom empty_interval;
    empty_interval.lower_coords = {0};
    empty_interval.lower_thresholds = {0.0};
    empty_interval.upper_coords = {0};
    empty_interval.upper_thresholds = {0.0};
    CHECK(eval_atom(empty_interval, point1(0.0)) == 0.0);
    CHECK(eval_atom(empty_interval, point1(-1.0)) == 0.0);
    CHECK(empty_interval.empty_interval());

    BasisAtom mixed;
    mixed.lower_coords = {0};
    mixed.lower_thresholds = {0.0};
    mixed.upper_coords = {1};
    mixed.upper_thresholds = {0.0};
    CHECK(eval_atom(mixed, point2(0.0, -1.0)) == 1.0); // boundary is right-continuous

    CHECK_THROWS_AS(eval_atom(lower_atom(3, 0.0), point1(0.0)), std::invalid_argument);
}

TEST_CASE("eval_ensemble sums coefficient-weighted atoms plus the constant") {
    SparseEnsemble constant(1, 3.0);
    CHECK(constant(point1(-7.0)) == 3.0);

    SparseEnsemble single(1, 0.0);
    single.add_atom(lower_atom(0, 0.0), 2.0);
    CHECK(single(point1(5.0)) == 2.0);

    SparseEnsemble both(1, 1.0);
    both.add_atom(lower_atom(0, 0.0), 1.0);
    both.add_atom(upper_atom(0, 0.0), -1.0);
    CHECK(both(point1(-1.0)) == 0.0);
}

TEST_CASE("ensemble canonicalization merges and drops") {
    SparseEnsemble ens(2, 0.0);
    BasisAtom a;
    a.lower_coords = {1, 0};
    a.lower_thresholds = {1.0, 0.0};
    ens.add_atom(a, 1.5);
    BasisAtom b; // same atom, coordinates listed in the other order
    b.lower_coords = {0, 1};
    b.lower_thresholds = {0.0, 1.0};
    ens.add_atom(b, 0.5);
    CHECK(ens.size() == 1);
    CHECK(ens.weight() == doctest::Approx(2.0));

    ens.add_atom(b, -2.0); // exact cancellation removes the entry
    CHECK(ens.size() == 0);

    BasisAtom zero;
    zero.lower_coords = {0};
    zero.lower_thresholds = {1.0};
    zero.upper_coords = {0};
    zero.upper_thresholds = {0.0};
    ens.add_atom(zero, 5.0);
    CHECK(ens.size() == 0);
    CHECK(ens.dropped_zero_atoms() == 1);
}

TEST_CASE("eval_ensemble is linear in coefficients") {
    Philox rng(7, 1);
    for (int trial = 0; trial < 20; ++trial) {
        const SparseEnsemble f = oracles::random_ensemble(rng, 2, 4, 2);
        const SparseEnsemble g = oracles::random_ensemble(rng, 2, 4, 2);
        const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
        const SparseEnsemble combo = f.scaled(a).axpy(b, g);
        for (int t = 0; t < 10; ++t) {
            const auto x = point2(rng.uniform(-2, 3), rng.uniform(-2, 3));
            CHECK(combo(x) == doctest::Approx(a * f(x) + b * g(x)).epsilon(1e-12));
        }
    }
}

TEST_CASE("ensembles are right-continuous in every coordinate") {
    Philox rng(11, 2);
    for (int trial = 0; trial < 10; ++trial) {
        const SparseEnsemble f = oracles::random_ensemble(rng, 2, 5, 2);
        for (int j = 0; j < 2; ++j) {
            for (double t : f.thresholds(j)) {
                Eigen::RowVectorXd x = point2(rng.uniform_int(-1, 2), rng.uniform_int(-1, 2));
                x[j] = t;
                const double at = f(x);
                for (double eps : {1e-3, 1e-6, 1e-9}) {
                    Eigen::RowVectorXd xp = x;
                    xp[j] = t + eps;
                    if (eps < 1e-7) CHECK(f(xp) == doctest::Approx(at).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("eval_tree routes right-continuously") {
    CHECK(eval_tree(RegressionTree::leaf(7.0), point1(123.0)) == 7.0);

    const RegressionTree split = RegressionTree::split(
        0, 0.0, RegressionTree::leaf(-1.0), RegressionTree::leaf(2.0));
    CHECK(eval_tree(split, point1(0.0)) == 2.0); // boundary goes right
    CHECK(eval_tree(split, point1(-0.25)) == -1.0);
    CHECK(split.depth() == 1);
    CHECK(split.leaf_weight_l1() == doctest::Approx(3.0));

    // Depth-2 tree splitting the same variable twice; brute-force the four
    // regions x < 0, [0, 1), [1, 2), >= 2 is overkill since the second split
    // only refines the right branch, but check every region boundary anyway.
    const RegressionTree deep = RegressionTree::split(
        0, 0.0, RegressionTree::leaf(10.0),
        RegressionTree::split(0, 1.0, RegressionTree::leaf(20.0), RegressionTree::leaf(30.0)));
    CHECK(deep.depth() == 2);
    for (double x = -2.0; x <= 3.0; x += 0.25) {
        const double expected = x < 0.0 ? 10.0 : (x < 1.0 ? 20.0 : 30.0);
        CHECK(eval_tree(deep, point1(x)) == expected);
    }
}

TEST_CASE("constant tree has depth 0 and zero leaf penalty") {
    const RegressionTree constant = RegressionTree::leaf(5.0);
    CHECK(constant.depth() == 0);
    CHECK(constant.leaf_weight_l1() == 0.0);
}

namespace {

// Independent enumeration of the midpoint index set: all (L, U, p, q) with
// 0 < |L| + |U| <= s and per-coordinate midpoint choices.
std::int64_t count_index_set(const Grid& grid, int s) {
    const int d = grid.dims();
    std::int64_t total = 0;
    for (unsigned lmask = 0; lmask < (1u << d); ++lmask) {
        for (unsigned umask = 0; umask < (1u << d); ++umask) {
            const int order = __builtin_popcount(lmask) + __builtin_popcount(umask);
            if (order == 0 || order > s) continue;
            std::int64_t combos = 1;
            for (int j = 0; j < d; ++j) {
                if ((lmask >> j) & 1u) combos *= grid.count(j) - 1;
                if ((umask >> j) & 1u) combos *= grid.count(j) - 1;
            }
            total += combos;
        }
    }
    return total;
}

} // namespace

TEST_CASE("design_matrix enumerates the midpoint dictionary") {
    SUBCASE("d=1, s=1, two values") {
        const Grid grid(std::vector<std::vector<double>>{{0.0, 1.0}});
        MatrixXd pts(2, 1);
        pts << 0.0, 1.0;
        const MatrixXd X = design_matrix(grid, 1, pts);
        REQUIRE(X.cols() == 2);
        // Column order: (L=empty, U={0}) then (L={0}, U=empty).
        CHECK(X(0, 0) == 1.0); // 1(0 < 0.5)
        CHECK(X(1, 0) == 0.0);
        CHECK(X(0, 1) == 0.0); // 1(0 >= 0.5)
        CHECK(X(1, 1) == 1.0);
    }
    SUBCASE("single distinct value contributes no columns") {
        const Grid grid(std::vector<std::vector<double>>{{0.5}});
        MatrixXd pts(3, 1);
        pts << 0.5, 0.5, 0.5;
        const MatrixXd X = design_matrix(grid, 1, pts);
        CHECK(X.cols() == 0);
        CHECK(X.rows() == 3);
    }
    SUBCASE("d=2, s=2, three values per coordinate: brute-force count") {
        const Grid grid(std::vector<std::vector<double>>{{0.0, 1.0, 2.0}, {0.0, 1.0, 2.0}});
        MatrixXd pts(9, 2);
        int row = 0;
        for (double a : {0.0, 1.0, 2.0})
            for (double b : {0.0, 1.0, 2.0}) pts.row(row++) << a, b;
        const MatrixXd X = design_matrix(grid, 2, pts);
        CHECK(X.cols() == count_index_set(grid, 2));
        // All pairs (L, U) including overlapping ones, 2 midpoints per side:
        // 8 singles + 6 pairs * 4 = 32.
        CHECK(X.cols() == 32);
        CHECK(((X.array() == 0.0) || (X.array() == 1.0)).all());
    }
    SUBCASE("duplicate points give identical rows") {
        const Grid grid(std::vector<std::vector<double>>{{0.0, 1.0, 3.0}});
        MatrixXd pts(2, 1);
        pts << 1.0, 1.0;
        const MatrixXd X = design_matrix(grid, 2, pts);
        CHECK((X.row(0) - X.row(1)).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("entry budget is enforced with the computed size") {
        const Grid grid(std::vector<std::vector<double>>{{0.0, 1.0, 2.0}, {0.0, 1.0, 2.0}});
        MatrixXd pts = MatrixXd::Zero(4, 2);
        Budget budget;
        budget.design_entries = 8;
        CHECK_THROWS_AS(design_matrix(grid, 2, pts, budget), BudgetError);
    }
}

TEST_CASE("column atoms match direct evaluation on random points") {
    const Grid grid(std::vector<std::vector<double>>{{0.0, 1.0, 2.0}, {-1.0, 4.0}});
    const auto cols = enumerate_design_columns(grid, 2);
    Philox rng(3, 9);
    for (int t = 0; t < 25; ++t) {
        const auto x = point2(rng.uniform(-2.0, 3.0), rng.uniform(-2.0, 5.0));
        for (const auto& col : cols) {
            const BasisAtom atom = col.atom(grid);
            double expected = 1.0;
            for (std::size_t k = 0; k < col.lower_coords.size(); ++k)
                expected *= x[col.lower_coords[k]] >=
                                    grid.midpoints(col.lower_coords[k])[col.lower_mid[k]]
                                ? 1.0
                                : 0.0;
            for (std::size_t k = 0; k < col.upper_coords.size(); ++k)
                expected *= x[col.upper_coords[k]] <
                                    grid.midpoints(col.upper_coords[k])[col.upper_mid[k]]
                                ? 1.0
                                : 0.0;
            CHECK(eval_atom(atom, x) == expected);
        }
    }
}

TEST_CASE("dataset validation") {
    MatrixXd pts(2, 1);
    pts << 0.0, 1.0;
    VectorXd y(2);
    y << 1.0, 2.0;
    CHECK_NOTHROW(Dataset(pts, y));
    y[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(Dataset(pts, y), std::invalid_argument);
}

TEST_CASE("grid validation") {
    using Values = std::vector<std::vector<double>>;
    CHECK_THROWS_AS(Grid(Values{{1.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(Grid(Values{{2.0, 1.0}}), std::invalid_argument);
    const Grid grid(Values{{0.0, 1.0, 4.0}});
    CHECK(grid.midpoints(0) == std::vector<double>{0.5, 2.5});
}
