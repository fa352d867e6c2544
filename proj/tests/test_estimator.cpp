#include <doctest.h>

#include "oracles.hpp"
#include "xgbvar/estimator.hpp"
#include "xgbvar/ingest.hpp"
#include "xgbvar/rng.hpp"

using namespace xgbvar;

namespace {

Dataset make_dataset(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys) {
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(xs.size()),
                        static_cast<Eigen::Index>(xs[0].size()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(ys.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = 0; j < xs[i].size(); ++j)
            pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = xs[i][j];
        y[static_cast<Eigen::Index>(i)] = ys[i];
    }
    return Dataset(pts, y);
}

Dataset random_dataset(Philox& rng, int n, int d) {
    Eigen::MatrixXd pts(n, d);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) pts(i, j) = rng.uniform(-1.0, 1.0);
        y[i] = rng.uniform(-1.0, 1.0);
    }
    return Dataset(pts, y);
}

} // namespace

TEST_CASE("project_l1_ball matches a bisection oracle") {
    Philox rng(101, 1);
    for (int trial = 0; trial < 50; ++trial) {
        const int k = rng.uniform_int(1, 12);
        Eigen::VectorXd v(k);
        for (int i = 0; i < k; ++i) v[i] = rng.uniform(-3.0, 3.0);
        const double radius = rng.uniform(0.1, 4.0);
        Eigen::VectorXd projected = v;
        project_l1_ball(projected, radius);
        CHECK(projected.cwiseAbs().sum() <= radius * (1 + 1e-12) + 1e-12);
        if (v.cwiseAbs().sum() <= radius) {
            CHECK((projected - v).cwiseAbs().maxCoeff() == 0.0);
            continue;
        }
        // Bisection on the soft threshold.
        double lo = 0.0, hi = v.cwiseAbs().maxCoeff();
        for (int it = 0; it < 200; ++it) {
            const double theta = 0.5 * (lo + hi);
            double sum = 0.0;
            for (int i = 0; i < k; ++i) sum += std::max(std::abs(v[i]) - theta, 0.0);
            (sum > radius ? lo : hi) = theta;
        }
        const double theta = 0.5 * (lo + hi);
        for (int i = 0; i < k; ++i) {
            const double expect =
                std::copysign(std::max(std::abs(v[i]) - theta, 0.0), v[i]);
            CHECK(projected[i] == doctest::Approx(expect).epsilon(1e-7));
        }
    }
}

TEST_CASE("snap_to_midpoints realizes the data-equivalent lattice function") {
    using Values = std::vector<std::vector<double>>;
    SUBCASE("already on midpoints: unchanged") {
        const Grid grid(Values{{0.0, 1.0}});
        SparseEnsemble ens(1, 0.5);
        BasisAtom atom;
        atom.lower_coords = {0};
        atom.lower_thresholds = {0.5};
        ens.add_atom(atom, 2.0);
        const SparseEnsemble snapped = snap_to_midpoints(ens, grid, 1);
        CHECK(snapped.atoms() == ens.atoms());
        CHECK(snapped.constant() == ens.constant());
    }
    SUBCASE("interior thresholds snap to the cell midpoint") {
        const Grid grid(Values{{0.0, 1.0}});
        SparseEnsemble ens(1, 0.0);
        BasisAtom atom;
        atom.lower_coords = {0};
        atom.lower_thresholds = {0.3};
        ens.add_atom(atom, 1.0);
        const SparseEnsemble snapped = snap_to_midpoints(ens, grid, 1);
        REQUIRE(snapped.size() == 1);
        CHECK(snapped.atoms().begin()->first.lower_thresholds[0] == 0.5);
        for (double x : {0.0, 1.0}) {
            Eigen::RowVectorXd p(1);
            p << x;
            CHECK(snapped(p) == ens(p));
        }
    }
    SUBCASE("thresholds below the data range fold into the constant") {
        const Grid grid(Values{{0.0, 1.0}});
        SparseEnsemble ens(1, 0.0);
        BasisAtom atom;
        atom.lower_coords = {0};
        atom.lower_thresholds = {-5.0};
        ens.add_atom(atom, 1.5);
        const SparseEnsemble snapped = snap_to_midpoints(ens, grid, 1);
        CHECK(snapped.size() == 0);
        CHECK(snapped.constant() == doctest::Approx(1.5));
        CHECK(snapped.weight() == 0.0); // the constant is unpenalized
    }
    SUBCASE("thresholds above the data range kill the atom") {
        const Grid grid(Values{{0.0, 1.0}});
        SparseEnsemble ens(1, 0.25);
        BasisAtom atom;
        atom.lower_coords = {0};
        atom.lower_thresholds = {7.0};
        ens.add_atom(atom, 3.0);
        const SparseEnsemble snapped = snap_to_midpoints(ens, grid, 1);
        CHECK(snapped.size() == 0);
        CHECK(snapped.constant() == 0.25);
    }
    SUBCASE("random off-lattice ensembles: pointwise agreement, weight never grows") {
        Philox rng(103, 2);
        for (int trial = 0; trial < 30; ++trial) {
            const int d = 1 + trial % 2;
            SparseEnsemble ens(d, rng.uniform(-1, 1));
            for (int a = 0; a < 5; ++a) {
                BasisAtom atom;
                const int j = rng.uniform_int(0, d - 1);
                if (rng.next_u32() & 1u) {
                    atom.lower_coords = {j};
                    atom.lower_thresholds = {rng.uniform(-2.0, 2.0)};
                } else {
                    atom.upper_coords = {j};
                    atom.upper_thresholds = {rng.uniform(-2.0, 2.0)};
                }
                ens.add_atom(atom, rng.uniform(-2.0, 2.0));
            }
            const Dataset data = random_dataset(rng, 6, d);
            const Grid grid = grid_from_dataset(data);
            const SparseEnsemble snapped = snap_to_midpoints(ens, grid, 2);
            for (int i = 0; i < data.n(); ++i) {
                // Each atom's indicator is preserved exactly at data points;
                // the assembled sums may differ by reordering rounding only.
                CHECK(snapped(data.points.row(i)) ==
                      doctest::Approx(ens(data.points.row(i))).epsilon(1e-12));
            }
            for (const auto& [atom, coef] : ens.atoms()) {
                SparseEnsemble one(d, 0.0);
                one.add_atom(atom, coef);
                const SparseEnsemble snapped_one = snap_to_midpoints(one, grid, 2);
                for (int i = 0; i < data.n(); ++i)
                    CHECK(snapped_one(data.points.row(i)) == one(data.points.row(i)));
            }
            CHECK(snapped.weight() <= ens.weight() + 1e-12);
        }
    }
    SUBCASE("atoms deeper than the bound are rejected") {
        const Grid grid(Values{{0.0, 1.0}, {0.0, 1.0}});
        SparseEnsemble ens(2, 0.0);
        BasisAtom atom;
        atom.lower_coords = {0, 1};
        atom.lower_thresholds = {0.5, 0.5};
        ens.add_atom(atom, 1.0);
        CHECK_THROWS_AS(snap_to_midpoints(ens, grid, 1), std::invalid_argument);
    }
}

TEST_CASE("constrained_lse basics") {
    SUBCASE("V = 0 returns the mean") {
        const Dataset data = make_dataset({{0}, {1}, {2}}, {1.0, 2.0, 6.0});
        const FitResult fit = constrained_lse(data, 1, 0.0);
        CHECK(fit.constant == doctest::Approx(3.0));
        CHECK(fit.atoms.empty());
        CHECK(fit.kkt_residual <= 1e-6);
        CHECK(fit.converged);
    }
    SUBCASE("constant responses fit exactly") {
        const Dataset data = make_dataset({{0}, {1}, {2}}, {2.0, 2.0, 2.0});
        const FitResult fit = constrained_lse(data, 1, 5.0);
        CHECK(fit.rss <= 1e-18);
        CHECK(fit.active_l1 <= 1e-12);
    }
    SUBCASE("step data with a tight budget matches the oracle") {
        const Dataset data = make_dataset({{0}, {1}, {2}}, {0.0, 1.0, 1.0});
        const FitResult fit = constrained_lse(data, 1, 1.0);
        const Grid grid = grid_from_dataset(data);
        const MatrixXd X = design_matrix(grid, 1, data.points);
        const double oracle = oracles::constrained_lse_exhaustive(X, data.responses, 1.0);
        CHECK(fit.rss == doctest::Approx(oracle).epsilon(1e-7));
        CHECK(fit.kkt_residual <= 1e-6);
        CHECK(fit.active_l1 <= 1.0 + 1e-9);
    }
    SUBCASE("random tiny instances match the exhaustive oracle") {
        Philox rng(107, 3);
        for (int trial = 0; trial < 12; ++trial) {
            const int n = rng.uniform_int(3, 6);
            const Dataset data = random_dataset(rng, n, trial % 2 ? 2 : 1);
            const double v_budget = rng.uniform(0.2, 2.0);
            const int s = 1 + trial % 2;
            const Grid grid = grid_from_dataset(data);
            const MatrixXd X = design_matrix(grid, s, data.points);
            if (X.cols() > 12) continue;
            const FitResult fit = constrained_lse(data, s, v_budget);
            const double oracle =
                oracles::constrained_lse_exhaustive(X, data.responses, v_budget);
            CHECK(fit.rss == doctest::Approx(oracle).epsilon(1e-7));
            CHECK(fit.kkt_residual <= 1e-6);
        }
    }
}

TEST_CASE("penalized_lse basics") {
    SUBCASE("alpha = 0 interpolates a small instance") {
        const Dataset data = make_dataset({{0}, {1}, {2}}, {0.0, 1.0, -1.0});
        const FitResult fit = penalized_lse(data, 2, 0.0);
        CHECK(fit.rss <= 1e-12);
    }
    SUBCASE("large alpha kills every coefficient") {
        const Dataset data = make_dataset({{0}, {1}, {2}}, {1.0, 5.0, 3.0});
        const Eigen::VectorXd centered =
            data.responses.array() - data.responses.mean();
        const Grid grid = grid_from_dataset(data);
        const MatrixXd X = design_matrix(grid, 1, data.points);
        const double alpha_max = (2.0 * X.transpose() * centered).cwiseAbs().maxCoeff();
        const FitResult fit = penalized_lse(data, 1, alpha_max * 1.01);
        CHECK(fit.atoms.empty());
        CHECK(fit.constant == doctest::Approx(3.0));
        CHECK(fit.kkt_residual <= 1e-6);
    }
    SUBCASE("matches the sign-pattern oracle at alpha = 1") {
        const Dataset data = make_dataset({{0}, {1}, {2}}, {0.0, 2.0, 1.0});
        const FitResult fit = penalized_lse(data, 1, 1.0);
        const Grid grid = grid_from_dataset(data);
        const MatrixXd X = design_matrix(grid, 1, data.points);
        const double oracle = oracles::penalized_lse_exhaustive(X, data.responses, 1.0);
        CHECK(fit.objective == doctest::Approx(oracle).epsilon(1e-8));
        CHECK(fit.kkt_residual <= 1e-6);
    }
    SUBCASE("random tiny instances match the exhaustive oracle") {
        Philox rng(109, 4);
        for (int trial = 0; trial < 12; ++trial) {
            const int n = rng.uniform_int(3, 6);
            const Dataset data = random_dataset(rng, n, 1);
            const double alpha = rng.uniform(0.05, 1.5);
            const Grid grid = grid_from_dataset(data);
            const MatrixXd X = design_matrix(grid, 2, data.points);
            if (X.cols() > 12) continue;
            const FitResult fit = penalized_lse(data, 2, alpha);
            const double oracle =
                oracles::penalized_lse_exhaustive(X, data.responses, alpha);
            CHECK(fit.objective == doctest::Approx(oracle).epsilon(1e-7));
            CHECK(fit.kkt_residual <= 1e-6);
        }
    }
}

TEST_CASE("dual_alpha bridges the constrained and penalized problems") {
    SUBCASE("slack budget gives alpha = 0") {
        const Dataset data = make_dataset({{0}, {1}, {2}}, {0.0, 1.0, -1.0});
        CHECK(dual_alpha(data, 2, 100.0) == 0.0);
    }
    SUBCASE("V = 0 gives the kill threshold") {
        const Dataset data = make_dataset({{0}, {1}, {2}}, {1.0, 5.0, 3.0});
        const Eigen::VectorXd centered =
            data.responses.array() - data.responses.mean();
        const Grid grid = grid_from_dataset(data);
        const MatrixXd X = design_matrix(grid, 1, data.points);
        const double expected = (2.0 * X.transpose() * centered).cwiseAbs().maxCoeff();
        CHECK(dual_alpha(data, 1, 0.0) == doctest::Approx(expected).epsilon(1e-9));
    }
    SUBCASE("objective parity on small instances") {
        Philox rng(113, 5);
        for (int trial = 0; trial < 8; ++trial) {
            const Dataset data = random_dataset(rng, 5, 1);
            const double v_budget = rng.uniform(0.1, 0.8);
            const FitResult constrained = constrained_lse(data, 2, v_budget);
            const double alpha = dual_alpha_from_fit(data, 2, constrained);
            const FitResult penalized = penalized_lse(data, 2, alpha);
            CHECK(penalized.rss == doctest::Approx(constrained.rss).epsilon(1e-6));
            CHECK(penalized.active_l1 <= v_budget + 1e-6);
        }
    }
}

TEST_CASE("greedy_boost") {
    SUBCASE("huge alpha freezes the constant prediction") {
        const Dataset data = make_dataset({{0}, {1}, {2}}, {1.0, 5.0, 3.0});
        BoostConfig config;
        config.max_depth = 2;
        config.rounds = 4;
        config.learning_rate = 1.0;
        config.alpha = 2.0 * 3 * 4.0 + 1.0; // above 2 n max|y - mean|
        const auto trees = greedy_boost(data, config);
        REQUIRE(!trees.empty());
        Eigen::RowVectorXd x(1);
        for (double xv : {0.0, 1.0, 2.0}) {
            x << xv;
            double pred = 0.0;
            for (const auto& tree : trees) pred += eval_tree(tree, x);
            CHECK(pred == doctest::Approx(3.0));
        }
    }
    SUBCASE("a single split fits a step exactly") {
        const Dataset data = make_dataset({{-1}, {1}}, {0.0, 1.0});
        BoostConfig config;
        config.max_depth = 1;
        config.rounds = 1;
        config.learning_rate = 1.0;
        const auto trees = greedy_boost(data, config);
        double rss = 0.0;
        for (int i = 0; i < data.n(); ++i) {
            double pred = 0.0;
            for (const auto& tree : trees) pred += eval_tree(tree, data.points.row(i));
            rss += std::pow(pred - data.responses[i], 2);
        }
        CHECK(rss <= 1e-18);
    }
    SUBCASE("determinism: same data, same trees") {
        Philox rng(127, 6);
        const Dataset data = random_dataset(rng, 12, 2);
        BoostConfig config;
        config.max_depth = 2;
        config.rounds = 5;
        config.learning_rate = 0.5;
        const auto a = greedy_boost(data, config);
        const auto b = greedy_boost(data, config);
        REQUIRE(a.size() == b.size());
        for (int i = 0; i < data.n(); ++i) {
            double pa = 0.0, pb = 0.0;
            for (const auto& t : a) pa += eval_tree(t, data.points.row(i));
            for (const auto& t : b) pb += eval_tree(t, data.points.row(i));
            CHECK(pa == pb);
        }
    }
    SUBCASE("greedy objective never beats the exact optimum") {
        Philox rng(131, 7);
        for (int trial = 0; trial < 6; ++trial) {
            const Dataset data = random_dataset(rng, 8, 1);
            const double alpha = rng.uniform(0.05, 0.5);
            BoostConfig config;
            config.max_depth = 2;
            config.rounds = 20;
            config.learning_rate = 0.5;
            config.alpha = alpha;
            const auto trees = greedy_boost(data, config);
            double rss = 0.0;
            double leaf_l1 = 0.0;
            for (int i = 0; i < data.n(); ++i) {
                double pred = 0.0;
                for (const auto& t : trees) pred += eval_tree(t, data.points.row(i));
                rss += std::pow(pred - data.responses[i], 2);
            }
            for (const auto& t : trees) leaf_l1 += t.leaf_weight_l1();
            const double greedy_objective = rss + alpha * leaf_l1;
            const FitResult exact = penalized_lse(data, 2, alpha);
            CHECK(greedy_objective >= exact.objective - 1e-8);
        }
    }
}

TEST_CASE("objective_value evaluates RSS plus the weighted penalty") {
    const Dataset data = make_dataset({{0}, {1}}, {1.0, 3.0});
    SUBCASE("perfect interpolant with alpha 0") {
        SparseEnsemble ens(1, 1.0);
        BasisAtom atom;
        atom.lower_coords = {0};
        atom.lower_thresholds = {0.5};
        ens.add_atom(atom, 2.0);
        CHECK(objective_value(data, ens, 0.0) == doctest::Approx(0.0));
        CHECK(objective_value(data, ens, 3.0) == doctest::Approx(6.0));
    }
    SUBCASE("constant at the mean pays only the RSS") {
        const SparseEnsemble ens(1, 2.0);
        CHECK(objective_value(data, ens, 123.0) == doctest::Approx(2.0));
    }
    SUBCASE("greedy trees and their merged ensemble agree") {
        Philox rng(137, 8);
        const Dataset big = random_dataset(rng, 10, 2);
        BoostConfig config;
        config.max_depth = 2;
        config.rounds = 6;
        config.learning_rate = 0.7;
        config.alpha = 0.1;
        const auto trees = greedy_boost(big, config);
        SparseEnsemble merged(2, 0.0);
        for (const auto& t : trees) merged = merged.axpy(1.0, tree_to_ensemble(t, 2));
        double rss = 0.0;
        for (int i = 0; i < big.n(); ++i) {
            double pred = 0.0;
            for (const auto& t : trees) pred += eval_tree(t, big.points.row(i));
            rss += std::pow(pred - big.responses[i], 2);
        }
        const double direct = objective_value(big, merged, 0.0);
        CHECK(direct == doctest::Approx(rss).epsilon(1e-10));
    }
}

TEST_CASE("no off-lattice candidate beats the lattice optimum") {
    Philox rng(223, 2200);
    for (int trial = 0; trial < 4; ++trial) {
        const Dataset data = random_dataset(rng, 8, 1);
        const Grid grid = grid_from_dataset(data);
        const double alpha = rng.uniform(0.1, 0.6);
        const FitResult fit = penalized_lse(data, 2, alpha);
        double best_candidate = std::numeric_limits<double>::infinity();
        for (int candidate = 0; candidate < 100; ++candidate) {
            SparseEnsemble ens(1, rng.uniform(-1.0, 1.0));
            const int atoms = rng.uniform_int(1, 3);
            for (int a = 0; a < atoms; ++a) {
                BasisAtom atom;
                if (rng.next_u32() & 1u) {
                    atom.lower_coords = {0};
                    atom.lower_thresholds = {rng.uniform(-1.2, 1.2)};
                } else {
                    atom.upper_coords = {0};
                    atom.upper_thresholds = {rng.uniform(-1.2, 1.2)};
                }
                ens.add_atom(atom, rng.uniform(-1.5, 1.5));
            }
            const SparseEnsemble snapped = snap_to_midpoints(ens, grid, 2);
            best_candidate =
                std::min(best_candidate, objective_value(data, snapped, alpha));
        }
        CHECK(fit.objective <= best_candidate + 1e-6);
    }
}

TEST_CASE("constrained RSS is non-increasing in the budget") {
    Philox rng(227, 2300);
    const Dataset data = random_dataset(rng, 10, 2);
    double previous = std::numeric_limits<double>::infinity();
    for (double v : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0}) {
        const FitResult fit = constrained_lse(data, 2, v);
        CHECK(fit.rss <= previous + 1e-9);
        previous = fit.rss;
    }
}
