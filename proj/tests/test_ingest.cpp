#include <doctest.h>

#include "oracles.hpp"
#include "xgbvar/ingest.hpp"
#include "xgbvar/rng.hpp"

using namespace xgbvar;

namespace {

Eigen::RowVectorXd point1(double x) {
    Eigen::RowVectorXd p(1);
    p << x;
    return p;
}

} // namespace

TEST_CASE("tree_to_ensemble decomposes root-to-leaf paths") {
    SUBCASE("constant tree folds into the constant") {
        const SparseEnsemble ens = tree_to_ensemble(RegressionTree::leaf(5.0), 1);
        CHECK(ens.constant() == 5.0);
        CHECK(ens.size() == 0);
        CHECK(ens.weight() == 0.0);
    }
    SUBCASE("single split gives one atom per leaf") {
        const RegressionTree tree = RegressionTree::split(
            0, 0.0, RegressionTree::leaf(-1.0), RegressionTree::leaf(2.0));
        const SparseEnsemble ens = tree_to_ensemble(tree, 1);
        CHECK(ens.size() == 2);
        CHECK(ens.weight() == doctest::Approx(3.0));
        for (double x = -2.0; x <= 2.0; x += 0.125)
            CHECK(ens(point1(x)) == eval_tree(tree, point1(x)));
    }
    SUBCASE("repeated splits keep the max lower threshold") {
        const RegressionTree tree = RegressionTree::split(
            0, 0.0, RegressionTree::leaf(0.0),
            RegressionTree::split(0, 1.0, RegressionTree::leaf(0.0), RegressionTree::leaf(3.0)));
        const SparseEnsemble ens = tree_to_ensemble(tree, 1);
        // The right-right path is x >= 0 then x >= 1, i.e. the single bound
        // x >= 1; zero leaves contribute nothing.
        REQUIRE(ens.size() == 1);
        const auto& [atom, coef] = *ens.atoms().begin();
        CHECK(atom.lower_coords == std::vector<int>{0});
        CHECK(atom.lower_thresholds == std::vector<double>{1.0});
        CHECK(coef == 3.0);
        for (int k = 0; k < 100; ++k) {
            const double x = -2.0 + 0.05 * k;
            CHECK(ens(point1(x)) == eval_tree(tree, point1(x)));
        }
    }
    SUBCASE("contradictory paths are unreachable and dropped") {
        // x >= 1 then x < 0 on the right branch: empty region.
        const RegressionTree tree = RegressionTree::split(
            0, 1.0, RegressionTree::leaf(0.5),
            RegressionTree::split(0, 0.0, RegressionTree::leaf(99.0), RegressionTree::leaf(1.5)));
        const SparseEnsemble ens = tree_to_ensemble(tree, 1);
        for (double x = -3.0; x <= 3.0; x += 0.1)
            CHECK(ens(point1(x)) == eval_tree(tree, point1(x)));
        // The unreachable leaf (99) must not contribute weight.
        CHECK(ens.weight() <= tree.leaf_weight_l1() - 99.0 + 1e-12);
    }
}

TEST_CASE("tree round trip: sums of trees equal the merged ensemble") {
    Philox rng(41, 500);
    for (int trial = 0; trial < 15; ++trial) {
        // Random small trees over 2 coordinates with integer thresholds.
        std::vector<RegressionTree> trees;
        SparseEnsemble total(2, 0.0);
        for (int k = 0; k < 3; ++k) {
            RegressionTree tree = RegressionTree::split(
                rng.uniform_int(0, 1), rng.uniform_int(-1, 1),
                RegressionTree::leaf(rng.uniform(-2.0, 2.0)),
                RegressionTree::split(rng.uniform_int(0, 1), rng.uniform_int(-1, 1),
                                      RegressionTree::leaf(rng.uniform(-2.0, 2.0)),
                                      RegressionTree::leaf(rng.uniform(-2.0, 2.0))));
            total = total.axpy(1.0, tree_to_ensemble(tree, 2));
            trees.push_back(std::move(tree));
        }
        for (int t = 0; t < 20; ++t) {
            Eigen::RowVectorXd x(2);
            x << rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0);
            double tree_sum = 0.0;
            for (const auto& tree : trees) tree_sum += eval_tree(tree, x);
            CHECK(total(x) == doctest::Approx(tree_sum).epsilon(1e-12));
        }
        double leaf_l1 = 0.0;
        for (const auto& tree : trees) leaf_l1 += tree.leaf_weight_l1();
        CHECK(total.weight() <= leaf_l1 + 1e-12);
    }
}

namespace {

const char* kSingleLeafDump = R"([{"nodeid": 0, "leaf": 0.5}])";

const char* kOneSplitDump = R"([
  {"nodeid": 0, "depth": 0, "split": "f0", "split_condition": 1.5,
   "yes": 1, "no": 2, "missing": 1,
   "children": [
     {"nodeid": 1, "leaf": -1.0},
     {"nodeid": 2, "leaf": 1.0}
   ]}
])";

} // namespace

TEST_CASE("parse_xgb_dump reads the per-tree node format") {
    SUBCASE("single leaf") {
        const ModelDump dump = parse_xgb_dump(kSingleLeafDump);
        REQUIRE(dump.trees.size() == 1);
        CHECK(eval_tree(dump.trees[0], point1(0.0)) == 0.5);
        CHECK(dump.feature_count == 0);
    }
    SUBCASE("one split with the boundary on the no-branch") {
        const ModelDump dump = parse_xgb_dump(kOneSplitDump);
        REQUIRE(dump.trees.size() == 1);
        CHECK(dump.feature_count == 1);
        CHECK(eval_tree(dump.trees[0], point1(1.5)) == 1.0);  // x >= t goes to 'no'
        CHECK(eval_tree(dump.trees[0], point1(1.25)) == -1.0);
    }
    SUBCASE("three trees against hand-computed predictions") {
        const std::string dump_text = std::string("[") +
            R"({"nodeid":0,"split":"f0","split_condition":0.0,"yes":1,"no":2,"missing":1,
                "children":[{"nodeid":1,"leaf":-1.0},{"nodeid":2,"leaf":1.0}]},)" +
            R"({"nodeid":0,"split":"f1","split_condition":1.0,"yes":1,"no":2,"missing":2,
                "children":[{"nodeid":1,"leaf":0.25},{"nodeid":2,"leaf":-0.25}]},)" +
            R"({"nodeid":0,"leaf":0.75})" + "]";
        const ModelDump dump = parse_xgb_dump(dump_text);
        REQUIRE(dump.trees.size() == 3);
        CHECK(dump.feature_count == 2);
        const double table[5][3] = {
            // x0, x1, expected = tree0 + tree1 + 0.75
            {-1.0, 0.0, -1.0 + 0.25 + 0.75},
            {0.0, 0.0, 1.0 + 0.25 + 0.75},
            {0.5, 1.0, 1.0 - 0.25 + 0.75},
            {-0.5, 2.0, -1.0 - 0.25 + 0.75},
            {3.0, 0.5, 1.0 + 0.25 + 0.75},
        };
        for (const auto& row : table) {
            Eigen::RowVectorXd x(2);
            x << row[0], row[1];
            double total = 0.0;
            for (const auto& tree : dump.trees) total += eval_tree(tree, x);
            CHECK(total == doctest::Approx(row[2]).epsilon(1e-12));
        }
    }
    SUBCASE("learned missing directions are rejected") {
        const std::string bad = R"([
          {"nodeid": 0, "split": "f0", "split_condition": 0.5,
           "yes": 1, "no": 2, "missing": 7,
           "children": [{"nodeid": 1, "leaf": 0.0}, {"nodeid": 2, "leaf": 1.0}]}
        ])";
        CHECK_THROWS_AS(parse_xgb_dump(bad), ParseError);
    }
    SUBCASE("malformed JSON") {
        CHECK_THROWS_AS(parse_xgb_dump("[{"), ParseError);
    }
    SUBCASE("unknown feature names") {
        const std::string bad = R"([
          {"nodeid": 0, "split": "age", "split_condition": 0.5,
           "yes": 1, "no": 2, "missing": 1,
           "children": [{"nodeid": 1, "leaf": 0.0}, {"nodeid": 2, "leaf": 1.0}]}
        ])";
        CHECK_THROWS_AS(parse_xgb_dump(bad), ParseError);
    }
    SUBCASE("base_score adds to the constant") {
        const std::string wrapped =
            std::string(R"({"base_score": 0.5, "trees": )") + kSingleLeafDump + "}";
        const ModelDump dump = parse_xgb_dump(wrapped);
        const SparseEnsemble ens = dump_to_ensemble(dump);
        CHECK(ens.constant() == doctest::Approx(1.0));
    }
}

TEST_CASE("load_dataset parses numeric CSV") {
    SUBCASE("two rows, one covariate") {
        const Dataset data = load_dataset("x,y\n1.0,2.0\n3.0,4.0\n", "y");
        CHECK(data.n() == 2);
        CHECK(data.d() == 1);
        CHECK(data.points(1, 0) == 3.0);
        CHECK(data.responses[1] == 4.0);
    }
    SUBCASE("NaN cells are rejected") {
        CHECK_THROWS_AS(load_dataset("x,y\nnan,1\n", "y"), ParseError);
    }
    SUBCASE("non-numeric cells are rejected") {
        CHECK_THROWS_AS(load_dataset("x,y\nabc,1\n", "y"), ParseError);
    }
    SUBCASE("missing response column") {
        CHECK_THROWS_AS(load_dataset("x,z\n1,2\n", "y"), ParseError);
    }
    SUBCASE("duplicated rows are preserved") {
        const Dataset data = load_dataset("x,y\n1,2\n1,2\n1,2\n", "y");
        CHECK(data.n() == 3);
    }
    SUBCASE("quoted fields and CRLF") {
        const Dataset data = load_dataset("\"x\",y\r\n\"1.5\",2\r\n", "y");
        CHECK(data.points(0, 0) == 1.5);
    }
}

TEST_CASE("grid_from_dataset deduplicates per coordinate") {
    SUBCASE("duplicates collapse, midpoints follow") {
        Eigen::MatrixXd pts(4, 1);
        pts << 0.0, 1.0, 1.0, 2.0;
        const Grid grid = grid_from_points(pts);
        CHECK(grid.values(0) == std::vector<double>{0.0, 1.0, 2.0});
        CHECK(grid.midpoints(0) == std::vector<double>{0.5, 1.5});
    }
    SUBCASE("single point has no midpoints") {
        Eigen::MatrixXd pts(1, 2);
        pts << 3.0, -1.0;
        const Grid grid = grid_from_points(pts);
        CHECK(grid.count(0) == 1);
        CHECK(grid.midpoints(0).empty());
    }
    SUBCASE("coordinates deduplicate independently") {
        Eigen::MatrixXd pts(3, 2);
        pts << 0.0, 5.0, 0.0, 6.0, 1.0, 5.0;
        const Grid grid = grid_from_points(pts);
        CHECK(grid.count(0) == 2);
        CHECK(grid.count(1) == 2);
    }
}
