#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xgbvar/errors.hpp"

namespace xgbvar {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Per-coordinate sorted distinct data values and the derived split lattice
// of midpoints between consecutive values.
class Grid {
  public:
    Grid() = default;
    // values[j] must be strictly increasing and nonempty.
    explicit Grid(std::vector<std::vector<double>> values);

    int dims() const { return static_cast<int>(values_.size()); }
    const std::vector<double>& values(int j) const { return values_[j]; }
    const std::vector<double>& midpoints(int j) const { return midpoints_[j]; }
    // Number of distinct values on coordinate j.
    int count(int j) const { return static_cast<int>(values_[j].size()); }

  private:
    std::vector<std::vector<double>> values_;
    std::vector<std::vector<double>> midpoints_;
};

// One indicator product: prod_{j in L} 1(x_j >= l_j) * prod_{j in U} 1(x_j < u_j).
// L and U may overlap (an overlap on j gives the interval 1(l_j <= x_j < u_j)).
// Coordinate lists are kept sorted so equality is structural.
struct BasisAtom {
    std::vector<int> lower_coords;        // L, sorted ascending
    std::vector<double> lower_thresholds; // l_j, aligned with lower_coords
    std::vector<int> upper_coords;        // U, sorted ascending
    std::vector<double> upper_thresholds; // u_j, aligned with upper_coords

    // Sorts both coordinate lists (with their thresholds) and validates
    // indices against d. Throws std::invalid_argument on duplicates, an
    // empty atom, or an out-of-range coordinate.
    void canonicalize(int dims);

    int order() const {
        return static_cast<int>(lower_coords.size() + upper_coords.size());
    }
    // True if some j in L∩U has l_j >= u_j, i.e. the indicator is 0 everywhere.
    bool empty_interval() const;

    bool operator==(const BasisAtom&) const = default;
    bool operator<(const BasisAtom& o) const;
};

// Evaluates an atom at a point. Throws std::invalid_argument if a keyed
// coordinate is out of range for x.
double eval_atom(const BasisAtom& atom, const Eigen::Ref<const Eigen::RowVectorXd>& x);

// A constant plus a finite, canonicalized map from atoms to coefficients:
// the discrete-support representation of a depth-bounded tree ensemble.
// Zero-coefficient atoms and identically-zero indicators are never stored.
class SparseEnsemble {
  public:
    explicit SparseEnsemble(int dims, double constant = 0.0);

    int dims() const { return dims_; }
    double constant() const { return constant_; }
    void set_constant(double c) { constant_ = c; }
    void add_constant(double c) { constant_ += c; }

    // Merges additively with any existing identical atom; erases the entry
    // if coefficients cancel exactly. Atoms whose indicator is identically
    // zero are dropped and counted in dropped_zero_atoms().
    void add_atom(BasisAtom atom, double coef);

    const std::map<BasisAtom, double>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    int dropped_zero_atoms() const { return dropped_zero_atoms_; }

    // Sum of |coefficient| over stored atoms (the constant is free).
    double weight() const;
    // Max |L|+|U| over stored atoms (0 if none).
    int max_order() const;

    double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

    // Sorted distinct thresholds appearing on coordinate j (both sides).
    std::vector<double> thresholds(int j) const;

    // this + scale * other (dims must match).
    SparseEnsemble axpy(double scale, const SparseEnsemble& other) const;
    SparseEnsemble scaled(double scale) const;

  private:
    int dims_ = 0;
    double constant_ = 0.0;
    std::map<BasisAtom, double> atoms_;
    int dropped_zero_atoms_ = 0;
};

double eval_ensemble(const SparseEnsemble& ens, const Eigen::Ref<const Eigen::RowVectorXd>& x);

// Binary regression tree with right-continuous splits: an internal node
// tests x_j >= t and sends x to the right subtree on success, so the left
// subtree covers {x_j < t}.
class RegressionTree {
  public:
    struct Node {
        bool is_leaf = true;
        int coord = -1;
        double threshold = 0.0;
        double weight = 0.0;
        int left = -1;
        int right = -1;
    };

    static RegressionTree leaf(double weight);
    // Children are grafted; their node indices are remapped.
    static RegressionTree split(int coord, double threshold,
                                const RegressionTree& left, const RegressionTree& right);

    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& root() const { return nodes_[root_]; }
    int root_index() const { return root_; }
    int depth() const;
    // L1 norm of leaf weights; 0 for a constant (single-leaf) tree.
    double leaf_weight_l1() const;

    double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  private:
    std::vector<Node> nodes_;
    int root_ = 0;
    int append(const RegressionTree& sub);
};

double eval_tree(const RegressionTree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& x);

// n x d points with responses; rejects non-finite entries and n < 1.
struct Dataset {
    MatrixXd points;     // n x d
    VectorXd responses;  // n

    Dataset() = default;
    Dataset(MatrixXd x, VectorXd y);

    int n() const { return static_cast<int>(points.rows()); }
    int d() const { return static_cast<int>(points.cols()); }
};

// Size budgets for the lattice computations.
struct Budget {
    // Max number of design-matrix entries (rows * columns).
    std::int64_t design_entries = 5'000'000;
    // Max number of representative-grid cells in exact complexity solves.
    std::int64_t lattice_cells = 2'000'000;
    // Max single-atom expansion size in anchored-orientation rewrites.
    std::int64_t expansion_terms = 1 << 20;
};

// One column of the midpoint design: which coordinates split, and which
// midpoint index (0-based into Grid::midpoints) each side uses.
struct DesignColumn {
    std::vector<int> lower_coords;
    std::vector<int> lower_mid;  // midpoint index per lower coord
    std::vector<int> upper_coords;
    std::vector<int> upper_mid;

    BasisAtom atom(const Grid& grid) const;
};

// Deterministic enumeration of the midpoint-lattice index set for depth
// bound s: all pairs of subsets (L, U) of [d] with 0 < |L|+|U| <= s
// (bitmask-ascending order, L outer), then odometer order over midpoint
// indices. Coordinates with fewer than two distinct values contribute no
// columns.
std::vector<DesignColumn> enumerate_design_columns(const Grid& grid, int s);

// Binary matrix with rows over data points and columns over the index set
// above. Throws BudgetError when rows * columns exceeds budget.design_entries.
MatrixXd design_matrix(const Grid& grid, int s, const Dataset& data,
                       const Budget& budget = {});
MatrixXd design_matrix(const Grid& grid, int s, const MatrixXd& points,
                       const Budget& budget = {});

} // namespace xgbvar
