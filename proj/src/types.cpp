#include "xgbvar/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace xgbvar {

Grid::Grid(std::vector<std::vector<double>> values) : values_(std::move(values)) {
    midpoints_.reserve(values_.size());
    for (const auto& v : values_) {
        if (v.empty()) throw std::invalid_argument("Grid: coordinate with no values");
        for (std::size_t k = 0; k + 1 < v.size(); ++k) {
            if (!(v[k] < v[k + 1]))
                throw std::invalid_argument("Grid: values must be strictly increasing");
        }
        for (double x : v) {
            if (!std::isfinite(x)) throw std::invalid_argument("Grid: non-finite value");
        }
        std::vector<double> mids;
        mids.reserve(v.size() - 1);
        for (std::size_t k = 0; k + 1 < v.size(); ++k) mids.push_back((v[k] + v[k + 1]) / 2.0);
        midpoints_.push_back(std::move(mids));
    }
}

namespace {

void sort_side(std::vector<int>& coords, std::vector<double>& thresholds, int dims,
               const char* side) {
    if (coords.size() != thresholds.size())
        throw std::invalid_argument(std::string("BasisAtom: ") + side +
                                    " coords/thresholds length mismatch");
    std::vector<std::size_t> idx(coords.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return coords[a] < coords[b];
    });
    std::vector<int> c;
    std::vector<double> t;
    c.reserve(coords.size());
    t.reserve(coords.size());
    for (std::size_t k : idx) {
        if (coords[k] < 0 || coords[k] >= dims)
            throw std::invalid_argument("BasisAtom: coordinate index out of range");
        if (!std::isfinite(thresholds[k]))
            throw std::invalid_argument("BasisAtom: non-finite threshold");
        if (!c.empty() && c.back() == coords[k])
            throw std::invalid_argument("BasisAtom: duplicate coordinate on one side");
        c.push_back(coords[k]);
        t.push_back(thresholds[k]);
    }
    coords = std::move(c);
    thresholds = std::move(t);
}

} // namespace

void BasisAtom::canonicalize(int dims) {
    sort_side(lower_coords, lower_thresholds, dims, "lower");
    sort_side(upper_coords, upper_thresholds, dims, "upper");
    if (order() == 0) throw std::invalid_argument("BasisAtom: empty atom");
}

bool BasisAtom::empty_interval() const {
    std::size_t a = 0, b = 0;
    while (a < lower_coords.size() && b < upper_coords.size()) {
        if (lower_coords[a] < upper_coords[b]) {
            ++a;
        } else if (lower_coords[a] > upper_coords[b]) {
            ++b;
        } else {
            if (lower_thresholds[a] >= upper_thresholds[b]) return true;
            ++a;
            ++b;
        }
    }
    return false;
}

bool BasisAtom::operator<(const BasisAtom& o) const {
    if (lower_coords != o.lower_coords) return lower_coords < o.lower_coords;
    if (upper_coords != o.upper_coords) return upper_coords < o.upper_coords;
    if (lower_thresholds != o.lower_thresholds) return lower_thresholds < o.lower_thresholds;
    return upper_thresholds < o.upper_thresholds;
}

double eval_atom(const BasisAtom& atom, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    for (std::size_t k = 0; k < atom.lower_coords.size(); ++k) {
        int j = atom.lower_coords[k];
        if (j < 0 || j >= x.size()) throw std::invalid_argument("eval_atom: coordinate out of range");
        if (!(x[j] >= atom.lower_thresholds[k])) return 0.0;
    }
    for (std::size_t k = 0; k < atom.upper_coords.size(); ++k) {
        int j = atom.upper_coords[k];
        if (j < 0 || j >= x.size()) throw std::invalid_argument("eval_atom: coordinate out of range");
        if (!(x[j] < atom.upper_thresholds[k])) return 0.0;
    }
    return 1.0;
}

SparseEnsemble::SparseEnsemble(int dims, double constant) : dims_(dims), constant_(constant) {
    if (dims < 1) throw std::invalid_argument("SparseEnsemble: dims must be >= 1");
}

void SparseEnsemble::add_atom(BasisAtom atom, double coef) {
    if (coef == 0.0) return;
    atom.canonicalize(dims_);
    if (atom.empty_interval()) {
        ++dropped_zero_atoms_;
        return;
    }
    auto [it, inserted] = atoms_.try_emplace(std::move(atom), coef);
    if (!inserted) {
        it->second += coef;
        if (it->second == 0.0) atoms_.erase(it);
    }
}

double SparseEnsemble::weight() const {
    double w = 0.0;
    for (const auto& [atom, coef] : atoms_) w += std::abs(coef);
    return w;
}

int SparseEnsemble::max_order() const {
    int m = 0;
    for (const auto& [atom, coef] : atoms_) m = std::max(m, atom.order());
    return m;
}

double SparseEnsemble::operator()(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    double v = constant_;
    for (const auto& [atom, coef] : atoms_) v += coef * eval_atom(atom, x);
    return v;
}

std::vector<double> SparseEnsemble::thresholds(int j) const {
    std::set<double> t;
    for (const auto& [atom, coef] : atoms_) {
        for (std::size_t k = 0; k < atom.lower_coords.size(); ++k)
            if (atom.lower_coords[k] == j) t.insert(atom.lower_thresholds[k]);
        for (std::size_t k = 0; k < atom.upper_coords.size(); ++k)
            if (atom.upper_coords[k] == j) t.insert(atom.upper_thresholds[k]);
    }
    return {t.begin(), t.end()};
}

SparseEnsemble SparseEnsemble::axpy(double scale, const SparseEnsemble& other) const {
    if (other.dims_ != dims_) throw std::invalid_argument("axpy: dimension mismatch");
    SparseEnsemble out = *this;
    out.constant_ += scale * other.constant_;
    for (const auto& [atom, coef] : other.atoms_) out.add_atom(atom, scale * coef);
    return out;
}

SparseEnsemble SparseEnsemble::scaled(double scale) const {
    SparseEnsemble out(dims_, scale * constant_);
    if (scale != 0.0)
        for (const auto& [atom, coef] : atoms_) out.add_atom(atom, scale * coef);
    return out;
}

double eval_ensemble(const SparseEnsemble& ens, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    return ens(x);
}

RegressionTree RegressionTree::leaf(double weight) {
    RegressionTree t;
    t.nodes_.push_back(Node{true, -1, 0.0, weight, -1, -1});
    t.root_ = 0;
    return t;
}

int RegressionTree::append(const RegressionTree& sub) {
    int offset = static_cast<int>(nodes_.size());
    for (Node n : sub.nodes_) {
        if (!n.is_leaf) {
            n.left += offset;
            n.right += offset;
        }
        nodes_.push_back(n);
    }
    return sub.root_ + offset;
}

RegressionTree RegressionTree::split(int coord, double threshold,
                                     const RegressionTree& left, const RegressionTree& right) {
    if (coord < 0) throw std::invalid_argument("RegressionTree: bad split coordinate");
    RegressionTree t;
    int li = t.append(left);
    int ri = t.append(right);
    t.nodes_.push_back(Node{false, coord, threshold, 0.0, li, ri});
    t.root_ = static_cast<int>(t.nodes_.size()) - 1;
    return t;
}

int RegressionTree::depth() const {
    // Iterative depth over the node DAG rooted at root_.
    std::vector<std::pair<int, int>> stack{{root_, 0}};
    int d = 0;
    while (!stack.empty()) {
        auto [i, depth_here] = stack.back();
        stack.pop_back();
        const Node& n = nodes_[i];
        if (n.is_leaf) {
            d = std::max(d, depth_here);
        } else {
            stack.emplace_back(n.left, depth_here + 1);
            stack.emplace_back(n.right, depth_here + 1);
        }
    }
    return d;
}

double RegressionTree::leaf_weight_l1() const {
    if (nodes_.size() == 1 && nodes_[root_].is_leaf) return 0.0;
    double w = 0.0;
    for (const Node& n : nodes_)
        if (n.is_leaf) w += std::abs(n.weight);
    return w;
}

double RegressionTree::operator()(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    int i = root_;
    while (!nodes_[i].is_leaf) {
        const Node& n = nodes_[i];
        i = (x[n.coord] >= n.threshold) ? n.right : n.left;
    }
    return nodes_[i].weight;
}

double eval_tree(const RegressionTree& tree, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    return tree(x);
}

Dataset::Dataset(MatrixXd x, VectorXd y) : points(std::move(x)), responses(std::move(y)) {
    if (points.rows() < 1) throw std::invalid_argument("Dataset: need at least one row");
    if (points.rows() != responses.size())
        throw std::invalid_argument("Dataset: points/responses size mismatch");
    if (!points.allFinite() || !responses.allFinite())
        throw std::invalid_argument("Dataset: non-finite entry");
}

BasisAtom DesignColumn::atom(const Grid& grid) const {
    BasisAtom a;
    a.lower_coords = lower_coords;
    a.upper_coords = upper_coords;
    for (std::size_t k = 0; k < lower_coords.size(); ++k)
        a.lower_thresholds.push_back(grid.midpoints(lower_coords[k])[lower_mid[k]]);
    for (std::size_t k = 0; k < upper_coords.size(); ++k)
        a.upper_thresholds.push_back(grid.midpoints(upper_coords[k])[upper_mid[k]]);
    return a;
}

namespace {

std::vector<int> bits_of(unsigned mask) {
    std::vector<int> out;
    for (int j = 0; mask; ++j, mask >>= 1)
        if (mask & 1u) out.push_back(j);
    return out;
}

} // namespace

std::vector<DesignColumn> enumerate_design_columns(const Grid& grid, int s) {
    const int d = grid.dims();
    if (d > 24) throw BudgetError("enumerate_design_columns: too many coordinates");
    std::vector<DesignColumn> cols;
    const unsigned total = 1u << d;
    for (unsigned lmask = 0; lmask < total; ++lmask) {
        const int lsize = __builtin_popcount(lmask);
        if (lsize > s) continue;
        for (unsigned umask = 0; umask < total; ++umask) {
            const int usize = __builtin_popcount(umask);
            const int order = lsize + usize;
            if (order == 0 || order > s) continue;
            std::vector<int> lc = bits_of(lmask);
            std::vector<int> uc = bits_of(umask);
            bool any_empty = false;
            for (int j : lc)
                if (grid.count(j) < 2) any_empty = true;
            for (int j : uc)
                if (grid.count(j) < 2) any_empty = true;
            if (any_empty) continue;

            // Odometer over midpoint indices, lower side then upper side,
            // last coordinate fastest.
            std::vector<int> counter(order, 0);
            std::vector<int> limits;
            limits.reserve(order);
            for (int j : lc) limits.push_back(grid.count(j) - 1);
            for (int j : uc) limits.push_back(grid.count(j) - 1);
            while (true) {
                DesignColumn col;
                col.lower_coords = lc;
                col.upper_coords = uc;
                col.lower_mid.assign(counter.begin(), counter.begin() + lsize);
                col.upper_mid.assign(counter.begin() + lsize, counter.end());
                cols.push_back(std::move(col));
                int k = order - 1;
                while (k >= 0) {
                    if (++counter[k] < limits[k]) break;
                    counter[k] = 0;
                    --k;
                }
                if (k < 0) break;
            }
        }
    }
    return cols;
}

MatrixXd design_matrix(const Grid& grid, int s, const MatrixXd& points, const Budget& budget) {
    auto cols = enumerate_design_columns(grid, s);
    const std::int64_t entries =
        static_cast<std::int64_t>(points.rows()) * static_cast<std::int64_t>(cols.size());
    if (entries > budget.design_entries)
        throw BudgetError("design_matrix: " + std::to_string(cols.size()) + " columns x " +
                          std::to_string(points.rows()) + " rows exceeds the entry budget of " +
                          std::to_string(budget.design_entries));
    MatrixXd X = MatrixXd::Zero(points.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const BasisAtom atom = cols[c].atom(grid);
        for (Eigen::Index i = 0; i < points.rows(); ++i)
            X(i, static_cast<Eigen::Index>(c)) = eval_atom(atom, points.row(i));
    }
    return X;
}

MatrixXd design_matrix(const Grid& grid, int s, const Dataset& data, const Budget& budget) {
    return design_matrix(grid, s, data.points, budget);
}

} // namespace xgbvar
