#include "xgbvar/design.hpp"

#include <algorithm>
#include <queue>

namespace xgbvar {

MidpointDesign::MidpointDesign(const Grid& grid, int s, const MatrixXd& points,
                               std::int64_t table_budget)
    : grid_(grid), points_(points) {
    const int d = grid_.dims();
    if (points_.cols() != d)
        throw std::invalid_argument("MidpointDesign: point/grid dimension mismatch");
    if (d > 24) throw BudgetError("MidpointDesign: too many coordinates");

    rank_.resize(points_.rows(), d);
    for (int j = 0; j < d; ++j) {
        const auto& mids = grid_.midpoints(j);
        for (Eigen::Index i = 0; i < points_.rows(); ++i) {
            const double x = points_(i, j);
            rank_(i, j) = static_cast<int>(
                std::upper_bound(mids.begin(), mids.end(), x) - mids.begin());
        }
    }

    // Block order mirrors enumerate_design_columns: L bitmask ascending,
    // then U bitmask ascending.
    const unsigned total = 1u << d;
    for (unsigned lmask = 0; lmask < total; ++lmask) {
        const int lsize = __builtin_popcount(lmask);
        if (lsize > s) continue;
        for (unsigned umask = 0; umask < total; ++umask) {
            const int usize = __builtin_popcount(umask);
            const int order = lsize + usize;
            if (order == 0 || order > s) continue;
            Block blk;
            blk.lower_count = lsize;
            bool any_empty = false;
            for (int j = 0; j < d; ++j)
                if ((lmask >> j) & 1u) {
                    if (grid_.count(j) < 2) any_empty = true;
                    blk.coords.push_back(j);
                    blk.axis_size.push_back(grid_.count(j) - 1);
                }
            for (int j = 0; j < d; ++j)
                if ((umask >> j) & 1u) {
                    if (grid_.count(j) < 2) any_empty = true;
                    blk.coords.push_back(j);
                    blk.axis_size.push_back(grid_.count(j) - 1);
                }
            if (any_empty) continue;
            std::int64_t cols = 1, table = 1;
            for (int sz : blk.axis_size) {
                cols *= sz;
                table *= sz + 1;
            }
            if (table > table_budget)
                throw BudgetError("MidpointDesign: a design block exceeds the table budget");
            blk.columns = cols;
            blk.column_offset = total_columns_;
            total_columns_ += cols;
            blocks_.push_back(std::move(blk));
        }
    }
}

BasisAtom MidpointDesign::column_atom(std::int64_t col) const {
    if (col < 0 || col >= total_columns_)
        throw std::invalid_argument("MidpointDesign: column out of range");
    std::size_t b = 0;
    while (b + 1 < blocks_.size() && blocks_[b + 1].column_offset <= col) ++b;
    const Block& blk = blocks_[b];
    std::int64_t local = col - blk.column_offset;
    const int k = static_cast<int>(blk.coords.size());
    std::vector<int> idx(k, 0);
    for (int a = k - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(local % blk.axis_size[a]);
        local /= blk.axis_size[a];
    }
    BasisAtom atom;
    for (int a = 0; a < k; ++a) {
        const int j = blk.coords[a];
        const double threshold = grid_.midpoints(j)[idx[a]];
        if (a < blk.lower_count) {
            atom.lower_coords.push_back(j);
            atom.lower_thresholds.push_back(threshold);
        } else {
            atom.upper_coords.push_back(j);
            atom.upper_thresholds.push_back(threshold);
        }
    }
    atom.canonicalize(grid_.dims());
    return atom;
}

VectorXd MidpointDesign::column_values(std::int64_t col) const {
    const BasisAtom atom = column_atom(col);
    VectorXd v(points_.rows());
    for (Eigen::Index i = 0; i < points_.rows(); ++i) v[i] = eval_atom(atom, points_.row(i));
    return v;
}

std::vector<MidpointDesign::Violator> MidpointDesign::top_columns(
    const VectorXd& r, int count, const std::vector<std::int64_t>& exclude) const {
    using Entry = std::pair<double, Violator>; // key = |gradient|
    auto cmp = [](const Entry& a, const Entry& b) { return a.first > b.first; };
    std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
    scan_gradient(r, [&](std::int64_t col, double g) {
        const double mag = std::abs(g);
        if (mag == 0.0) return;
        if (std::binary_search(exclude.begin(), exclude.end(), col)) return;
        if (static_cast<int>(heap.size()) < count) {
            heap.push({mag, {col, g}});
        } else if (mag > heap.top().first) {
            heap.pop();
            heap.push({mag, {col, g}});
        }
    });
    std::vector<Violator> out;
    while (!heap.empty()) {
        out.push_back(heap.top().second);
        heap.pop();
    }
    std::reverse(out.begin(), out.end()); // largest first
    return out;
}

double MidpointDesign::max_abs_gradient(const VectorXd& r) const {
    double best = 0.0;
    scan_gradient(r, [&](std::int64_t, double g) { best = std::max(best, std::abs(g)); });
    return best;
}

} // namespace xgbvar
