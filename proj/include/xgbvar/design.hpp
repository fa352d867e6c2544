#pragma once

#include <cstdint>
#include <vector>

#include "xgbvar/types.hpp"

namespace xgbvar {

// Implicit representation of the midpoint design matrix. Column order is
// identical to enumerate_design_columns. Gradients X'r over all columns are
// computed per (L, U) block by scattering r into a rank table and running
// suffix sums along lower axes and prefix sums along upper axes, so a full
// pass costs O(sum of block sizes + n) instead of O(n * |J|).
class MidpointDesign {
  public:
    MidpointDesign(const Grid& grid, int s, const MatrixXd& points,
                   std::int64_t table_budget = 64'000'000);

    std::int64_t num_columns() const { return total_columns_; }
    int num_points() const { return static_cast<int>(points_.rows()); }
    const Grid& grid() const { return grid_; }

    BasisAtom column_atom(std::int64_t col) const;
    // Evaluations of one column at the data points.
    VectorXd column_values(std::int64_t col) const;

    // Calls cb(col, (X'r)_col) for every column with a nonzero-support
    // block; columns of all-empty blocks are skipped (their gradient is 0).
    template <typename Callback>
    void scan_gradient(const VectorXd& r, Callback&& cb) const {
        std::vector<double> buffer;
        for (std::size_t b = 0; b < blocks_.size(); ++b)
            scan_block(b, r, buffer, [&](std::int64_t local, double g) {
                cb(blocks_[b].column_offset + local, g);
            });
    }

    struct Violator {
        std::int64_t col;
        double gradient; // (X'r)_col
    };
    // Top `count` columns by |X'r|, excluding `exclude` (sorted ascending).
    std::vector<Violator> top_columns(const VectorXd& r, int count,
                                      const std::vector<std::int64_t>& exclude) const;
    // max_j |(X'r)_j|.
    double max_abs_gradient(const VectorXd& r) const;

  private:
    struct Block {
        std::vector<int> coords;      // lower coords then upper coords
        int lower_count = 0;          // first lower_count axes are lower-type
        std::vector<int> axis_size;   // midpoint count per axis
        std::int64_t column_offset = 0;
        std::int64_t columns = 0;     // product of axis sizes
    };

    Grid grid_;
    MatrixXd points_;
    std::vector<Block> blocks_;
    std::int64_t total_columns_ = 0;
    // rank_(i, j): number of midpoints of coordinate j that are <= x_ij.
    Eigen::MatrixXi rank_;

    template <typename Callback>
    void scan_block(std::size_t block_index, const VectorXd& r, std::vector<double>& buffer,
                    Callback&& cb) const;
};

template <typename Callback>
void MidpointDesign::scan_block(std::size_t block_index, const VectorXd& r,
                                std::vector<double>& buffer, Callback&& cb) const {
    const Block& blk = blocks_[block_index];
    const int k = static_cast<int>(blk.coords.size());
    // Scatter buffer has one extra slot per axis (rank ranges over 0..K).
    std::vector<std::int64_t> dims(k), stride(k);
    std::int64_t size = 1;
    for (int a = k - 1; a >= 0; --a) {
        dims[a] = blk.axis_size[a] + 1;
        stride[a] = size;
        size *= dims[a];
    }
    buffer.assign(static_cast<std::size_t>(size), 0.0);
    const int n = static_cast<int>(points_.rows());
    for (int i = 0; i < n; ++i) {
        std::int64_t pos = 0;
        for (int a = 0; a < k; ++a) pos += stride[a] * rank_(i, blk.coords[a]);
        buffer[static_cast<std::size_t>(pos)] += r[i];
    }
    // Lower axis a: T[p] = sum of mass at rank > p  -> suffix sums.
    // Upper axis a: T[q] = sum of mass at rank <= q -> prefix sums.
    for (int a = 0; a < k; ++a) {
        const std::int64_t d = dims[a], st = stride[a];
        const std::int64_t lines = size / d;
        for (std::int64_t o = 0; o < lines; ++o) {
            const std::int64_t base = (o / st) * (d * st) + (o % st);
            if (a < blk.lower_count) {
                for (std::int64_t c = d - 2; c >= 0; --c)
                    buffer[base + c * st] += buffer[base + (c + 1) * st];
            } else {
                for (std::int64_t c = 1; c < d; ++c)
                    buffer[base + c * st] += buffer[base + (c - 1) * st];
            }
        }
    }
    // Emit in row-major column order (last axis fastest), reading lower axes
    // at p+1 and upper axes at q.
    std::vector<int> idx(k, 0);
    const std::int64_t cols = blk.columns;
    for (std::int64_t local = 0; local < cols; ++local) {
        std::int64_t pos = 0;
        for (int a = 0; a < k; ++a) {
            const std::int64_t read = (a < blk.lower_count) ? idx[a] + 1 : idx[a];
            pos += stride[a] * read;
        }
        cb(local, buffer[static_cast<std::size_t>(pos)]);
        for (int a = k - 1; a >= 0; --a) {
            if (++idx[a] < blk.axis_size[a]) break;
            idx[a] = 0;
        }
    }
}

} // namespace xgbvar
