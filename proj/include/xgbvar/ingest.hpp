#pragma once

#include <string>
#include <vector>

#include "xgbvar/types.hpp"

namespace xgbvar {

// A parsed model: the trees of an XGBoost JSON dump plus the feature count.
struct ModelDump {
    std::vector<RegressionTree> trees;
    int feature_count = 0;
    double base_score = 0.0;
    std::string source_metadata;
};

// Decomposes a tree into one atom per reachable root-to-leaf path: L holds
// the coordinates with >=-splits (threshold = max along the path), U the
// coordinates with <-splits (threshold = min), coefficient = leaf weight.
// Paths whose region is empty are unreachable and dropped; a depth-0 tree
// contributes only to the constant.
SparseEnsemble tree_to_ensemble(const RegressionTree& tree, int dims);

// Sum of tree_to_ensemble over a dump's trees plus base_score.
SparseEnsemble dump_to_ensemble(const ModelDump& dump);

// Parses the standard per-tree JSON dump format (fields nodeid, split,
// split_condition, yes, no, missing, children, leaf). The yes-branch covers
// {x < split_condition}. Feature names of the form "fK" map to coordinate K.
// Models whose missing-branch differs from both children are rejected.
// Accepts either a top-level array of trees or an object
// {"base_score": b, "trees": [...]}.
ModelDump parse_xgb_dump(const std::string& text);

// RFC-4180-style CSV with a header row; every column numeric. The response
// column is selected by name, remaining columns become coordinates in field
// order. Throws ParseError on non-numeric cells, NaN, or a missing response.
Dataset load_dataset(const std::string& text, const std::string& response_column);

// Per-coordinate sorted deduplicated values of the data points.
Grid grid_from_dataset(const Dataset& data);
Grid grid_from_points(const MatrixXd& points);

} // namespace xgbvar
