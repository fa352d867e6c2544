#include "xgbvar/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace xgbvar {

using nlohmann::json;

namespace {

struct PathBounds {
    // Running lower bounds (from >=-splits, max wins) and upper bounds
    // (from <-splits, min wins) per coordinate.
    std::map<int, double> lower;
    std::map<int, double> upper;

    bool empty_region() const {
        for (const auto& [j, l] : lower) {
            auto it = upper.find(j);
            if (it != upper.end() && l >= it->second) return true;
        }
        return false;
    }
};

void collect_paths(const RegressionTree& tree, int node, PathBounds bounds,
                   SparseEnsemble& out) {
    const auto& n = tree.nodes()[node];
    if (n.is_leaf) {
        if (bounds.empty_region()) return; // unreachable leaf
        if (bounds.lower.empty() && bounds.upper.empty()) {
            out.add_constant(n.weight);
            return;
        }
        if (n.weight == 0.0) return;
        BasisAtom atom;
        for (const auto& [j, l] : bounds.lower) {
            atom.lower_coords.push_back(j);
            atom.lower_thresholds.push_back(l);
        }
        for (const auto& [j, u] : bounds.upper) {
            atom.upper_coords.push_back(j);
            atom.upper_thresholds.push_back(u);
        }
        out.add_atom(std::move(atom), n.weight);
        return;
    }
    PathBounds left = bounds;
    auto [lit, linserted] = left.upper.try_emplace(n.coord, n.threshold);
    if (!linserted) lit->second = std::min(lit->second, n.threshold);
    collect_paths(tree, n.left, std::move(left), out);

    PathBounds right = std::move(bounds);
    auto [rit, rinserted] = right.lower.try_emplace(n.coord, n.threshold);
    if (!rinserted) rit->second = std::max(rit->second, n.threshold);
    collect_paths(tree, n.right, std::move(right), out);
}

} // namespace

SparseEnsemble tree_to_ensemble(const RegressionTree& tree, int dims) {
    SparseEnsemble out(dims, 0.0);
    collect_paths(tree, tree.root_index(), {}, out);
    return out;
}

SparseEnsemble dump_to_ensemble(const ModelDump& dump) {
    SparseEnsemble out(std::max(dump.feature_count, 1), dump.base_score);
    for (const auto& tree : dump.trees) out = out.axpy(1.0, tree_to_ensemble(tree, out.dims()));
    return out;
}

namespace {

int parse_feature(const json& split, int& max_feature) {
    int coord = -1;
    if (split.is_number_integer()) {
        coord = split.get<int>();
    } else if (split.is_string()) {
        const std::string name = split.get<std::string>();
        if (name.size() < 2 || name[0] != 'f')
            throw ParseError("parse_xgb_dump: unknown feature name '" + name + "'");
        try {
            std::size_t pos = 0;
            coord = std::stoi(name.substr(1), &pos);
            if (pos != name.size() - 1) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ParseError("parse_xgb_dump: unknown feature name '" + name + "'");
        }
    } else {
        throw ParseError("parse_xgb_dump: split field must be a feature name or index");
    }
    if (coord < 0) throw ParseError("parse_xgb_dump: negative feature index");
    max_feature = std::max(max_feature, coord);
    return coord;
}

RegressionTree parse_node(const json& node, int& max_feature) {
    if (!node.is_object()) throw ParseError("parse_xgb_dump: tree node is not an object");
    if (node.contains("leaf")) {
        if (!node["leaf"].is_number()) throw ParseError("parse_xgb_dump: leaf value not numeric");
        return RegressionTree::leaf(node["leaf"].get<double>());
    }
    for (const char* field : {"nodeid", "split", "split_condition", "yes", "no", "children"})
        if (!node.contains(field))
            throw ParseError(std::string("parse_xgb_dump: split node missing field '") + field + "'");
    const int coord = parse_feature(node["split"], max_feature);
    const double threshold = node["split_condition"].get<double>();
    const long long yes_id = node["yes"].get<long long>();
    const long long no_id = node["no"].get<long long>();
    if (node.contains("missing")) {
        const long long missing_id = node["missing"].get<long long>();
        if (missing_id != yes_id && missing_id != no_id)
            throw ParseError("parse_xgb_dump: missing-branch differs from both children; "
                             "learned missing-direction models are not supported");
    }
    const json& children = node["children"];
    if (!children.is_array() || children.size() != 2)
        throw ParseError("parse_xgb_dump: split node must have exactly two children");
    const json* yes_child = nullptr;
    const json* no_child = nullptr;
    for (const json& ch : children) {
        if (!ch.contains("nodeid")) throw ParseError("parse_xgb_dump: child missing nodeid");
        const long long id = ch["nodeid"].get<long long>();
        if (id == yes_id) yes_child = &ch;
        else if (id == no_id) no_child = &ch;
    }
    if (!yes_child || !no_child)
        throw ParseError("parse_xgb_dump: yes/no ids do not match the children");
    // yes-branch is taken when x < split_condition, i.e. it is the left subtree.
    RegressionTree left = parse_node(*yes_child, max_feature);
    RegressionTree right = parse_node(*no_child, max_feature);
    return RegressionTree::split(coord, threshold, left, right);
}

} // namespace

ModelDump parse_xgb_dump(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("parse_xgb_dump: malformed JSON: ") + e.what());
    }
    ModelDump dump;
    const json* trees = nullptr;
    if (doc.is_array()) {
        trees = &doc;
    } else if (doc.is_object() && doc.contains("trees")) {
        trees = &doc["trees"];
        if (doc.contains("base_score")) dump.base_score = doc["base_score"].get<double>();
        if (doc.contains("metadata") && doc["metadata"].is_string())
            dump.source_metadata = doc["metadata"].get<std::string>();
    } else {
        throw ParseError("parse_xgb_dump: expected an array of trees or {\"trees\": [...]}");
    }
    if (!trees->is_array()) throw ParseError("parse_xgb_dump: trees field is not an array");
    int max_feature = -1;
    for (const json& t : *trees) dump.trees.push_back(parse_node(t, max_feature));
    dump.feature_count = max_feature + 1;
    return dump;
}

namespace {

// Minimal RFC-4180 field splitter (quotes, escaped quotes, CRLF).
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

double parse_cell(const std::string& cell, int row, const std::string& col) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
        if (pos != cell.size()) throw std::invalid_argument("");
        if (!std::isfinite(v)) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ParseError("load_dataset: non-numeric or non-finite cell '" + cell +
                         "' in column '" + col + "', data row " + std::to_string(row));
    }
}

} // namespace

Dataset load_dataset(const std::string& text, const std::string& response_column) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("load_dataset: empty input");
    const std::vector<std::string> header = split_csv_line(line);
    int response_idx = -1;
    for (std::size_t k = 0; k < header.size(); ++k)
        if (header[k] == response_column) response_idx = static_cast<int>(k);
    if (response_idx < 0)
        throw ParseError("load_dataset: missing response column '" + response_column + "'");
    const int d = static_cast<int>(header.size()) - 1;
    if (d < 1) throw ParseError("load_dataset: need at least one covariate column");

    std::vector<std::vector<double>> rows;
    std::vector<double> ys;
    int row_no = 0;
    while (std::getline(in, line)) {
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        ++row_no;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw ParseError("load_dataset: row " + std::to_string(row_no) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(header.size()));
        std::vector<double> x;
        x.reserve(d);
        for (std::size_t k = 0; k < fields.size(); ++k) {
            const double v = parse_cell(fields[k], row_no, header[k]);
            if (static_cast<int>(k) == response_idx)
                ys.push_back(v);
            else
                x.push_back(v);
        }
        rows.push_back(std::move(x));
    }
    if (rows.empty()) throw ParseError("load_dataset: no data rows");
    MatrixXd points(static_cast<Eigen::Index>(rows.size()), d);
    VectorXd y(static_cast<Eigen::Index>(ys.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int j = 0; j < d; ++j) points(static_cast<Eigen::Index>(i), j) = rows[i][j];
        y[static_cast<Eigen::Index>(i)] = ys[i];
    }
    return Dataset(std::move(points), std::move(y));
}

Grid grid_from_points(const MatrixXd& points) {
    std::vector<std::vector<double>> values(points.cols());
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
        std::set<double> distinct;
        for (Eigen::Index i = 0; i < points.rows(); ++i) distinct.insert(points(i, j));
        values[static_cast<std::size_t>(j)].assign(distinct.begin(), distinct.end());
    }
    return Grid(std::move(values));
}

Grid grid_from_dataset(const Dataset& data) { return grid_from_points(data.points); }

} // namespace xgbvar
