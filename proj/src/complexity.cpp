#include "xgbvar/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <utility>

namespace xgbvar {

std::string Anchor::to_string() const {
    std::string s;
    s.reserve(plus.size());
    for (bool p : plus) s += p ? '+' : '-';
    return s;
}

Anchor Anchor::from_string(const std::string& text) {
    Anchor a;
    for (char ch : text) {
        if (ch == '+') a.plus.push_back(true);
        else if (ch == '-') a.plus.push_back(false);
        else throw std::invalid_argument("Anchor: expected a string over {-,+}");
    }
    return a;
}

std::vector<Anchor> all_anchors(int dims) {
    std::vector<Anchor> out;
    const unsigned total = 1u << dims;
    for (unsigned mask = 0; mask < total; ++mask) {
        Anchor a;
        a.plus.resize(dims);
        for (int j = 0; j < dims; ++j) a.plus[j] = (mask >> j) & 1u;
        out.push_back(std::move(a));
    }
    return out;
}

double vxgb_points(const Grid& grid, int s, const MatrixXd& points, const VectorXd& z,
                   const Budget& budget) {
    if (!z.allFinite()) throw std::invalid_argument("vxgb_points: non-finite targets");
    if (points.rows() != z.size())
        throw std::invalid_argument("vxgb_points: points/targets size mismatch");
    const MatrixXd X = design_matrix(grid, s, points, budget);
    return basis_pursuit(X, z).value;
}

double vxgb_points(const Dataset& data, int s, const VectorXd& z, const Budget& budget) {
    std::vector<std::vector<double>> values(data.d());
    for (int j = 0; j < data.d(); ++j) {
        std::set<double> distinct;
        for (int i = 0; i < data.n(); ++i) distinct.insert(data.points(i, j));
        values[j].assign(distinct.begin(), distinct.end());
    }
    return vxgb_points(Grid(std::move(values)), s, data.points, z, budget);
}

namespace {

// The function's own jump lattice: active coordinates, their sorted
// thresholds, and one representative point per refinement cell
// (t_1 - 1, t_1, ..., t_n per coordinate).
struct JumpLattice {
    std::vector<int> coords;
    std::vector<std::vector<double>> thresholds;  // per active coordinate
    std::vector<std::vector<double>> representatives;
};

JumpLattice jump_lattice(const SparseEnsemble& ens) {
    JumpLattice lat;
    for (int j = 0; j < ens.dims(); ++j) {
        std::vector<double> t = ens.thresholds(j);
        if (t.empty()) continue;
        std::vector<double> reps;
        reps.reserve(t.size() + 1);
        reps.push_back(t.front() - 1.0);
        for (double v : t) reps.push_back(v);
        lat.coords.push_back(j);
        lat.thresholds.push_back(std::move(t));
        lat.representatives.push_back(std::move(reps));
    }
    return lat;
}

MatrixXd representative_points(const SparseEnsemble& ens, const JumpLattice& lat,
                               const Budget& budget) {
    std::int64_t cells = 1;
    for (const auto& reps : lat.representatives) {
        cells *= static_cast<std::int64_t>(reps.size());
        if (cells > budget.lattice_cells)
            throw BudgetError("vxgb_ensemble: refinement grid exceeds the cell budget of " +
                              std::to_string(budget.lattice_cells));
    }
    MatrixXd pts = MatrixXd::Zero(cells, ens.dims());
    std::vector<std::size_t> idx(lat.coords.size(), 0);
    for (std::int64_t row = 0; row < cells; ++row) {
        for (std::size_t k = 0; k < lat.coords.size(); ++k)
            pts(row, lat.coords[k]) = lat.representatives[k][idx[k]];
        for (int k = static_cast<int>(idx.size()) - 1; k >= 0; --k) {
            if (++idx[k] < lat.representatives[k].size()) break;
            idx[k] = 0;
        }
    }
    return pts;
}

// Dictionary of lattice atoms with 0 < |L|+|U| <= s, thresholds drawn from
// the function's own jump values. Identically-empty interval atoms are
// skipped; `disjoint_only` additionally restricts to L and U disjoint.
std::vector<BasisAtom> lattice_dictionary(const JumpLattice& lat, int s, bool disjoint_only) {
    const int k = static_cast<int>(lat.coords.size());
    std::vector<BasisAtom> dict;
    if (k > 24) throw BudgetError("lattice_dictionary: too many active coordinates");
    const unsigned total = 1u << k;
    for (unsigned lmask = 0; lmask < total; ++lmask) {
        const int lsize = __builtin_popcount(lmask);
        if (lsize > s) continue;
        for (unsigned umask = 0; umask < total; ++umask) {
            const int usize = __builtin_popcount(umask);
            const int order = lsize + usize;
            if (order == 0 || order > s) continue;
            if (disjoint_only && (lmask & umask)) continue;
            std::vector<int> lidx, uidx;
            for (int c = 0; c < k; ++c) {
                if ((lmask >> c) & 1u) lidx.push_back(c);
                if ((umask >> c) & 1u) uidx.push_back(c);
            }
            std::vector<std::size_t> counter(order, 0);
            std::vector<std::size_t> limits;
            for (int c : lidx) limits.push_back(lat.thresholds[c].size());
            for (int c : uidx) limits.push_back(lat.thresholds[c].size());
            while (true) {
                BasisAtom atom;
                for (std::size_t a = 0; a < lidx.size(); ++a) {
                    atom.lower_coords.push_back(lat.coords[lidx[a]]);
                    atom.lower_thresholds.push_back(lat.thresholds[lidx[a]][counter[a]]);
                }
                for (std::size_t a = 0; a < uidx.size(); ++a) {
                    atom.upper_coords.push_back(lat.coords[uidx[a]]);
                    atom.upper_thresholds.push_back(
                        lat.thresholds[uidx[a]][counter[lidx.size() + a]]);
                }
                if (!atom.empty_interval()) dict.push_back(std::move(atom));
                int a = order - 1;
                while (a >= 0) {
                    if (++counter[a] < limits[a]) break;
                    counter[a] = 0;
                    --a;
                }
                if (a < 0) break;
            }
        }
    }
    return dict;
}

struct LatticeLp {
    std::vector<BasisAtom> dict;
    BasisPursuitResult result;
};

LatticeLp solve_lattice_lp(const SparseEnsemble& ens, int s, bool disjoint_only,
                           const Budget& budget, const char* who) {
    if (s < 1) throw std::invalid_argument(std::string(who) + ": depth bound must be >= 1");
    LatticeLp out;
    if (ens.atoms().empty()) {
        out.result.constant = ens.constant();
        out.result.value = 0.0;
        return out;
    }
    const JumpLattice lat = jump_lattice(ens);
    const MatrixXd pts = representative_points(ens, lat, budget);
    out.dict = lattice_dictionary(lat, s, disjoint_only);
    const std::int64_t entries = static_cast<std::int64_t>(pts.rows()) *
                                 static_cast<std::int64_t>(out.dict.size());
    if (entries > budget.design_entries)
        throw BudgetError(std::string(who) + ": dictionary exceeds the entry budget");
    MatrixXd X(pts.rows(), static_cast<Eigen::Index>(out.dict.size()));
    for (std::size_t c = 0; c < out.dict.size(); ++c)
        for (Eigen::Index i = 0; i < pts.rows(); ++i)
            X(i, static_cast<Eigen::Index>(c)) = eval_atom(out.dict[c], pts.row(i));
    VectorXd z(pts.rows());
    for (Eigen::Index i = 0; i < pts.rows(); ++i) z[i] = ens(pts.row(i));
    try {
        out.result = basis_pursuit(X, z);
    } catch (const InfeasibleError&) {
        throw InfeasibleError(std::string(who) +
                              ": function is not representable at depth bound s = " +
                              std::to_string(s));
    }
    return out;
}

} // namespace

double vxgb_ensemble(const SparseEnsemble& ens, int s, const Budget& budget) {
    return solve_lattice_lp(ens, s, /*disjoint_only=*/false, budget, "vxgb_ensemble").result.value;
}

double v_tilde(const SparseEnsemble& ens, int s, const Budget& budget) {
    return solve_lattice_lp(ens, s, /*disjoint_only=*/true, budget, "v_tilde").result.value;
}

InfimalConvResult infimal_conv_hk_decomposition(const SparseEnsemble& ens, int s,
                                                const Budget& budget) {
    // The union over anchors of the anchor-oriented dictionaries is exactly
    // the disjoint-split dictionary: an anchor contributes >=-atoms on its
    // -inf coordinates and <-atoms on its +inf coordinates.
    LatticeLp lp = solve_lattice_lp(ens, s, /*disjoint_only=*/true, budget, "infimal_conv_hk");
    InfimalConvResult out;
    out.value = lp.result.value;
    const int d = ens.dims();
    auto piece = [&](const Anchor& a) -> SparseEnsemble& {
        const std::string key = a.to_string();
        auto it = out.pieces.find(key);
        if (it == out.pieces.end())
            it = out.pieces.emplace(key, SparseEnsemble(d, 0.0)).first;
        return it->second;
    };
    // The constant belongs to the all-minus piece.
    piece(Anchor::all_minus(d)).set_constant(lp.result.constant);
    for (std::size_t c = 0; c < lp.dict.size(); ++c) {
        const double coef = lp.result.beta[static_cast<Eigen::Index>(c)];
        if (coef == 0.0) continue;
        // First anchor consistent with the atom's orientation: -inf on the
        // >=-coordinates and on every unused coordinate, +inf on <-coordinates.
        Anchor a = Anchor::all_minus(d);
        for (int j : lp.dict[c].upper_coords) a.plus[j] = true;
        piece(a).add_atom(lp.dict[c], coef);
    }
    return out;
}

double infimal_conv_hk(const SparseEnsemble& ens, int s, const Budget& budget) {
    return infimal_conv_hk_decomposition(ens, s, budget).value;
}

namespace {

// Cell values of a 1D ensemble at its representative points.
std::vector<double> cell_values_1d(const SparseEnsemble& ens) {
    if (ens.dims() != 1)
        throw std::invalid_argument("expected a 1-dimensional ensemble");
    const std::vector<double> t = ens.thresholds(0);
    std::vector<double> vals;
    Eigen::RowVectorXd x(1);
    if (t.empty()) {
        x[0] = 0.0;
        vals.push_back(ens(x));
        return vals;
    }
    x[0] = t.front() - 1.0;
    vals.push_back(ens(x));
    for (double v : t) {
        x[0] = v;
        vals.push_back(ens(x));
    }
    return vals;
}

} // namespace

double total_variation_1d(const SparseEnsemble& ens) {
    const std::vector<double> vals = cell_values_1d(ens);
    double tv = 0.0;
    for (std::size_t k = 0; k + 1 < vals.size(); ++k) tv += std::abs(vals[k + 1] - vals[k]);
    return tv;
}

double limit_gap_1d(const SparseEnsemble& ens) {
    const std::vector<double> vals = cell_values_1d(ens);
    return vals.back() - vals.front();
}

double vxgb_1d(const SparseEnsemble& ens, int s) {
    if (s < 1) throw std::invalid_argument("vxgb_1d: depth bound must be >= 1");
    const double tv = total_variation_1d(ens);
    if (s == 1) return tv;
    return 0.5 * (tv + std::abs(limit_gap_1d(ens)));
}

namespace {

struct Factor {
    bool has_indicator = false;
    double threshold = 0.0;
    int sign = 1;
};

} // namespace

double hk_variation(const SparseEnsemble& ens, const Anchor& a, const Budget& budget) {
    if (static_cast<int>(a.plus.size()) != ens.dims())
        throw std::invalid_argument("hk_variation: anchor dimension mismatch");
    // Key: coordinate subset with one anchored threshold each (orientation is
    // determined by the anchor, so it is not part of the key).
    std::map<std::pair<std::vector<int>, std::vector<double>>, double> masses;

    for (const auto& [atom, coef] : ens.atoms()) {
        // Per-coordinate factor options in the anchor's orientation.
        std::vector<int> coords;
        std::vector<std::vector<Factor>> options;
        std::size_t k_lower = 0, k_upper = 0;
        auto push = [&](int j, std::vector<Factor> opts) {
            coords.push_back(j);
            options.push_back(std::move(opts));
        };
        while (k_lower < atom.lower_coords.size() || k_upper < atom.upper_coords.size()) {
            const int jl = k_lower < atom.lower_coords.size() ? atom.lower_coords[k_lower]
                                                              : std::numeric_limits<int>::max();
            const int ju = k_upper < atom.upper_coords.size() ? atom.upper_coords[k_upper]
                                                              : std::numeric_limits<int>::max();
            if (jl < ju) {
                const double l = atom.lower_thresholds[k_lower++];
                if (!a.plus[jl]) // 1(x >= l) already oriented at -inf
                    push(jl, {{true, l, +1}});
                else // 1(x >= l) = 1 - 1(x < l)
                    push(jl, {{false, 0.0, +1}, {true, l, -1}});
            } else if (ju < jl) {
                const double u = atom.upper_thresholds[k_upper++];
                if (a.plus[ju]) // 1(x < u) already oriented at +inf
                    push(ju, {{true, u, +1}});
                else // 1(x < u) = 1 - 1(x >= u)
                    push(ju, {{false, 0.0, +1}, {true, u, -1}});
            } else {
                const double l = atom.lower_thresholds[k_lower++];
                const double u = atom.upper_thresholds[k_upper++];
                if (!a.plus[jl]) // 1(l <= x < u) = 1(x >= l) - 1(x >= u)
                    push(jl, {{true, l, +1}, {true, u, -1}});
                else // 1(l <= x < u) = 1(x < u) - 1(x < l)
                    push(jl, {{true, u, +1}, {true, l, -1}});
            }
        }
        std::int64_t terms = 1;
        for (const auto& opts : options) terms *= static_cast<std::int64_t>(opts.size());
        if (terms > budget.expansion_terms)
            throw BudgetError("hk_variation: atom expansion exceeds the term budget");

        std::vector<std::size_t> pick(options.size(), 0);
        while (true) {
            int sign = 1;
            std::vector<int> sub;
            std::vector<double> thr;
            for (std::size_t k = 0; k < options.size(); ++k) {
                const Factor& f = options[k][pick[k]];
                sign *= f.sign;
                if (f.has_indicator) {
                    sub.push_back(coords[k]);
                    thr.push_back(f.threshold);
                }
            }
            if (!sub.empty()) masses[{std::move(sub), std::move(thr)}] += sign * coef;
            int k = static_cast<int>(pick.size()) - 1;
            while (k >= 0) {
                if (++pick[k] < options[k].size()) break;
                pick[k] = 0;
                --k;
            }
            if (k < 0) break;
        }
    }

    double total = 0.0;
    for (const auto& [key, mass] : masses) total += std::abs(mass);
    return total;
}

ComplexityReport complexity_report(const SparseEnsemble& ens, int s, bool with_v_tilde,
                                   const Budget& budget) {
    ComplexityReport report;
    report.s_used = s;
    report.v_xgb = vxgb_ensemble(ens, s, budget);
    double hk_inf = std::numeric_limits<double>::infinity();
    double hk_sup = 0.0;
    for (const Anchor& a : all_anchors(ens.dims())) {
        const double h = hk_variation(ens, a, budget);
        report.hk[a.to_string()] = h;
        hk_inf = std::min(hk_inf, h);
        hk_sup = std::max(hk_sup, h);
    }
    if (with_v_tilde) report.v_tilde = v_tilde(ens, s, budget);
    const double denom = std::min(std::pow(2.0, s) - 1.0, std::pow(2.0, ens.dims()));
    const double tol = 1e-9;
    report.bounds_ok = (hk_sup / denom <= report.v_xgb + tol) && (report.v_xgb <= hk_inf + tol);
    return report;
}

SparseEnsemble flip_axis(const SparseEnsemble& ens, int j, double t) {
    if (j < 0 || j >= ens.dims()) throw std::invalid_argument("flip_axis: coordinate out of range");
    SparseEnsemble out(ens.dims(), ens.constant());
    for (const auto& [atom, coef] : ens.atoms()) {
        BasisAtom flipped;
        double moved_to_upper = 0.0, moved_to_lower = 0.0;
        bool has_to_upper = false, has_to_lower = false;
        for (std::size_t k = 0; k < atom.lower_coords.size(); ++k) {
            if (atom.lower_coords[k] == j) {
                moved_to_upper = t - atom.lower_thresholds[k];
                has_to_upper = true;
            } else {
                flipped.lower_coords.push_back(atom.lower_coords[k]);
                flipped.lower_thresholds.push_back(atom.lower_thresholds[k]);
            }
        }
        for (std::size_t k = 0; k < atom.upper_coords.size(); ++k) {
            if (atom.upper_coords[k] == j) {
                moved_to_lower = t - atom.upper_thresholds[k];
                has_to_lower = true;
            } else {
                flipped.upper_coords.push_back(atom.upper_coords[k]);
                flipped.upper_thresholds.push_back(atom.upper_thresholds[k]);
            }
        }
        if (has_to_lower) {
            flipped.lower_coords.push_back(j);
            flipped.lower_thresholds.push_back(moved_to_lower);
        }
        if (has_to_upper) {
            flipped.upper_coords.push_back(j);
            flipped.upper_thresholds.push_back(moved_to_upper);
        }
        out.add_atom(std::move(flipped), coef);
    }
    return out;
}

double lp_replication_penalty(const std::vector<double>& leaf_weights, double p, int copies) {
    if (!(p > 1.0))
        throw std::invalid_argument("lp_replication_penalty: requires p > 1");
    if (copies < 1)
        throw std::invalid_argument("lp_replication_penalty: requires copies >= 1");
    double base = 0.0;
    for (double w : leaf_weights) base += std::pow(std::abs(w), p);
    return std::pow(static_cast<double>(copies), 1.0 - p) * base;
}

} // namespace xgbvar
