#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xgbvar/lp.hpp"
#include "xgbvar/types.hpp"

namespace xgbvar {

// A corner at infinity: one sign per coordinate, minus meaning -inf.
struct Anchor {
    std::vector<bool> plus; // plus[j] == true means +inf on coordinate j

    static Anchor all_minus(int dims) { return Anchor{std::vector<bool>(dims, false)}; }
    // Encoded as one character per coordinate, '-' or '+'.
    std::string to_string() const;
    static Anchor from_string(const std::string& text);
};

std::vector<Anchor> all_anchors(int dims);

struct ComplexityReport {
    double v_xgb = 0.0;
    std::map<std::string, double> hk; // anchor string -> HK variation
    std::optional<double> v_tilde;
    bool bounds_ok = false;
    int s_used = 0;
};

// Exact minimum L1 coefficient mass over midpoint-lattice representations
// matching z at the data points (the discrete complexity of a value vector).
double vxgb_points(const Dataset& data, int s, const VectorXd& z, const Budget& budget = {});
double vxgb_points(const Grid& grid, int s, const MatrixXd& points, const VectorXd& z,
                   const Budget& budget = {});

// Exact complexity of a piecewise-constant ensemble at depth bound s,
// computed by basis pursuit over the function's own threshold lattice with
// equality constraints on one representative point per refinement cell.
// Throws InfeasibleError when the function is not representable at depth s.
double vxgb_ensemble(const SparseEnsemble& ens, int s, const Budget& budget = {});

// Same LP with the atom dictionary restricted to disjoint L and U.
double v_tilde(const SparseEnsemble& ens, int s, const Budget& budget = {});

// Result of the anchored-decomposition LP: the minimum over additive
// decompositions f = sum_a f_a of the summed per-anchor HK costs, plus the
// extracted decomposition itself (pieces indexed by anchor string).
struct InfimalConvResult {
    double value = 0.0;
    std::map<std::string, SparseEnsemble> pieces;
};

double infimal_conv_hk(const SparseEnsemble& ens, int s, const Budget& budget = {});
InfimalConvResult infimal_conv_hk_decomposition(const SparseEnsemble& ens, int s,
                                                const Budget& budget = {});

// Total variation on the line of a 1-dimensional ensemble.
double total_variation_1d(const SparseEnsemble& ens);

// Limit at +inf minus limit at -inf of a 1-dimensional ensemble.
double limit_gap_1d(const SparseEnsemble& ens);

// Closed-form 1D complexity: TV for s = 1, (TV + |limit gap|)/2 for s >= 2.
double vxgb_1d(const SparseEnsemble& ens, int s);

// Exact Hardy-Krause variation of a piecewise-constant ensemble anchored at
// `a`: every atom is rewritten in the anchor's orientation, the signed point
// masses are aggregated per coordinate subset, and the total absolute mass
// is returned. Representation-independent.
double hk_variation(const SparseEnsemble& ens, const Anchor& a, const Budget& budget = {});

// v_xgb, all 2^d anchored HK values, optionally v_tilde, and the sandwich
// check sup_a HK / min(2^s - 1, 2^d) <= v_xgb <= inf_a HK.
ComplexityReport complexity_report(const SparseEnsemble& ens, int s,
                                   bool with_v_tilde = true, const Budget& budget = {});

// Reflects coordinate j about t: 1(x_j >= l) becomes 1(x_j < t - l) and
// 1(x_j < u) becomes 1(x_j >= t - u). Preserves the complexity.
SparseEnsemble flip_axis(const SparseEnsemble& ens, int j, double t);

// The replicated-ensemble L^p penalty: splitting every tree into `copies`
// equal parts scales the total p-th power leaf penalty by copies^(1-p).
// Requires p > 1 (the L1 penalty does not vanish under replication).
double lp_replication_penalty(const std::vector<double>& leaf_weights, double p, int copies);

} // namespace xgbvar
