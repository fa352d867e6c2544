#include "xgbvar/estimator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "xgbvar/ingest.hpp"

namespace xgbvar {

SparseEnsemble FitResult::to_ensemble(int dims) const {
    SparseEnsemble out(dims, constant);
    for (std::size_t k = 0; k < atoms.size(); ++k) out.add_atom(atoms[k], coefficients[k]);
    return out;
}

SparseEnsemble snap_to_midpoints(const SparseEnsemble& ens, const Grid& grid, int s) {
    if (grid.dims() != ens.dims())
        throw std::invalid_argument("snap_to_midpoints: grid/ensemble dimension mismatch");
    if (ens.max_order() > s)
        throw std::invalid_argument("snap_to_midpoints: an atom exceeds the depth bound");
    SparseEnsemble out(ens.dims(), ens.constant());
    for (const auto& [atom, coef] : ens.atoms()) {
        BasisAtom snapped;
        bool killed = false;
        for (std::size_t k = 0; k < atom.lower_coords.size() && !killed; ++k) {
            const int j = atom.lower_coords[k];
            const auto& v = grid.values(j);
            const auto idx = std::lower_bound(v.begin(), v.end(), atom.lower_thresholds[k]) -
                             v.begin();
            if (idx == 0) continue; // indicator is 1 at every data value: drop from L
            if (idx == static_cast<std::ptrdiff_t>(v.size())) {
                killed = true; // indicator is 0 at every data value
                continue;
            }
            snapped.lower_coords.push_back(j);
            snapped.lower_thresholds.push_back(grid.midpoints(j)[idx - 1]);
        }
        for (std::size_t k = 0; k < atom.upper_coords.size() && !killed; ++k) {
            const int j = atom.upper_coords[k];
            const auto& v = grid.values(j);
            const auto idx = std::lower_bound(v.begin(), v.end(), atom.upper_thresholds[k]) -
                             v.begin();
            if (idx == 0) {
                killed = true; // 1(x < u) is 0 at every data value
                continue;
            }
            if (idx == static_cast<std::ptrdiff_t>(v.size())) continue; // always 1: drop from U
            snapped.upper_coords.push_back(j);
            snapped.upper_thresholds.push_back(grid.midpoints(j)[idx - 1]);
        }
        if (killed) continue;
        if (snapped.lower_coords.empty() && snapped.upper_coords.empty())
            out.add_constant(coef);
        else
            out.add_atom(std::move(snapped), coef);
    }
    return out;
}

void project_l1_ball(Eigen::Ref<Eigen::VectorXd> v, double radius) {
    if (radius <= 0.0) {
        v.setZero();
        return;
    }
    if (v.cwiseAbs().sum() <= radius) return;
    std::vector<double> mags(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(v[i]);
    std::sort(mags.begin(), mags.end(), std::greater<double>());
    double cumulative = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < mags.size(); ++k) {
        cumulative += mags[k];
        const double candidate = (cumulative - radius) / static_cast<double>(k + 1);
        if (candidate >= mags[k]) break; // mags[k] would be thresholded to zero
        theta = candidate;
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double m = std::abs(v[i]) - theta;
        v[i] = m > 0.0 ? (v[i] > 0.0 ? m : -m) : 0.0;
    }
}

namespace {

double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

// Restricted problem over the active columns plus a free intercept, carried
// in Gram form so inner iterations cost O(k^2) regardless of n.
struct ActiveProblem {
    const VectorXd& y;
    double yy;
    double ysum;
    MatrixXd Xa;  // n x k
    MatrixXd G;   // (k+1) x (k+1), variable order (c, beta)
    VectorXd h;   // [1'y; Xa'y]

    explicit ActiveProblem(const VectorXd& y_in) : y(y_in) {
        yy = y.squaredNorm();
        ysum = y.sum();
        Xa.resize(y.size(), 0);
        G.resize(1, 1);
        G(0, 0) = static_cast<double>(y.size());
        h.resize(1);
        h[0] = ysum;
    }

    int k() const { return static_cast<int>(Xa.cols()); }

    void add_column(const VectorXd& col) {
        const int old_k = k();
        Xa.conservativeResize(Eigen::NoChange, old_k + 1);
        Xa.col(old_k) = col;
        G.conservativeResize(old_k + 2, old_k + 2);
        h.conservativeResize(old_k + 2);
        G(0, old_k + 1) = col.sum();
        G(old_k + 1, 0) = G(0, old_k + 1);
        for (int j = 0; j < old_k; ++j) {
            G(j + 1, old_k + 1) = Xa.col(j).dot(col);
            G(old_k + 1, j + 1) = G(j + 1, old_k + 1);
        }
        G(old_k + 1, old_k + 1) = col.squaredNorm();
        h[old_k + 1] = col.dot(y);
    }

    void remove_columns(const std::vector<int>& drop_sorted) {
        if (drop_sorted.empty()) return;
        const int new_k = k() - static_cast<int>(drop_sorted.size());
        MatrixXd Xa2(Xa.rows(), new_k);
        std::vector<int> keep;
        std::size_t di = 0;
        for (int j = 0; j < k(); ++j) {
            if (di < drop_sorted.size() && drop_sorted[di] == j) {
                ++di;
                continue;
            }
            keep.push_back(j);
        }
        for (int j = 0; j < new_k; ++j) Xa2.col(j) = Xa.col(keep[j]);
        MatrixXd G2(new_k + 1, new_k + 1);
        VectorXd h2(new_k + 1);
        std::vector<int> keep_v{0};
        for (int j : keep) keep_v.push_back(j + 1);
        for (int a = 0; a < new_k + 1; ++a) {
            h2[a] = h[keep_v[a]];
            for (int b = 0; b < new_k + 1; ++b) G2(a, b) = G(keep_v[a], keep_v[b]);
        }
        Xa = std::move(Xa2);
        G = std::move(G2);
        h = std::move(h2);
    }

    // RSS at (c, beta) packed as v.
    double rss(const VectorXd& v) const { return yy - 2.0 * v.dot(h) + v.dot(G * v); }

    VectorXd residual(const VectorXd& v) const {
        VectorXd r = y;
        r.array() -= v[0];
        if (k() > 0) r.noalias() -= Xa * v.tail(k());
        return r;
    }

    double lipschitz() const {
        // Power iteration on G; 2*lambda_max bounds the RSS gradient map.
        VectorXd u = VectorXd::Ones(G.rows());
        u.normalize();
        double lam = 1.0;
        for (int it = 0; it < 80; ++it) {
            VectorXd w = G * u;
            const double norm = w.norm();
            if (norm <= 0.0) break;
            lam = norm;
            u = w / norm;
        }
        return 2.0 * lam * 1.02 + 1e-12; // small safety factor
    }
};

struct InnerResult {
    VectorXd v; // (c, beta)
    int iterations = 0;
};

// Accelerated proximal gradient on (c, beta) with projection of beta onto
// the L1 ball, monotone restart, stop on relative objective change.
InnerResult apg_constrained(const ActiveProblem& prob, VectorXd v0, double v_budget,
                            const SolverOptions& opt) {
    const int k = prob.k();
    VectorXd v = std::move(v0);
    project_l1_ball(v.tail(k), v_budget);
    VectorXd w = v;
    const double step = 1.0 / prob.lipschitz();
    double t = 1.0;
    double obj_prev = prob.rss(v);
    InnerResult out;
    for (int it = 0; it < opt.max_inner_iterations; ++it) {
        ++out.iterations;
        VectorXd grad = 2.0 * (prob.G * w - prob.h);
        VectorXd vn = w - step * grad;
        project_l1_ball(vn.tail(k), v_budget);
        double obj = prob.rss(vn);
        if (obj > obj_prev) {
            // restart momentum from the last accepted point
            w = v;
            t = 1.0;
            VectorXd grad2 = 2.0 * (prob.G * w - prob.h);
            vn = w - step * grad2;
            project_l1_ball(vn.tail(k), v_budget);
            obj = prob.rss(vn);
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        w = vn + ((t - 1.0) / tn) * (vn - v);
        v = vn;
        t = tn;
        if (std::abs(obj_prev - obj) < opt.tol_rel_obj * std::max(1.0, std::abs(obj))) {
            obj_prev = obj;
            break;
        }
        obj_prev = obj;
    }
    out.v = std::move(v);
    return out;
}

// Proximal gradient with soft-thresholding on beta and an exact intercept
// update each iteration.
InnerResult apg_penalized(const ActiveProblem& prob, VectorXd v0, double alpha,
                          const SolverOptions& opt) {
    const int k = prob.k();
    const double n = prob.G(0, 0);
    VectorXd v = std::move(v0);
    auto update_c = [&](VectorXd& vv) {
        double s = prob.h[0];
        for (int j = 0; j < k; ++j) s -= prob.G(0, j + 1) * vv[j + 1];
        vv[0] = s / n;
    };
    update_c(v);
    VectorXd w = v;
    const double step = 1.0 / prob.lipschitz();
    double t = 1.0;
    auto objective = [&](const VectorXd& vv) {
        return prob.rss(vv) + alpha * vv.tail(k).cwiseAbs().sum();
    };
    double obj_prev = objective(v);
    InnerResult out;
    for (int it = 0; it < opt.max_inner_iterations; ++it) {
        ++out.iterations;
        update_c(w);
        VectorXd grad = 2.0 * (prob.G * w - prob.h);
        VectorXd vn = w;
        for (int j = 0; j < k; ++j)
            vn[j + 1] = soft_threshold(w[j + 1] - step * grad[j + 1], step * alpha);
        update_c(vn);
        double obj = objective(vn);
        if (obj > obj_prev) {
            w = v;
            t = 1.0;
            update_c(w);
            VectorXd grad2 = 2.0 * (prob.G * w - prob.h);
            vn = w;
            for (int j = 0; j < k; ++j)
                vn[j + 1] = soft_threshold(w[j + 1] - step * grad2[j + 1], step * alpha);
            update_c(vn);
            obj = objective(vn);
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        w = vn + ((t - 1.0) / tn) * (vn - v);
        v = vn;
        t = tn;
        if (std::abs(obj_prev - obj) < opt.tol_rel_obj * std::max(1.0, std::abs(obj))) {
            obj_prev = obj;
            break;
        }
        obj_prev = obj;
    }
    out.v = std::move(v);
    return out;
}

// Face subproblem in (c, beta_support) coordinates. Singular but
// consistent stationarity systems are accepted; inconsistent ones expose a
// kernel descent direction along which the walk below reaches a sign flip.
struct FaceSystem {
    MatrixXd A;
    VectorXd rhs;
};

// Primal active-set refinement on the restricted problem, warm-started from
// the proximal-gradient iterate: repeatedly solve the stationarity system on
// the current support/sign face, prune sign flips (walking along kernel
// descent directions when the face system is inconsistent), and let the
// worst gradient violator enter until the restricted KKT conditions hold to
// machine precision.
void exact_face_optimize(const ActiveProblem& prob, VectorXd& v, bool constrained,
                         double v_budget, double alpha, double scale) {
    const int k = prob.k();
    if (k == 0 || (constrained && v_budget == 0.0)) {
        v.setZero();
        v[0] = prob.h[0] / prob.G(0, 0);
        return;
    }
    auto objective = [&](const VectorXd& vv) {
        return prob.rss(vv) + alpha * vv.tail(k).cwiseAbs().sum();
    };

    std::vector<int> support;
    std::vector<double> signs;
    for (int j = 0; j < k; ++j)
        if (v[j + 1] != 0.0) {
            support.push_back(j);
            signs.push_back(v[j + 1] > 0.0 ? 1.0 : -1.0);
        }

    const double enter_tol = 1e-11 * scale;
    const int max_rounds = 100 + 4 * k;
    VectorXd best = v;
    double best_obj = objective(v);

    for (int round = 0; round < max_rounds; ++round) {
        // ---- Face solve with sign-flip pruning --------------------------
        VectorXd candidate;
        double mu = 0.0;
        bool solved = false;
        int prune_guard = static_cast<int>(support.size()) + 2;
        while (prune_guard-- > 0) {
            const int m = static_cast<int>(support.size());
            MatrixXd G(m + 1, m + 1);
            VectorXd h(m + 1);
            std::vector<int> map{0};
            for (int j : support) map.push_back(j + 1);
            for (int a = 0; a <= m; ++a) {
                h[a] = prob.h[map[a]];
                for (int b = 0; b <= m; ++b) G(a, b) = prob.G(map[a], map[b]);
            }

            // Current face coordinates of v (for kernel walks).
            VectorXd face_v(m + 1);
            face_v[0] = v[0];
            for (int a = 0; a < m; ++a) face_v[a + 1] = v[support[a] + 1];

            bool sign_constrained = true;
            bool tight_case = false;
            FaceSystem sys;
            if (!constrained) {
                sys.A = 2.0 * G;
                sys.rhs = 2.0 * h;
                for (int a = 0; a < m; ++a) sys.rhs[a + 1] -= alpha * signs[a];
                mu = alpha;
            } else {
                // Slack first: if the unconstrained face optimum fits the
                // budget it is the face solution with mu = 0 (and no sign
                // pattern to respect).
                Eigen::FullPivLU<MatrixXd> lu_slack(2.0 * G);
                VectorXd slack = lu_slack.solve(2.0 * h);
                const bool slack_ok =
                    ((2.0 * G) * slack - 2.0 * h).cwiseAbs().maxCoeff() <=
                    1e-8 * (1.0 + h.cwiseAbs().maxCoeff());
                if (slack_ok && slack.tail(m).cwiseAbs().sum() <= v_budget * (1.0 + 1e-12)) {
                    mu = 0.0;
                    sign_constrained = false;
                    candidate = VectorXd::Zero(k + 1);
                    candidate[0] = slack[0];
                    for (int a = 0; a < m; ++a) candidate[support[a] + 1] = slack[a + 1];
                    for (int a = 0; a < m; ++a)
                        if (slack[a + 1] != 0.0) signs[a] = slack[a + 1] > 0.0 ? 1.0 : -1.0;
                    solved = true;
                    break;
                }
                tight_case = true;
                sys.A = MatrixXd::Zero(m + 2, m + 2);
                sys.A.topLeftCorner(m + 1, m + 1) = 2.0 * G;
                for (int a = 0; a < m; ++a) {
                    sys.A(a + 1, m + 1) = signs[a];
                    sys.A(m + 1, a + 1) = signs[a];
                }
                sys.rhs.resize(m + 2);
                sys.rhs.head(m + 1) = 2.0 * h;
                sys.rhs[m + 1] = v_budget;
            }

            Eigen::FullPivLU<MatrixXd> lu(sys.A);
            VectorXd sol = lu.solve(sys.rhs);
            const bool consistent = (sys.A * sol - sys.rhs).cwiseAbs().maxCoeff() <=
                                    1e-8 * (1.0 + sys.rhs.cwiseAbs().maxCoeff());
            if (!consistent) {
                // Inconsistent stationarity: the objective descends linearly
                // along a kernel direction; walk to the first sign flip and
                // prune that coordinate.
                const MatrixXd kernel = lu.kernel();
                int used = -1;
                VectorXd w;
                for (int col = 0; col < kernel.cols(); ++col) {
                    w = kernel.col(col);
                    const double rate = sys.rhs.dot(w);
                    if (std::abs(rate) <= 1e-12 * (1.0 + sys.rhs.cwiseAbs().maxCoeff()))
                        continue;
                    if (rate < 0.0) w = -w; // make it a descent direction
                    used = col;
                    break;
                }
                if (used < 0) break; // numerically ambiguous; keep best
                // Walk from face_v: find the first support coordinate whose
                // sign flips (w beyond the face coordinates, i.e. the
                // multiplier slot in the tight case, does not constrain).
                double t_star = std::numeric_limits<double>::infinity();
                int flip = -1;
                for (int a = 0; a < m; ++a) {
                    const double wa = w[a + 1];
                    if (wa * signs[a] < -1e-14) {
                        const double t = -face_v[a + 1] / wa;
                        if (t >= 0.0 && t < t_star) {
                            t_star = t;
                            flip = a;
                        }
                    }
                }
                if (flip < 0) break; // should not happen for bounded problems
                for (int a = 0; a < m; ++a) v[support[a] + 1] = face_v[a + 1] + t_star * w[a + 1];
                v[0] = face_v[0] + t_star * w[0];
                v[support[flip] + 1] = 0.0;
                support.erase(support.begin() + flip);
                signs.erase(signs.begin() + flip);
                continue;
            }
            if (tight_case) mu = sol[m + 1];

            // Prune the worst sign violation, if any (a negative budget
            // multiplier counts: drop the weakest column and retry).
            int worst = -1;
            double worst_value = -1e-14 * scale;
            if (sign_constrained) {
                for (int a = 0; a < m; ++a) {
                    const double signed_value = sol[a + 1] * signs[a];
                    if (signed_value < worst_value) {
                        worst_value = signed_value;
                        worst = a;
                    }
                }
            }
            if (worst < 0 && tight_case && mu < -1e-12 * scale && m > 0) {
                worst = 0;
                for (int a = 1; a < m; ++a)
                    if (std::abs(sol[a + 1]) < std::abs(sol[worst + 1])) worst = a;
            }
            if (worst < 0) {
                candidate = VectorXd::Zero(k + 1);
                candidate[0] = sol[0];
                for (int a = 0; a < static_cast<int>(support.size()); ++a)
                    candidate[support[a] + 1] = sol[a + 1];
                solved = true;
                break;
            }
            v[support[worst] + 1] = 0.0;
            support.erase(support.begin() + worst);
            signs.erase(signs.begin() + worst);
        }
        if (!solved) break;

        const double obj = objective(candidate);
        if (obj <= best_obj + 1e-12 * (1.0 + std::abs(best_obj))) {
            best = candidate;
            best_obj = std::min(best_obj, obj);
        } else {
            break; // no progress; keep the best point found
        }
        v = candidate;

        // ---- Entering step ---------------------------------------------
        const VectorXd g = 2.0 * (prob.h - prob.G * candidate);
        std::vector<char> in_support(k, 0);
        for (int j : support) in_support[j] = 1;
        int enter = -1;
        double enter_violation = enter_tol;
        for (int j = 0; j < k; ++j) {
            if (in_support[j]) continue;
            const double violation = std::abs(g[j + 1]) - mu;
            if (violation > enter_violation) {
                enter_violation = violation;
                enter = j;
            }
        }
        if (enter < 0) break;
        support.push_back(enter);
        signs.push_back(g[enter + 1] > 0.0 ? 1.0 : -1.0);
    }
    v = best;
}

struct ActiveSetState {
    std::vector<std::int64_t> columns;        // insertion order, mirrors Xa
    std::vector<std::int64_t> sorted_columns; // for exclusion lookups
};

FitResult solve_lattice_ls(const Dataset& data, int s, bool constrained, double v_budget,
                           double alpha, const SolverOptions& opt) {
    if (s < 1) throw std::invalid_argument("lattice least squares: depth bound must be >= 1");
    if (constrained && v_budget < 0.0)
        throw std::invalid_argument("constrained_lse: budget must be >= 0");
    if (!constrained && alpha < 0.0)
        throw std::invalid_argument("penalized_lse: alpha must be >= 0");

    const Grid grid = grid_from_dataset(data);
    const MidpointDesign design(grid, s, data.points, opt.table_budget);
    const VectorXd& y = data.responses;
    const int n = data.n();

    FitResult fit;
    fit.mode = constrained ? "constrained" : "penalized";
    fit.v_budget = v_budget;
    fit.alpha = alpha;

    ActiveProblem prob(y);
    ActiveSetState state;
    VectorXd v(1);
    v[0] = y.mean();

    const double scale = 1.0 + y.cwiseAbs().maxCoeff();
    int outer = 0;
    bool optimal = false;
    const bool trivial = constrained && v_budget == 0.0;
    while (!trivial && outer < opt.max_outer_iterations) {
        ++outer;
        const VectorXd r = prob.residual(v);
        // Reference multiplier for the expansion test.
        double threshold;
        if (constrained) {
            const double l1 = v.tail(prob.k()).cwiseAbs().sum();
            const bool tight = l1 >= v_budget * (1.0 - 1e-9);
            double mu = 0.0;
            if (tight && prob.k() > 0) {
                const VectorXd g_active = 2.0 * (prob.Xa.transpose() * r);
                for (int j = 0; j < prob.k(); ++j)
                    if (v[j + 1] != 0.0)
                        mu = std::max(mu, g_active[j] * (v[j + 1] > 0.0 ? 1.0 : -1.0));
            }
            threshold = mu;
        } else {
            threshold = alpha;
        }
        auto violators = design.top_columns(r, 8, state.sorted_columns);
        std::vector<std::int64_t> to_add;
        for (const auto& viol : violators) {
            const double g = 2.0 * viol.gradient;
            if (std::abs(g) > threshold + opt.kkt_tol * scale) to_add.push_back(viol.col);
        }
        if (to_add.empty()) {
            optimal = true;
            break;
        }
        for (std::int64_t col : to_add) {
            prob.add_column(design.column_values(col));
            state.columns.push_back(col);
        }
        state.sorted_columns = state.columns;
        std::sort(state.sorted_columns.begin(), state.sorted_columns.end());

        VectorXd v0 = VectorXd::Zero(prob.k() + 1);
        v0[0] = v[0];
        for (int j = 0; j < static_cast<int>(v.size()) - 1; ++j) v0[j + 1] = v[j + 1];
        InnerResult inner = constrained ? apg_constrained(prob, std::move(v0), v_budget, opt)
                                        : apg_penalized(prob, std::move(v0), alpha, opt);
        fit.iterations += inner.iterations;
        v = std::move(inner.v);
        exact_face_optimize(prob, v, constrained, v_budget, alpha, scale);

        // Drop zero coefficients whose gradient is strictly within the KKT
        // threshold; violating zeros stay active so they cannot be re-added
        // in a loop.
        if (outer % 8 == 0 && prob.k() > 8) {
            const VectorXd r_now = prob.residual(v);
            const VectorXd g_active = 2.0 * (prob.Xa.transpose() * r_now);
            double mu_now = alpha;
            if (constrained) {
                mu_now = 0.0;
                for (int j = 0; j < prob.k(); ++j)
                    if (v[j + 1] != 0.0)
                        mu_now = std::max(mu_now, g_active[j] * (v[j + 1] > 0.0 ? 1.0 : -1.0));
            }
            std::vector<int> drop;
            for (int j = 0; j < prob.k(); ++j)
                if (v[j + 1] == 0.0 && std::abs(g_active[j]) < mu_now + 0.5 * opt.kkt_tol * scale)
                    drop.push_back(j);
            if (drop.size() > state.columns.size() / 4) {
                prob.remove_columns(drop);
                VectorXd v2(prob.k() + 1);
                v2[0] = v[0];
                std::vector<std::int64_t> cols2;
                int w = 0;
                std::size_t di = 0;
                for (std::size_t j = 0; j < state.columns.size(); ++j) {
                    if (di < drop.size() && drop[di] == static_cast<int>(j)) {
                        ++di;
                        continue;
                    }
                    cols2.push_back(state.columns[j]);
                    v2[++w] = v[j + 1];
                }
                state.columns = std::move(cols2);
                state.sorted_columns = state.columns;
                std::sort(state.sorted_columns.begin(), state.sorted_columns.end());
                v = std::move(v2);
            }
        }
    }
    fit.converged = trivial || optimal;

    // Final report, with the KKT residual measured on the full column set.
    const VectorXd r = prob.residual(v);
    fit.constant = v[0];
    for (int j = 0; j < prob.k(); ++j) {
        if (v[j + 1] == 0.0) continue;
        fit.columns.push_back(state.columns[j]);
        fit.atoms.push_back(design.column_atom(state.columns[j]));
        fit.coefficients.push_back(v[j + 1]);
    }
    fit.active_l1 = v.tail(prob.k()).cwiseAbs().sum();
    fit.rss = r.squaredNorm();
    fit.objective = constrained ? fit.rss : fit.rss + alpha * fit.active_l1;

    const double intercept_res = std::abs(r.sum()) / static_cast<double>(n);
    const double g_max = 2.0 * design.max_abs_gradient(r);
    double kkt = intercept_res;
    if (constrained) {
        if (v_budget > 0.0 || fit.active_l1 > 0.0) {
            const bool tight = fit.active_l1 >= v_budget * (1.0 - 1e-9);
            const double mu = tight ? g_max : 0.0;
            if (!tight) kkt = std::max(kkt, g_max);
            if (prob.k() > 0) {
                const VectorXd g_active = 2.0 * (prob.Xa.transpose() * r);
                for (int j = 0; j < prob.k(); ++j) {
                    if (v[j + 1] == 0.0) continue;
                    const double sgn = v[j + 1] > 0.0 ? 1.0 : -1.0;
                    kkt = std::max(kkt, std::abs(g_active[j] - mu * sgn));
                }
            }
            kkt = std::max(kkt, mu * std::max(0.0, v_budget - fit.active_l1) / (1.0 + v_budget));
            kkt = std::max(kkt, std::max(0.0, fit.active_l1 - v_budget));
        }
    } else {
        kkt = std::max(kkt, std::max(0.0, g_max - alpha));
        if (prob.k() > 0) {
            const VectorXd g_active = 2.0 * (prob.Xa.transpose() * r);
            for (int j = 0; j < prob.k(); ++j) {
                if (v[j + 1] == 0.0) continue;
                const double sgn = v[j + 1] > 0.0 ? 1.0 : -1.0;
                kkt = std::max(kkt, std::abs(g_active[j] - alpha * sgn));
            }
        }
    }
    fit.kkt_residual = kkt;
    return fit;
}

} // namespace

FitResult constrained_lse(const Dataset& data, int s, double v_budget,
                          const SolverOptions& options) {
    return solve_lattice_ls(data, s, /*constrained=*/true, v_budget, 0.0, options);
}

FitResult penalized_lse(const Dataset& data, int s, double alpha, const SolverOptions& options) {
    return solve_lattice_ls(data, s, /*constrained=*/false, 0.0, alpha, options);
}

double dual_alpha_from_fit(const Dataset& data, int s, const FitResult& fit,
                           const SolverOptions& options) {
    if (fit.mode != "constrained")
        throw std::invalid_argument("dual_alpha: expected a constrained fit");
    const bool tight = fit.active_l1 >= fit.v_budget * (1.0 - 1e-9);
    if (!tight) return 0.0;
    const Grid grid = grid_from_dataset(data);
    const SparseEnsemble ens = fit.to_ensemble(data.d());
    VectorXd r(data.n());
    for (int i = 0; i < data.n(); ++i) r[i] = data.responses[i] - ens(data.points.row(i));
    const MidpointDesign design(grid, s, data.points, options.table_budget);
    return 2.0 * design.max_abs_gradient(r);
}

double dual_alpha(const Dataset& data, int s, double v_budget, const SolverOptions& options) {
    const FitResult fit = constrained_lse(data, s, v_budget, options);
    return dual_alpha_from_fit(data, s, fit, options);
}

namespace {

struct BoostNode {
    std::vector<std::vector<int>> sorted_indices; // per coordinate, sorted by value
    int depth = 0;
};

struct SplitChoice {
    bool found = false;
    double gain = 0.0;
    int coord = -1;
    double threshold = 0.0;
    int value_index = -1; // last left-side global value index
};

double leaf_score(double g, double h, double alpha, double lambda) {
    const double num = soft_threshold(g, alpha);
    return num * num / (h + lambda);
}

} // namespace

std::vector<RegressionTree> greedy_boost(const Dataset& data, const BoostConfig& config) {
    if (config.max_depth < 1) throw std::invalid_argument("greedy_boost: max_depth must be >= 1");
    if (config.rounds < 0) throw std::invalid_argument("greedy_boost: rounds must be >= 0");
    if (!(config.learning_rate > 0.0) || config.learning_rate > 1.0)
        throw std::invalid_argument("greedy_boost: learning_rate must be in (0, 1]");

    const int n = data.n();
    const int d = data.d();
    const Grid grid = grid_from_dataset(data);
    const VectorXd& y = data.responses;

    VectorXd prediction = VectorXd::Constant(n, y.mean());
    std::vector<RegressionTree> trees;
    trees.push_back(RegressionTree::leaf(y.mean()));

    // Per-coordinate index of each point's value in the grid.
    std::vector<std::vector<int>> value_index(d, std::vector<int>(n));
    for (int j = 0; j < d; ++j) {
        const auto& vals = grid.values(j);
        for (int i = 0; i < n; ++i)
            value_index[j][i] = static_cast<int>(
                std::lower_bound(vals.begin(), vals.end(), data.points(i, j)) - vals.begin());
    }

    for (int round = 0; round < config.rounds; ++round) {
        VectorXd g = 2.0 * (prediction - y);
        const double h_each = 2.0;

        BoostNode root;
        root.sorted_indices.resize(d);
        for (int j = 0; j < d; ++j) {
            auto& order = root.sorted_indices[j];
            order.resize(n);
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                return value_index[j][a] < value_index[j][b];
            });
        }

        // Recursive exact-greedy builder.
        auto build = [&](auto&& self, const BoostNode& node) -> RegressionTree {
            double g_sum = 0.0;
            const auto& any_order = node.sorted_indices[0];
            for (int i : any_order) g_sum += g[i];
            const double h_sum = h_each * static_cast<double>(any_order.size());

            SplitChoice best;
            best.gain = -std::numeric_limits<double>::infinity();
            if (node.depth < config.max_depth) {
                const double parent_score = leaf_score(g_sum, h_sum, config.alpha, config.lambda);
                for (int j = 0; j < d; ++j) {
                    const auto& order = node.sorted_indices[j];
                    double gl = 0.0;
                    double hl = 0.0;
                    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
                        gl += g[order[k]];
                        hl += h_each;
                        const int vi = value_index[j][order[k]];
                        if (vi == value_index[j][order[k + 1]]) continue; // not a boundary
                        const double gain =
                            0.5 * (leaf_score(gl, hl, config.alpha, config.lambda) +
                                   leaf_score(g_sum - gl, h_sum - hl, config.alpha, config.lambda) -
                                   parent_score);
                        // Strict improvement keeps the first maximum: lowest
                        // coordinate, then lowest threshold.
                        if (gain > best.gain) {
                            best.found = true;
                            best.gain = gain;
                            best.coord = j;
                            best.value_index = vi;
                            best.threshold = grid.midpoints(j)[vi];
                        }
                    }
                }
            }
            if (!best.found || best.gain <= config.min_gain) {
                const double w =
                    -soft_threshold(g_sum, config.alpha) / (h_sum + config.lambda);
                return RegressionTree::leaf(config.learning_rate * w);
            }
            BoostNode left, right;
            left.depth = right.depth = node.depth + 1;
            left.sorted_indices.resize(d);
            right.sorted_indices.resize(d);
            for (int j = 0; j < d; ++j) {
                for (int i : node.sorted_indices[j]) {
                    if (value_index[best.coord][i] <= best.value_index)
                        left.sorted_indices[j].push_back(i);
                    else
                        right.sorted_indices[j].push_back(i);
                }
            }
            RegressionTree lt = self(self, left);
            RegressionTree rt = self(self, right);
            return RegressionTree::split(best.coord, best.threshold, lt, rt);
        };
        RegressionTree tree = build(build, root);
        for (int i = 0; i < n; ++i) prediction[i] += tree(data.points.row(i));
        trees.push_back(std::move(tree));
    }
    return trees;
}

double objective_value(const Dataset& data, const SparseEnsemble& ens, double alpha) {
    double rss = 0.0;
    for (int i = 0; i < data.n(); ++i) {
        const double r = data.responses[i] - ens(data.points.row(i));
        rss += r * r;
    }
    return rss + alpha * ens.weight();
}

} // namespace xgbvar
