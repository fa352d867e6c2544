#include "xgbvar/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>

#include "xgbvar/ingest.hpp"
#include "xgbvar/rng.hpp"

namespace xgbvar {

namespace {

// Substream ids: one independent Philox stream per (n, replicate, purpose).
constexpr std::uint64_t kStreamData = 1;
constexpr std::uint64_t kStreamQuadrature = 2;
constexpr std::uint64_t kStreamEta = 3;

std::uint64_t stream_id(std::uint64_t purpose, std::uint64_t n, std::uint64_t replicate) {
    return (purpose << 48) ^ (n << 24) ^ replicate;
}

} // namespace

void TargetFunction::materialize(const std::vector<double>& box) {
    if (auto* packing = std::get_if<PackingTarget>(&spec)) {
        family_ = std::make_shared<PackingFamily>(packing->s_bar, packing->l, packing->v_budget,
                                                  box, packing->sigma);
        eta_.resize(family_->q_size());
        Philox rng(packing->eta_seed, stream_id(kStreamEta, 0, 0));
        for (auto& e : eta_) e = rng.next_u32() & 1u ? 1 : -1;
    }
}

double TargetFunction::operator()(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    if (const auto* ens = std::get_if<SparseEnsemble>(&spec)) return (*ens)(x);
    if (!family_) throw std::logic_error("TargetFunction: packing target not materialized");
    return family_->f_eta(eta_, x);
}

void ExperimentConfig::validate() const {
    if (d < 1) throw std::invalid_argument("ExperimentConfig: d must be >= 1");
    if (s < 1) throw std::invalid_argument("ExperimentConfig: s must be >= 1");
    if (static_cast<int>(box.size()) != d)
        throw std::invalid_argument("ExperimentConfig: box must have one width per coordinate");
    for (double m : box)
        if (!(m > 0.0)) throw std::invalid_argument("ExperimentConfig: box widths must be positive");
    if (sigma < 0.0) throw std::invalid_argument("ExperimentConfig: sigma must be >= 0");
    if (replicates < 1) throw std::invalid_argument("ExperimentConfig: replicates must be >= 1");
    if (n_list.empty()) throw std::invalid_argument("ExperimentConfig: n_list is empty");
    for (std::size_t k = 0; k + 1 < n_list.size(); ++k)
        if (!(n_list[k] < n_list[k + 1]))
            throw std::invalid_argument("ExperimentConfig: n_list must be strictly increasing");
    for (int n : n_list)
        if (n < 1) throw std::invalid_argument("ExperimentConfig: sample sizes must be >= 1");
}

Dataset gen_data(const ExperimentConfig& config, int n, int replicate) {
    Philox rng(config.seed, stream_id(kStreamData, static_cast<std::uint64_t>(n),
                                      static_cast<std::uint64_t>(replicate)));
    MatrixXd points(n, config.d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < config.d; ++j)
            points(i, j) = rng.uniform(-config.box[j] / 2.0, config.box[j] / 2.0);
    VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        y[i] = config.target(points.row(i));
        if (config.sigma > 0.0) y[i] += config.sigma * rng.normal();
    }
    return Dataset(std::move(points), std::move(y));
}

namespace {

// Exact integral of (f - g)^2 over the box under the uniform density, for
// piecewise-constant f and g: integrate cellwise on the merged threshold
// grid clipped to the box.
double exact_risk(const SparseEnsemble& fitted, const SparseEnsemble& target,
                  const std::vector<double>& box) {
    const int d = fitted.dims();
    std::vector<std::vector<double>> edges(d);
    for (int j = 0; j < d; ++j) {
        const double lo = -box[j] / 2.0, hi = box[j] / 2.0;
        std::set<double> cuts{lo, hi};
        for (double t : fitted.thresholds(j))
            if (t > lo && t < hi) cuts.insert(t);
        for (double t : target.thresholds(j))
            if (t > lo && t < hi) cuts.insert(t);
        edges[j].assign(cuts.begin(), cuts.end());
    }
    std::int64_t cells = 1;
    for (int j = 0; j < d; ++j) cells *= static_cast<std::int64_t>(edges[j].size()) - 1;
    double volume_box = 1.0;
    for (int j = 0; j < d; ++j) volume_box *= box[j];

    std::vector<int> idx(d, 0);
    Eigen::RowVectorXd mid(d);
    double total = 0.0;
    for (std::int64_t c = 0; c < cells; ++c) {
        double vol = 1.0;
        for (int j = 0; j < d; ++j) {
            const double lo = edges[j][idx[j]], hi = edges[j][idx[j] + 1];
            vol *= hi - lo;
            mid[j] = 0.5 * (lo + hi);
        }
        const double diff = fitted(mid) - target(mid);
        total += vol * diff * diff;
        for (int j = d - 1; j >= 0; --j) {
            if (++idx[j] < static_cast<int>(edges[j].size()) - 1) break;
            idx[j] = 0;
        }
    }
    return total / volume_box;
}

} // namespace

double estimate_risk(const ExperimentConfig& config, const SparseEnsemble& fitted,
                     int quadrature_points) {
    if (config.target.piecewise_constant())
        return exact_risk(fitted, config.target.ensemble(), config.box);
    const int points = quadrature_points > 0 ? quadrature_points : config.quadrature_points;
    Philox rng(config.seed, stream_id(kStreamQuadrature, 0, 0));
    Eigen::RowVectorXd x(config.d);
    double total = 0.0;
    for (int t = 0; t < points; ++t) {
        for (int j = 0; j < config.d; ++j)
            x[j] = rng.uniform(-config.box[j] / 2.0, config.box[j] / 2.0);
        const double diff = fitted(x) - config.target(x);
        total += diff * diff;
    }
    return total / points;
}

RiskTable run_rate_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentConfig cfg = config; // materialize the target once
    cfg.target.materialize(cfg.box);

    struct Job {
        int n_index;
        int replicate;
    };
    std::vector<Job> jobs;
    for (std::size_t ni = 0; ni < cfg.n_list.size(); ++ni)
        for (int rep = 0; rep < cfg.replicates; ++rep)
            jobs.push_back({static_cast<int>(ni), rep});

    std::vector<double> risks(jobs.size(), 0.0);
    std::vector<char> failed(jobs.size(), 0);

    auto run_job = [&](std::size_t ji) {
        const Job& job = jobs[ji];
        const int n = cfg.n_list[static_cast<std::size_t>(job.n_index)];
        try {
            const Dataset data = gen_data(cfg, n, job.replicate);
            SparseEnsemble fitted(cfg.d, 0.0);
            switch (cfg.estimator) {
                case EstimatorKind::constrained: {
                    FitResult fit = constrained_lse(data, cfg.s, cfg.v_budget);
                    if (!fit.converged) throw std::runtime_error("constrained fit not converged");
                    fitted = fit.to_ensemble(cfg.d);
                    break;
                }
                case EstimatorKind::penalized: {
                    FitResult fit = penalized_lse(data, cfg.s, cfg.alpha);
                    if (!fit.converged) throw std::runtime_error("penalized fit not converged");
                    fitted = fit.to_ensemble(cfg.d);
                    break;
                }
                case EstimatorKind::greedy: {
                    BoostConfig boost = cfg.boost;
                    boost.max_depth = cfg.s;
                    const auto trees = greedy_boost(data, boost);
                    for (const auto& tree : trees)
                        fitted = fitted.axpy(1.0, tree_to_ensemble(tree, cfg.d));
                    break;
                }
            }
            risks[ji] = estimate_risk(cfg, fitted);
        } catch (const std::exception&) {
            failed[ji] = 1;
        }
    };

    int threads = cfg.threads > 0 ? cfg.threads
                                  : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
    if (threads == 1) {
        for (std::size_t ji = 0; ji < jobs.size(); ++ji) run_job(ji);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&]() {
                while (true) {
                    const std::size_t ji = next.fetch_add(1);
                    if (ji >= jobs.size()) break;
                    run_job(ji);
                }
            });
        for (auto& th : pool) th.join();
    }

    // Deterministic (n, replicate)-ordered reduction.
    RiskTable table;
    for (std::size_t ni = 0; ni < cfg.n_list.size(); ++ni) {
        RiskRow row;
        row.n = cfg.n_list[ni];
        std::vector<double> values;
        for (std::size_t ji = 0; ji < jobs.size(); ++ji) {
            if (jobs[ji].n_index != static_cast<int>(ni)) continue;
            if (failed[ji]) {
                ++row.failures;
                continue;
            }
            values.push_back(risks[ji]);
        }
        row.replicates = static_cast<int>(values.size());
        if (!values.empty()) {
            double mean = 0.0;
            for (double v : values) mean += v;
            mean /= values.size();
            row.mean_risk = mean;
            if (values.size() > 1) {
                double ss = 0.0;
                for (double v : values) ss += (v - mean) * (v - mean);
                row.std_error = std::sqrt(ss / (values.size() - 1) / values.size());
            }
        }
        table.rows.push_back(row);
    }
    return table;
}

RateFit fit_rate(const RiskTable& table) {
    RateFit fit;
    std::vector<double> xs, ys;
    for (const auto& row : table.rows) {
        if (row.replicates < 1) continue;
        if (row.mean_risk <= 1e-14) continue; // interpolation-regime rows
        xs.push_back(std::log(static_cast<double>(row.n)));
        ys.push_back(std::log(row.mean_risk));
    }
    fit.rows_used = static_cast<int>(xs.size());
    if (fit.rows_used < 3) {
        fit.interpolation_regime = true;
        for (const auto& row : table.rows)
            if (row.replicates >= 1 && row.mean_risk > 1e-14) fit.interpolation_regime = false;
        if (!fit.interpolation_regime)
            throw std::invalid_argument("fit_rate: need at least 3 rows with positive risk");
        return fit;
    }
    const double n = static_cast<double>(xs.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sx += xs[k];
        sy += ys[k];
        sxx += xs[k] * xs[k];
        sxy += xs[k] * ys[k];
    }
    const double denom = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss_res = 0.0, ss_tot = 0.0;
    const double ybar = sy / n;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const double pred = fit.intercept + fit.slope * xs[k];
        ss_res += (ys[k] - pred) * (ys[k] - pred);
        ss_tot += (ys[k] - ybar) * (ys[k] - ybar);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    if (xs.size() > 2) {
        const double sigma2 = ss_res / (n - 2.0);
        fit.slope_std_error = std::sqrt(sigma2 * n / denom);
    }
    return fit;
}

} // namespace xgbvar
