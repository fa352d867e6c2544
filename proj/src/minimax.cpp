#include "xgbvar/minimax.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "xgbvar/rng.hpp"

namespace xgbvar {

namespace {

// Quarter points of the dyadic cell ((k-1) 2^-m, k 2^-m).
std::array<double, 5> quarter_points(int m, int k) {
    const double h = std::ldexp(1.0, -m);
    const double a = (k - 1) * h;
    return {a, a + 0.25 * h, a + 0.5 * h, a + 0.75 * h, a + h};
}

void check_cell(int m, int k, const char* who) {
    if (m < 0) throw std::invalid_argument(std::string(who) + ": resolution must be >= 0");
    if (k < 1 || k > (1 << m))
        throw std::invalid_argument(std::string(who) + ": cell index out of range");
}

} // namespace

double psi(int m, int k, double x) {
    check_cell(m, k, "psi");
    const auto p = quarter_points(m, k);
    // Zero at every quarter point; the open-interval values follow the
    // outer-quarters-up, middle-half-down shape.
    for (double b : p)
        if (x == b) return 0.0;
    if (x <= p[0] || x >= p[4]) return 0.0;
    if (x < p[1] || x > p[3]) return 1.0;
    return -1.0;
}

double psi_primitive(int m, int k, double x) {
    check_cell(m, k, "psi_primitive");
    const double h = std::ldexp(1.0, -m);
    const double z = x / h - (k - 1); // relative position in the cell
    if (z <= 0.0 || z >= 1.0) return 0.0;
    if (z <= 0.25) return z * h;
    if (z <= 0.75) return (0.5 - z) * h;
    return (z - 1.0) * h;
}

double haar_h(int m, int k, double x) {
    check_cell(m, k, "haar_h");
    const auto p = quarter_points(m, k);
    if (x <= p[0] || x >= p[4] || x == p[2]) return 0.0;
    const double height = std::exp2(0.5 * m);
    return x < p[2] ? height : -height;
}

double Factor1D::operator()(double x) const {
    switch (kind) {
        case Kind::psi: return psi(m, k, x);
        case Kind::primitive: return psi_primitive(m, k, x);
        case Kind::haar: return haar_h(m, k, x);
    }
    return 0.0;
}

namespace {

// Merged breakpoints of the factors, clipped to [0,1].
std::vector<double> merged_breakpoints(const Factor1D* a, const Factor1D* b) {
    std::vector<double> pts{0.0, 1.0};
    auto add = [&](const Factor1D& f) {
        for (double x : quarter_points(f.m, f.k))
            if (x > 0.0 && x < 1.0) pts.push_back(x);
    };
    if (a) add(*a);
    if (b) add(*b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

// 3-point Gauss-Legendre per piece: interior nodes only (the step functions
// are 0 at their breakpoints by convention) and exact through degree 5.
template <typename F>
double integrate_pieces(const std::vector<double>& pts, F&& f) {
    constexpr double node = 0.7745966692414833770358531; // sqrt(3/5)
    constexpr double w_mid = 8.0 / 9.0;
    constexpr double w_out = 5.0 / 9.0;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double lo = pts[i], hi = pts[i + 1];
        const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        total += half * (w_out * f(mid - node * half) + w_mid * f(mid) +
                         w_out * f(mid + node * half));
    }
    return total;
}

} // namespace

double integrate_product(const Factor1D& a) {
    return integrate_pieces(merged_breakpoints(&a, nullptr), [&](double x) { return a(x); });
}

double integrate_product(const Factor1D& a, const Factor1D& b) {
    return integrate_pieces(merged_breakpoints(&a, &b),
                            [&](double x) { return a(x) * b(x); });
}

PackingFamily::PackingFamily(int s_bar, int l, double v_budget, std::vector<double> box_widths,
                             double sigma)
    : s_bar_(s_bar), l_(l), v_budget_(v_budget), box_(std::move(box_widths)), sigma_(sigma) {
    if (s_bar_ < 1) throw std::invalid_argument("PackingFamily: s_bar must be >= 1");
    if (l_ < 1) throw std::invalid_argument("PackingFamily: l must be >= 1");
    if (!(v_budget_ > 0.0)) throw std::invalid_argument("PackingFamily: V must be > 0");
    if (sigma_ < 0.0) throw std::invalid_argument("PackingFamily: sigma must be >= 0");
    if (static_cast<int>(box_.size()) < s_bar_)
        throw std::invalid_argument("PackingFamily: box must cover s_bar coordinates");
    for (double m : box_)
        if (!(m > 0.0)) throw std::invalid_argument("PackingFamily: box widths must be positive");
    if (static_cast<std::int64_t>(l_ + 2) * s_bar_ > 40)
        throw BudgetError("PackingFamily: resolution exceeds the exact-integration budget");

    // All nonnegative integer vectors of length s_bar summing to l,
    // lexicographic.
    std::vector<int> p(s_bar_, 0);
    auto emit = [&](auto&& self, int pos, int remaining) -> void {
        if (pos == s_bar_ - 1) {
            p[pos] = remaining;
            p_list_.push_back(p);
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            p[pos] = v;
            self(self, pos + 1, remaining - v);
        }
    };
    emit(emit, 0, l_);

    for (std::size_t pi = 0; pi < p_list_.size(); ++pi) {
        const auto& pv = p_list_[pi];
        std::vector<int> cell(s_bar_, 1);
        while (true) {
            q_.push_back(QIndex{static_cast<int>(pi), cell});
            int j = s_bar_ - 1;
            while (j >= 0) {
                if (++cell[j] <= (1 << pv[j])) break;
                cell[j] = 1;
                --j;
            }
            if (j < 0) break;
        }
    }
}

double PackingFamily::f_eta(const std::vector<int>& eta,
                            const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    if (eta.size() != q_.size())
        throw std::invalid_argument("f_eta: sign vector length must equal |Q|");
    if (x.size() < s_bar_) throw std::invalid_argument("f_eta: point has too few coordinates");
    std::vector<double> z(s_bar_);
    for (int j = 0; j < s_bar_; ++j)
        z[j] = std::clamp(x[j] / box_[j] + 0.5, 0.0, 1.0);
    const double scale = v_budget_ / std::sqrt(static_cast<double>(p_list_.size()));
    double total = 0.0;
    for (std::size_t qi = 0; qi < q_.size(); ++qi) {
        if (eta[qi] != 1 && eta[qi] != -1)
            throw std::invalid_argument("f_eta: signs must be +-1");
        const auto& pv = p_list_[q_[qi].p_index];
        double prod = 1.0;
        for (int j = 0; j < s_bar_ && prod != 0.0; ++j)
            prod *= psi_primitive(pv[j], q_[qi].cell[j], z[j]);
        total += eta[qi] * prod;
    }
    return scale * total;
}

namespace {

using Cache = std::map<std::tuple<int, int, int, int>, double>;

double cached_product(Cache& cache, Factor1D::Kind ka, int ma, int kka, Factor1D::Kind kb,
                      int mb, int kkb) {
    // Key includes the kinds via small offsets (kinds are from a fixed pair
    // per cache instance in practice, but keep it safe).
    const int code_a = ma * 8 + static_cast<int>(ka);
    const int code_b = mb * 8 + static_cast<int>(kb);
    const auto key = std::make_tuple(code_a, kka, code_b, kkb);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const double v = integrate_product(Factor1D{ka, ma, kka}, Factor1D{kb, mb, kkb});
    cache.emplace(key, v);
    return v;
}

} // namespace

double PackingFamily::distance_squared(const std::vector<int>& eta,
                                       const std::vector<int>& eta_prime) const {
    if (eta.size() != q_.size() || eta_prime.size() != q_.size())
        throw std::invalid_argument("distance_squared: sign vector length must equal |Q|");
    std::vector<std::size_t> diff;
    for (std::size_t qi = 0; qi < q_.size(); ++qi)
        if (eta[qi] != eta_prime[qi]) diff.push_back(qi);
    static thread_local Cache cache;
    const double unit = 2.0 * v_budget_ / std::sqrt(static_cast<double>(p_list_.size()));
    double total = 0.0;
    for (std::size_t a : diff) {
        const auto& pa = p_list_[q_[a].p_index];
        for (std::size_t b : diff) {
            const auto& pb = p_list_[q_[b].p_index];
            double prod = 1.0;
            for (int j = 0; j < s_bar_ && prod != 0.0; ++j)
                prod *= cached_product(cache, Factor1D::Kind::primitive, pa[j], q_[a].cell[j],
                                       Factor1D::Kind::primitive, pb[j], q_[b].cell[j]);
            total += (eta[a] - eta_prime[a]) * (eta[b] - eta_prime[b]) * 0.25 * unit * unit * prod;
        }
    }
    return total;
}

double PackingFamily::distance_squared_bessel(const std::vector<int>& eta,
                                              const std::vector<int>& eta_prime) const {
    std::vector<std::size_t> diff;
    for (std::size_t qi = 0; qi < q_.size(); ++qi)
        if (eta[qi] != eta_prime[qi]) diff.push_back(qi);
    static thread_local Cache cache;
    const double scale = v_budget_ / std::sqrt(static_cast<double>(p_list_.size()));
    double total = 0.0;
    for (std::size_t h = 0; h < q_.size(); ++h) {
        const auto& ph = p_list_[q_[h].p_index];
        double inner = 0.0;
        for (std::size_t a : diff) {
            const auto& pa = p_list_[q_[a].p_index];
            double prod = 1.0;
            for (int j = 0; j < s_bar_ && prod != 0.0; ++j)
                prod *= cached_product(cache, Factor1D::Kind::primitive, pa[j], q_[a].cell[j],
                                       Factor1D::Kind::haar, ph[j], q_[h].cell[j]);
            inner += (eta[a] - eta_prime[a]) * scale * prod;
        }
        total += inner * inner;
    }
    return total;
}

double PackingFamily::measure_mass(const std::vector<int>& eta) const {
    if (eta.size() != q_.size())
        throw std::invalid_argument("measure_mass: sign vector length must equal |Q|");
    // The density is constant on the tensor grid with step 2^-(l+2); sum
    // |value| * volume over cells, evaluating at cell midpoints.
    const int cells_per_coord = 1 << (l_ + 2);
    const double step = 1.0 / cells_per_coord;
    std::int64_t total_cells = 1;
    for (int j = 0; j < s_bar_; ++j) total_cells *= cells_per_coord;
    const double scale = v_budget_ / std::sqrt(static_cast<double>(p_list_.size()));
    std::vector<int> idx(s_bar_, 0);
    double mass = 0.0;
    for (std::int64_t c = 0; c < total_cells; ++c) {
        double value = 0.0;
        for (std::size_t qi = 0; qi < q_.size(); ++qi) {
            const auto& pv = p_list_[q_[qi].p_index];
            double prod = 1.0;
            for (int j = 0; j < s_bar_ && prod != 0.0; ++j)
                prod *= psi(pv[j], q_[qi].cell[j], (idx[j] + 0.5) * step);
            value += eta[qi] * prod;
        }
        mass += std::abs(value);
        for (int j = s_bar_ - 1; j >= 0; --j) {
            if (++idx[j] < cells_per_coord) break;
            idx[j] = 0;
        }
    }
    for (int j = 0; j < s_bar_; ++j) mass *= step;
    return scale * mass;
}

FamilyCheckReport family_checks(const PackingFamily& family, int sampled_pairs,
                                std::uint64_t seed) {
    FamilyCheckReport report;
    const auto& q_set = family.q_set();
    const auto& plist = family.resolutions();
    const int s_bar = family.s_bar();
    const int l = family.l();
    const double v_budget = family.v_budget();
    const double p_count = static_cast<double>(plist.size());
    static thread_local Cache cache;

    // Haar tensor orthonormality.
    double haar_err = 0.0;
    for (std::size_t a = 0; a < q_set.size(); ++a) {
        const auto& pa = plist[q_set[a].p_index];
        for (std::size_t b = a; b < q_set.size(); ++b) {
            const auto& pb = plist[q_set[b].p_index];
            double prod = 1.0;
            for (int j = 0; j < s_bar && prod != 0.0; ++j)
                prod *= cached_product(cache, Factor1D::Kind::haar, pa[j], q_set[a].cell[j],
                                       Factor1D::Kind::haar, pb[j], q_set[b].cell[j]);
            const double expected = (a == b) ? 1.0 : 0.0;
            haar_err = std::max(haar_err, std::abs(prod - expected));
        }
    }
    report.haar_max_error = haar_err;
    report.haar_orthonormal = haar_err <= 1e-12;

    // <Psi_{p,i}, h_{p',i'}> tensor products: diagonal 2^{-3l/2 - 3 s_bar}.
    double ip_err = 0.0;
    const double diag = std::exp2(-1.5 * l - 3.0 * s_bar);
    for (std::size_t a = 0; a < q_set.size(); ++a) {
        const auto& pa = plist[q_set[a].p_index];
        for (std::size_t b = 0; b < q_set.size(); ++b) {
            const auto& pb = plist[q_set[b].p_index];
            double prod = 1.0;
            for (int j = 0; j < s_bar && prod != 0.0; ++j)
                prod *= cached_product(cache, Factor1D::Kind::primitive, pa[j],
                                       q_set[a].cell[j], Factor1D::Kind::haar, pb[j],
                                       q_set[b].cell[j]);
            const double expected = (a == b) ? diag : 0.0;
            ip_err = std::max(ip_err, std::abs(prod - expected));
        }
    }
    report.inner_product_max_error = ip_err;
    report.inner_products_ok = ip_err <= 1e-12;

    Philox rng(seed, /*stream=*/0x66616d); // fixed check stream
    auto random_eta = [&]() {
        std::vector<int> eta(q_set.size());
        for (auto& e : eta) e = rng.next_u32() & 1u ? 1 : -1;
        return eta;
    };

    // Measure mass at sampled signs (and the all-ones corner).
    double max_mass = family.measure_mass(std::vector<int>(q_set.size(), 1));
    for (int t = 0; t < std::max(1, sampled_pairs / 2); ++t)
        max_mass = std::max(max_mass, family.measure_mass(random_eta()));
    report.max_mass = max_mass;
    report.mass_ok = max_mass <= v_budget * (1.0 + 1e-12);

    // Hamming-1 upper bound, every flip position.
    const double near_bound = (v_budget * v_budget / p_count) * std::exp2(-3.0 * l - 4.0 * s_bar + 2.0);
    double near_margin = near_bound;
    const std::vector<int> base(q_set.size(), 1);
    for (std::size_t qi = 0; qi < q_set.size(); ++qi) {
        std::vector<int> flipped = base;
        flipped[qi] = -1;
        const double dist = family.distance_squared(base, flipped);
        near_margin = std::min(near_margin, near_bound - dist);
    }
    report.near_distance_margin = near_margin;
    report.near_distance_ok = near_margin >= -1e-12;

    // Pairwise lower bound and the Haar-expansion identity on sampled pairs.
    const double far_bound_unit =
        (v_budget * v_budget / p_count) * std::exp2(-3.0 * l - 6.0 * s_bar + 2.0);
    double far_margin = std::numeric_limits<double>::infinity();
    double bessel_err = 0.0;
    int pairs = 0;
    for (int t = 0; t < sampled_pairs; ++t) {
        const std::vector<int> eta = random_eta();
        const std::vector<int> eta_prime = random_eta();
        int hamming = 0;
        for (std::size_t qi = 0; qi < eta.size(); ++qi)
            if (eta[qi] != eta_prime[qi]) ++hamming;
        if (hamming == 0) continue;
        ++pairs;
        const double dist = family.distance_squared(eta, eta_prime);
        far_margin = std::min(far_margin, dist / hamming - far_bound_unit);
        const double bessel = family.distance_squared_bessel(eta, eta_prime);
        const double closed = far_bound_unit * hamming; // b = 1
        bessel_err = std::max(bessel_err, std::abs(bessel - closed));
        if (dist < bessel - 1e-9) far_margin = -std::abs(bessel - dist);
    }
    report.sampled_pairs = pairs;
    report.far_distance_margin = pairs > 0 ? far_margin : 0.0;
    report.far_distance_ok = pairs > 0 && far_margin >= -1e-12;
    report.bessel_max_error = bessel_err;
    report.bessel_ok = pairs > 0 && bessel_err <= 1e-9;
    return report;
}

namespace {

double log_factorial(int k) {
    double v = 0.0;
    for (int i = 2; i <= k; ++i) v += std::log(static_cast<double>(i));
    return v;
}

double binomial(int n, int k) {
    double v = 1.0;
    for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
    return v;
}

} // namespace

AssouadBound assouad_bound(int s_bar, double v_budget, double sigma, std::int64_t n) {
    if (s_bar < 1) throw std::invalid_argument("assouad_bound: s_bar must be >= 1");
    if (!(v_budget > 0.0) || !(sigma > 0.0))
        throw std::invalid_argument("assouad_bound: V and sigma must be positive");
    AssouadBound out;
    const double B = 1.0, b = 1.0; // uniform design density
    const double c_const = B * std::exp2(1.0 - 4.0 * s_bar) *
                           std::pow(6.0 * std::log(2.0), s_bar - 1) *
                           std::exp(log_factorial(s_bar - 1));
    const double noise_ratio = sigma * sigma / (v_budget * v_budget);
    out.sample_threshold =
        std::max(std::exp(4.0 * s_bar * s_bar) / c_const, 1.0 / (c_const * c_const)) * noise_ratio;
    if (static_cast<double>(n) < out.sample_threshold) {
        out.under_threshold = true;
        return out;
    }
    const double x = c_const * static_cast<double>(n) / noise_ratio;
    const double log_x = std::log(x);
    const int l = std::max(
        1, static_cast<int>(std::ceil(
               (log_x - (s_bar - 1) * std::log(log_x)) / (3.0 * std::log(2.0)))));
    out.l = l;
    const double p_count = binomial(s_bar + l - 1, s_bar - 1);
    out.q = static_cast<std::int64_t>(std::llround(p_count * std::exp2(l)));
    const double min_ratio =
        (b * v_budget * v_budget / p_count) * std::exp2(-3.0 * l - 6.0 * s_bar + 2.0);
    const double half_kl = (B * static_cast<double>(n) / noise_ratio / p_count) *
                           std::exp2(-3.0 * l - 4.0 * s_bar);
    const double factor = 1.0 - std::sqrt(half_kl);
    out.bound = factor > 0.0 ? (static_cast<double>(out.q) / 8.0) * min_ratio * factor : 0.0;
    return out;
}

AssouadBound assouad_bound(const PackingFamily& family, std::int64_t n) {
    return assouad_bound(family.s_bar(), family.v_budget(), family.sigma(), n);
}

} // namespace xgbvar
