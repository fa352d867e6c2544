#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xgbvar/types.hpp"

namespace xgbvar {

// Dyadic bump: +1 on the outer quarters of cell ((k-1)2^-m, k 2^-m), -1 on
// the middle half, 0 outside and at breakpoints. k in [2^m]; m >= 0.
double psi(int m, int k, double x);

// Primitive of psi from 0: piecewise-linear, peaks at +-2^(-m-2), zero
// outside the cell.
double psi_primitive(int m, int k, double x);

// L2-normalized Haar function: +-2^(m/2) on the two halves of the cell.
double haar_h(int m, int k, double x);

// One-dimensional factor for exact piecewise-polynomial integration.
struct Factor1D {
    enum class Kind { psi, primitive, haar };
    Kind kind;
    int m = 0;
    int k = 1;
    double operator()(double x) const;
};

// Exact integral over [0,1] of a product of up to two factors (piecewise
// polynomial of degree <= 2; Simpson on the merged breakpoints is exact).
double integrate_product(const Factor1D& a);
double integrate_product(const Factor1D& a, const Factor1D& b);

// The lower-bound packing family: resolution vectors p with sum l over
// s_bar coordinates, per-cell indices i, one sign per (p, i).
class PackingFamily {
  public:
    PackingFamily(int s_bar, int l, double v_budget, std::vector<double> box_widths,
                  double sigma);

    int s_bar() const { return s_bar_; }
    int l() const { return l_; }
    double v_budget() const { return v_budget_; }
    double sigma() const { return sigma_; }
    const std::vector<double>& box() const { return box_; }

    const std::vector<std::vector<int>>& resolutions() const { return p_list_; }
    // Flattened (p, i) index set; i is 1-based per coordinate.
    struct QIndex {
        int p_index;
        std::vector<int> cell; // i_j in [2^{p_j}]
    };
    const std::vector<QIndex>& q_set() const { return q_; }
    std::int64_t q_size() const { return static_cast<std::int64_t>(q_.size()); }

    // f_eta(x) = (V/sqrt(|P_l|)) sum_q eta_q prod_j Psi_{p_j, i_j}(x_j/M_j + 1/2).
    // Coordinates beyond s_bar are ignored; x is clamped to the closed box.
    double f_eta(const std::vector<int>& eta,
                 const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

    // ||f_eta - f_eta'||^2 under the uniform density on the box, by exact
    // tensor-product integration.
    double distance_squared(const std::vector<int>& eta, const std::vector<int>& eta_prime) const;

    // Same distance through the Haar expansion: sum over q of <g, H_q>^2
    // with the inner products computed by exact integration (a lower bound
    // on the exact distance by Bessel).
    double distance_squared_bessel(const std::vector<int>& eta,
                                   const std::vector<int>& eta_prime) const;

    // Total-variation mass of the defining signed measure (the L1 norm of
    // its density), by exact cell sums.
    double measure_mass(const std::vector<int>& eta) const;

  private:
    int s_bar_;
    int l_;
    double v_budget_;
    std::vector<double> box_;
    double sigma_;
    std::vector<std::vector<int>> p_list_;
    std::vector<QIndex> q_;
};

struct FamilyCheckReport {
    bool haar_orthonormal = false;
    double haar_max_error = 0.0;
    bool inner_products_ok = false;
    double inner_product_max_error = 0.0;
    bool mass_ok = false;
    double max_mass = 0.0;
    bool near_distance_ok = false; // Hamming-1 upper bound
    double near_distance_margin = 0.0;
    bool far_distance_ok = false; // per-Hamming lower bound on sampled pairs
    double far_distance_margin = 0.0;
    bool bessel_ok = false; // exact Haar expansion matches its closed form
    double bessel_max_error = 0.0;
    int sampled_pairs = 0;

    bool all_ok() const {
        return haar_orthonormal && inner_products_ok && mass_ok && near_distance_ok &&
               far_distance_ok && bessel_ok;
    }
};

// Verifies the family identities by exact integration; pair samples are
// drawn deterministically from `seed`.
FamilyCheckReport family_checks(const PackingFamily& family, int sampled_pairs = 8,
                                std::uint64_t seed = 1);

struct AssouadBound {
    double bound = 0.0;
    bool under_threshold = false;
    int l = 0;
    std::int64_t q = 0;
    double sample_threshold = 0.0;
};

// Assouad lower bound on the minimax risk at sample size n for the family's
// (s_bar, V, sigma) and the uniform density (b = B = 1): the resolution l is
// chosen by the closed-form selection rule, and the bound combines the
// verified packing distances with the Gaussian KL term. Returns 0 with a
// flag when n is below the admissible threshold.
AssouadBound assouad_bound(int s_bar, double v_budget, double sigma, std::int64_t n);
AssouadBound assouad_bound(const PackingFamily& family, std::int64_t n);

} // namespace xgbvar
