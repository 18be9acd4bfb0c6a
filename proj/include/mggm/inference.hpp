#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mggm/spatial.hpp"
#include "mggm/temporal.hpp"
#include "mggm/types.hpp"

namespace mggm::inference {

/// What the tests need from the two fits.
struct InferenceInput {
    Dimensions dims;
    std::vector<Matrix> rho;              // per session, q x q
    std::vector<double> frob_sq_over_p;   // ||Sigma^(T,l)||_F^2 / p per session

    static InferenceInput from_fits(const Dimensions& dims, const spatial::SpatialFit& sfit,
                                    const temporal::TemporalFit& tfit);
    void validate() const;
};

/// (1/sqrt(m)) sum_l sqrt(n_l p): the statistic's value when every
/// session's partial correlation equals one.
double statistic_scale(const Dimensions& dims);

struct TestStatistic {
    EdgeSet edges;
    Vector values;
    double sup_norm = 0.0;
};

/// T_ij = (1/sqrt(m)) sum_l sqrt(n_l p) rho^(l)_ij, optionally with signs
/// sigma(l, e) in {-1, +1} multiplying each term.
TestStatistic test_statistic(const std::vector<Matrix>& rho, const Dimensions& dims,
                             const EdgeSet& edges, const std::optional<Matrix>& signs = std::nullopt);

/// Covariance bracket for one session, written in the normalized residual
/// correlations r (r_aa = 1, r_ab = -rho_ab).
double covariance_bracket(const Matrix& rho, std::size_t i1, std::size_t j1, std::size_t i2,
                          std::size_t j2);

/// (1/m) sum_l f_l (1 - rho_ij^(l)2)^2, the closed form of a diagonal entry.
double diagonal_covariance(const std::vector<Matrix>& rho, const std::vector<double>& frob_sq_over_p,
                           std::size_t i, std::size_t j);

struct AsymptoticCovariance {
    Matrix s;
    bool psd_repaired = false;
    double min_eigenvalue = 0.0;  // before repair
};

AsymptoticCovariance compute_S(const std::vector<Matrix>& rho,
                               const std::vector<double>& frob_sq_over_p, const EdgeSet& edges);

struct BootstrapResult {
    double quantile = 0.0;
    /// ||Z_b||_inf in draw order.
    std::vector<double> sup_norms;
    std::vector<double> sorted;

    /// The ceil((1-alpha) B)-th smallest sup-norm.
    double quantile_at(double alpha) const;
};

/// Draws B vectors Z ~ N(0, S) through a symmetric square root.
BootstrapResult bootstrap_quantile(const Matrix& s, double alpha, std::size_t draws,
                                   std::uint64_t seed);

std::size_t order_statistic_rank(double alpha, std::size_t draws);

struct TestResult {
    TestStatistic statistic;
    AsymptoticCovariance covariance;
    double sup_norm = 0.0;
    /// sup_norm for the plain test, the shrunk statistic for a c-level test.
    double test_value = 0.0;
    double quantile = 0.0;
    bool reject = false;
    double p_value = 1.0;
    std::size_t draws = 0;
    double alpha = 0.05;
    double c = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> bootstrap_sup_norms;
};

TestResult simultaneous_test(const InferenceInput& input, const EdgeSet& edges, double alpha,
                             std::size_t draws, std::uint64_t seed,
                             const std::optional<Matrix>& signs = std::nullopt);

/// Tests H0: max over E of |rho_ij^(l)| <= c in every session, rejecting
/// when max(|T_ij| - c w) exceeds the bootstrap quantile.
TestResult c_level_test(const InferenceInput& input, const EdgeSet& edges, double c, double alpha,
                        std::size_t draws, std::uint64_t seed);

/// q x q matrix of two-sided single-edge normal p-values (diagonal 1).
Matrix single_edge_pvalues(const InferenceInput& input);
/// Same, as |T_ij| / sqrt(S_(ij),(ij)) z-scores (diagonal 0).
Matrix single_edge_zscores(const InferenceInput& input);

double normal_cdf(double x);

} // namespace mggm::inference
