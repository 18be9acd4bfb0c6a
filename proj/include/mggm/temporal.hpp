#pragma once

#include <optional>
#include <vector>

#include "mggm/types.hpp"

namespace mggm::temporal {

/// Exponent used to turn the per-session sample count into a bandwidth.
enum class BandwidthRule {
    Rate,       // floor((n q)^(1/(1+alpha)))
    ProofRate,  // floor((n q)^(1/(2(alpha+1))))
};

/// Bandwidth from the sample count, clamped to [1, p-1].
std::size_t default_bandwidth(std::size_t n, std::size_t q, double alpha, std::size_t p,
                              BandwidthRule rule = BandwidthRule::Rate);

struct BandedRegression {
    /// beta(s, t): weight of time s when predicting time t; nonzero only
    /// for t - h <= s < t.
    Matrix beta;
    /// Innovation variances, one per time point.
    Vector phi;
    std::size_t bandwidth = 1;
    /// Time points whose band Gram needed the ridge fallback.
    std::vector<std::size_t> ridge_points;
};

/// Per-time least squares of row t on rows t-h..t-1, pooling the q columns
/// of every trial as samples. `stacked` is stack_temporal(session).
BandedRegression fit_banded_regression(const Matrix& stacked, std::size_t bandwidth);

/// SVD with singular values clipped into [1/eta, eta].
Matrix truncate_singular(const Matrix& a, double eta);

struct TemporalEstimate {
    Matrix omega_bar;
    Matrix sigma_bar;
    Matrix sigma;   // trace p
    Matrix omega;   // inverse of sigma
    double frob_sq_over_p = 0.0;
};

/// Omega_bar = P^T diag(phi)^-1 P with P = P_eta((I - beta)^T), then
/// Sigma rescaled to trace p.
TemporalEstimate assemble_temporal(const Matrix& beta, const Vector& phi, double eta);

struct SessionTemporalFit {
    BandedRegression regression;
    double eta = 10.0;
    TemporalEstimate estimate;
};

struct TemporalOptions {
    double eta = 10.0;
    /// Per-session decay exponents; empty means 1 for every session.
    std::vector<double> alpha;
    /// Per-session bandwidth overrides; empty means default_bandwidth.
    std::vector<std::size_t> bandwidth;
    BandwidthRule rule = BandwidthRule::Rate;
};

struct TemporalFit {
    std::vector<SessionTemporalFit> sessions;

    /// ||Sigma_hat^(T,l)||_F^2 / p for every session.
    std::vector<double> frob_sq_over_p() const;
};

TemporalFit fit_temporal(const MultiSessionDataset& ds, const TemporalOptions& options = {});

} // namespace mggm::temporal
