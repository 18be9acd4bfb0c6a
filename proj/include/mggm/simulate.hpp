#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mggm/rng.hpp"
#include "mggm/types.hpp"

namespace mggm::simulate {

enum class GraphKind { Random, Hub, Chain };

std::string to_string(GraphKind kind);
GraphKind graph_kind_from_string(const std::string& name);

struct SimulationSpec {
    GraphKind kind = GraphKind::Random;
    Dimensions dims;
    std::optional<double> edge_prob_override;
    double nonzero_low = 0.0;
    double nonzero_high_base = 0.3;
    /// Session l (0-based) draws nonzeros from Unif(low, high_base / decay^l).
    double session_decay = 2.0;
    double temporal_kappa5 = 0.2;
    /// One decay exponent per session; empty means 1 for every session.
    std::vector<double> temporal_alpha;
    double spd_floor = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
    double alpha(std::size_t l) const;
};

/// Symmetric support with true diagonal.
///
/// Random: each pair independently with probability sqrt(3/q) (or the
/// override). Hub: ceil(q/20) contiguous groups, the first node of each
/// group linked to the rest of its group. Chain: (i, i+1).
BoolMatrix gen_support(GraphKind kind, std::size_t q, std::uint64_t seed,
                       std::optional<double> edge_prob = std::nullopt);

/// Session-l precision on `mask`: upper-triangle nonzeros drawn uniformly,
/// mirrored, unit diagonal, then shifted and rescaled so that the diagonal
/// stays 1 and the smallest eigenvalue is at least `spec.spd_floor`.
Matrix gen_spatial_precision(const BoolMatrix& mask, std::size_t session,
                             const SimulationSpec& spec, std::uint64_t seed);

struct TemporalModel {
    Matrix beta;   // strictly upper: beta(s, t) for s < t
    Vector phi;    // innovation variances
    Matrix sigma;  // trace p
    Matrix omega;
};

/// beta(s, t) = kappa5 * (t - s)^(-alpha - 1), Phi = I, then Sigma rescaled
/// to trace p (Phi rescaled by the same factor).
TemporalModel gen_temporal_model(std::size_t p, double alpha, double kappa5);

/// Precision from a Cholesky-type factorization:
/// Omega = (I - beta) diag(phi)^-1 (I - beta)^T, beta strictly upper.
Matrix temporal_precision(const Matrix& beta, const Vector& phi);

/// Draws X = A Z B^T with A A^T = Sigma^T and B B^T = Sigma^S, so that
/// vec(X) has covariance Sigma^S (x) Sigma^T.
class MatrixNormalSampler {
public:
    MatrixNormalSampler(const Matrix& temporal_cov, const Matrix& spatial_cov);

    Trial draw(Rng& rng) const;

private:
    Matrix temporal_factor_;
    Matrix spatial_factor_t_;
};

Trial sample_matrix_normal(const Matrix& temporal_cov, const Matrix& spatial_cov,
                           std::uint64_t seed);

/// Samples n[l] trials per session from known per-session parameters.
MultiSessionDataset sample_dataset(const GroundTruth& truth, const std::vector<std::size_t>& n,
                                   std::uint64_t seed, Manifest manifest = {});

/// Builds a ground truth from per-session spatial precisions and temporal
/// models; the support is the union of off-diagonal nonzeros.
GroundTruth make_truth(const std::vector<Matrix>& spatial_precision,
                       const std::vector<TemporalModel>& temporal);

GroundTruth simulate_truth(const SimulationSpec& spec);
MultiSessionDataset simulate_dataset(const SimulationSpec& spec);

} // namespace mggm::simulate
