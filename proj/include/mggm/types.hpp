#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mggm/error.hpp"

namespace mggm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Index = Eigen::Index;

/// Sizes of a multi-session matrix-variate dataset.
///
/// `p` is the temporal dimension (rows of a trial) and `q` the spatial
/// dimension (columns). `n[l]` is the number of trials in session `l`.
struct Dimensions {
    std::vector<std::size_t> n;
    std::size_t p = 0;
    std::size_t q = 0;

    Dimensions() = default;
    Dimensions(std::vector<std::size_t> trials, std::size_t p_, std::size_t q_);

    std::size_t m() const noexcept { return n.size(); }
    std::size_t n0() const;
    void validate() const;

    friend bool operator==(const Dimensions&, const Dimensions&) = default;
};

/// One p x q observation (time in rows, space in columns).
using Trial = Matrix;
using Session = std::vector<Trial>;

/// Simulation ground truth, one entry per session.
struct GroundTruth {
    std::vector<Matrix> spatial_cov;        // Sigma^(S,l)
    std::vector<Matrix> spatial_precision;  // Omega^(S,l)
    std::vector<Matrix> partial_corr;       // rho^(S,l), zero diagonal
    std::vector<Matrix> temporal_cov;       // Sigma^(T,l), trace p
    std::vector<Matrix> temporal_beta;      // beta^(T,l), strictly upper: (s, t) with s < t
    std::vector<Vector> temporal_phi;       // diagonal of Phi^(T,l)
    BoolMatrix support;                     // shared off-diagonal support, diagonal true

    /// Checks Sigma * Omega = I and tr(Sigma^T) = p.
    void validate(std::size_t p, double tol = 1e-8) const;
};

struct Manifest {
    std::string name = "dataset";
    std::optional<std::uint64_t> seed;
    std::string provenance;
};

class MultiSessionDataset {
public:
    MultiSessionDataset() = default;
    MultiSessionDataset(std::vector<Session> sessions, Manifest manifest = {},
                        std::optional<GroundTruth> truth = std::nullopt);

    const Dimensions& dims() const noexcept { return dims_; }
    const std::vector<Session>& sessions() const noexcept { return sessions_; }
    const Session& session(std::size_t l) const { return sessions_.at(l); }
    const Manifest& manifest() const noexcept { return manifest_; }
    const std::optional<GroundTruth>& truth() const noexcept { return truth_; }

    /// Copy with every trial of every session multiplied by `c`.
    MultiSessionDataset scaled(double c) const;

private:
    Dimensions dims_;
    std::vector<Session> sessions_;
    Manifest manifest_;
    std::optional<GroundTruth> truth_;
};

/// Unordered spatial node pairs, stored as (i, j) with i < j.
class EdgeSet {
public:
    using Edge = std::pair<std::size_t, std::size_t>;

    EdgeSet() = default;
    /// Rejects self-loops, duplicates and indices >= q. Pairs given as
    /// (j, i) with j > i are normalized to (i, j).
    EdgeSet(std::vector<Edge> edges, std::size_t q);

    static EdgeSet off_diagonal(std::size_t q);
    /// All pairs (i, j) with i in [a0, a1) and j in [b0, b1), row-major.
    static EdgeSet cross_block(std::size_t a0, std::size_t a1, std::size_t b0,
                               std::size_t b1, std::size_t q);
    /// Pairs absent from the support mask (null in every session).
    static EdgeSet zero_pairs(const BoolMatrix& support);
    static EdgeSet support_pairs(const BoolMatrix& support);

    const std::vector<Edge>& edges() const noexcept { return edges_; }
    std::size_t size() const noexcept { return edges_.size(); }
    bool empty() const noexcept { return edges_.empty(); }
    std::size_t q() const noexcept { return q_; }

private:
    std::vector<Edge> edges_;
    std::size_t q_ = 0;
};

/// Rows are trials in order, each trial's rows in time order: (n_l p) x q.
Matrix stack_spatial(const Session& session);
/// Transposed trials stacked: (n_l q) x p.
Matrix stack_temporal(const Session& session);

/// Partial correlations -Omega_ij / sqrt(Omega_ii Omega_jj), zero diagonal.
Matrix partial_correlation(const Matrix& precision);

} // namespace mggm
