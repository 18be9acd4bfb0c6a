#pragma once

#include <span>
#include <string>
#include <vector>

#include "mggm/types.hpp"

namespace mggm::grouplasso {

/// Per-session sufficient statistics for the node-wise regressions:
/// gram[l] = X^(S,l)^T X^(S,l) (q x q) and rows[l] = n_l * p.
struct SessionGrams {
    std::vector<Matrix> gram;
    std::vector<double> rows;

    static SessionGrams from_dataset(const MultiSessionDataset& ds);
    static SessionGrams from_designs(std::span<const Matrix> designs);
    /// Only the listed trials of each session.
    static SessionGrams from_trials(const MultiSessionDataset& ds,
                                    const std::vector<std::vector<std::size_t>>& trials);

    std::size_t sessions() const noexcept { return gram.size(); }
    Index q() const { return gram.front().rows(); }
    /// min_l n_l p, the loss normalizer.
    double min_rows() const;
    /// Pooled root-mean-square of column i over all sessions.
    double column_rms(Index i) const;
};

/// Regression of node `target` on all other nodes, jointly over sessions:
///
///   (1/(2 n0 p)) sum_l ||X_l[:, i] - X_l b_l||^2 + gamma * sum_{j != i} ||(w_lj b_lj)_l||_2
///
/// with w_lj = ||X_l[:, j]|| / sqrt(n_l p) and b_li = 0.
struct GroupLassoProblem {
    const SessionGrams* grams = nullptr;
    Index target = 0;
    double gamma = 0.0;
};

struct SolverOptions {
    int max_iter = 10000;
    double tol = 1e-8;
    double kkt_tol = 1e-6;
};

struct GroupLassoSolution {
    /// coef(l, j): coefficient of node j in session l; coef(l, target) == 0.
    Matrix coef;
    int iterations = 0;
    double max_change = 0.0;
    double kkt_residual = 0.0;
    bool converged = false;
    std::vector<double> objective_history;
};

/// c0 * sqrt((m + ln(m n0 p q)) / (n0 p)).
double default_gamma(const Dimensions& dims, double c0 = 0.5);

/// Column scale weights w(l, j); throws ZeroVarianceColumn for a zero
/// predictor column (the target column is allowed to vanish).
Matrix column_weights(const SessionGrams& grams, Index target);

double objective(const GroupLassoProblem& problem, const Matrix& coef);

/// Largest violation of the block optimality conditions at `coef`:
/// for active groups ||grad_u + gamma u/||u|| ||, for zero groups
/// max(0, ||grad_u|| - gamma), both in standardized coordinates u = w b.
double kkt_residual(const GroupLassoProblem& problem, const Matrix& coef);

/// Smallest gamma for which the zero vector is optimal.
double null_gamma(const GroupLassoProblem& problem);

/// Block coordinate descent with exact group updates. Never throws on
/// non-convergence; check `converged`.
GroupLassoSolution solve(const GroupLassoProblem& problem, const SolverOptions& options = {});

struct NodeFit {
    GroupLassoSolution solution;
    bool ok = true;
    std::string error;
};

/// One regression per node, parallel over nodes. `gammas` has length q.
std::vector<NodeFit> fit_all_nodes(const SessionGrams& grams, const std::vector<double>& gammas,
                                   const SolverOptions& options = {});

/// Per-node penalties for the "theory" policy: default_gamma scaled by
/// each target column's pooled RMS, so estimates are scale-equivariant.
std::vector<double> theory_gammas(const SessionGrams& grams, const Dimensions& dims,
                                  double c0 = 0.5);

struct CrossValidationResult {
    std::vector<double> multipliers;
    std::vector<double> losses;
    double best_multiplier = 1.0;
    std::vector<double> gammas;
};

/// K-fold cross-validation over trials within each session; the grid is
/// a set of multipliers applied to the theory penalties.
CrossValidationResult cross_validate(const MultiSessionDataset& ds,
                                     const std::vector<double>& multipliers, std::size_t folds,
                                     double c0 = 0.5, const SolverOptions& options = {});

std::vector<double> log_grid(double lo, double hi, std::size_t count);

} // namespace mggm::grouplasso
