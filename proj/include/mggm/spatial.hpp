#pragma once

#include <string>
#include <vector>

#include "mggm/group_lasso.hpp"
#include "mggm/types.hpp"

namespace mggm::spatial {

/// How the node-wise penalties are chosen.
struct GammaSpec {
    enum class Kind { Theory, Scalar, PerNode, CrossValidated };

    Kind kind = Kind::Theory;
    double c0 = 0.5;
    double value = 0.0;
    std::vector<double> per_node;
    std::vector<double> cv_multipliers = grouplasso::log_grid(0.1, 10.0, 9);
    std::size_t cv_folds = 5;

    static GammaSpec theory(double c0 = 0.5) {
        GammaSpec g;
        g.c0 = c0;
        return g;
    }
    static GammaSpec scalar(double gamma) {
        GammaSpec g;
        g.kind = Kind::Scalar;
        g.value = gamma;
        return g;
    }
};

std::vector<double> resolve_gammas(const GammaSpec& spec, const MultiSessionDataset& ds,
                                   const grouplasso::SessionGrams& grams,
                                   const grouplasso::SolverOptions& options = {});

struct SpatialFit {
    /// beta[l](j, i): coefficient of node j in the regression of node i.
    std::vector<Matrix> beta;
    std::vector<Session> residuals;
    std::vector<Matrix> phi;
    std::vector<Matrix> omega;
    /// rho[l] with diagonal -1 (the formula value); never used on the diagonal.
    std::vector<Matrix> rho;
    std::vector<double> gammas;
    std::vector<int> iterations;
    std::vector<bool> converged;
    double max_kkt_residual = 0.0;
};

/// eps^(k,l) = X^(k,l) (I - beta^(l)).
std::vector<Session> residuals(const MultiSessionDataset& ds, const std::vector<Matrix>& beta);

struct PhiEstimate {
    std::vector<Matrix> phi;
    bool nonpositive_diagonal = false;
    double max_asymmetry = 0.0;
};

/// Bias-corrected residual covariance, per session:
///   Phi_ii = mean_{k,t} eps_ti^2
///   Phi_ij = -mean_{k,t}(eps_ti eps_tj + eps_tj^2 beta_ji + eps_ti^2 beta_ij)
PhiEstimate debiased_phi(const std::vector<Session>& residuals, const std::vector<Matrix>& beta);

struct OmegaRho {
    Matrix omega;
    Matrix rho;
};

/// Omega_ij = Phi_ij / (Phi_ii Phi_jj), rho_ij = -Phi_ij / sqrt(Phi_ii Phi_jj).
OmegaRho omega_rho(const Matrix& phi);

SpatialFit fit_spatial(const MultiSessionDataset& ds, const GammaSpec& gamma = GammaSpec::theory(),
                       const grouplasso::SolverOptions& options = {});

} // namespace mggm::spatial
