#include "mggm/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mggm::spatial {

std::vector<double> resolve_gammas(const GammaSpec& spec, const MultiSessionDataset& ds,
                                   const grouplasso::SessionGrams& grams,
                                   const grouplasso::SolverOptions& options) {
    const std::size_t q = ds.dims().q;
    switch (spec.kind) {
    case GammaSpec::Kind::Theory:
        return grouplasso::theory_gammas(grams, ds.dims(), spec.c0);
    case GammaSpec::Kind::Scalar:
        if (!(spec.value >= 0.0)) {
            fail(ErrorCode::InvalidArgument, "gamma must be non-negative");
        }
        return std::vector<double>(q, spec.value);
    case GammaSpec::Kind::PerNode:
        if (spec.per_node.size() != q) {
            fail(ErrorCode::InvalidArgument, "per-node gamma list must have length q");
        }
        return spec.per_node;
    case GammaSpec::Kind::CrossValidated:
        return grouplasso::cross_validate(ds, spec.cv_multipliers, spec.cv_folds, spec.c0, options)
            .gammas;
    }
    return {};
}

std::vector<Session> residuals(const MultiSessionDataset& ds, const std::vector<Matrix>& beta) {
    const Dimensions& d = ds.dims();
    if (beta.size() != d.m()) {
        fail(ErrorCode::ShapeMismatch, "need one coefficient matrix per session");
    }
    const auto q = static_cast<Index>(d.q);
    std::vector<Session> out(d.m());
    for (std::size_t l = 0; l < d.m(); ++l) {
        if (beta[l].rows() != q || beta[l].cols() != q) {
            fail(ErrorCode::ShapeMismatch, "coefficient matrix must be q x q");
        }
        const Matrix proj = Matrix::Identity(q, q) - beta[l];
        out[l].reserve(d.n[l]);
        for (const Trial& x : ds.session(l)) {
            out[l].push_back(x * proj);
        }
    }
    return out;
}

PhiEstimate debiased_phi(const std::vector<Session>& residuals, const std::vector<Matrix>& beta) {
    if (residuals.size() != beta.size() || residuals.empty()) {
        fail(ErrorCode::ShapeMismatch, "residuals and coefficients disagree on session count");
    }
    PhiEstimate out;
    for (std::size_t l = 0; l < residuals.size(); ++l) {
        const Session& eps = residuals[l];
        if (eps.empty()) {
            fail(ErrorCode::ShapeMismatch, "session without residuals");
        }
        const Index q = eps.front().cols();
        const Matrix& b = beta[l];
        if (b.rows() != q || b.cols() != q) {
            fail(ErrorCode::ShapeMismatch, "coefficient matrix must be q x q");
        }
        // Trial-major accumulation keeps the summation order fixed.
        Matrix cross = Matrix::Zero(q, q);
        double count = 0.0;
        for (const Trial& e : eps) {
            cross.noalias() += e.transpose() * e;
            count += static_cast<double>(e.rows());
        }
        cross /= count;
        const Vector var = cross.diagonal();

        Matrix phi(q, q);
        for (Index i = 0; i < q; ++i) {
            phi(i, i) = var[i];
            for (Index j = 0; j < q; ++j) {
                if (i != j) {
                    phi(i, j) = -(cross(i, j) + var[j] * b(j, i) + var[i] * b(i, j));
                }
            }
        }
        const double asym = (phi - phi.transpose()).cwiseAbs().maxCoeff();
        out.max_asymmetry = std::max(out.max_asymmetry, asym);
        phi = 0.5 * (phi + phi.transpose()).eval();
        if ((phi.diagonal().array() <= 0.0).any()) {
            out.nonpositive_diagonal = true;
        }
        out.phi.push_back(std::move(phi));
    }
    return out;
}

OmegaRho omega_rho(const Matrix& phi) {
    if ((phi.diagonal().array() <= 0.0).any() || !phi.allFinite()) {
        fail(ErrorCode::NonPositiveDiagonal, "Phi has a non-positive diagonal entry");
    }
    const Vector d = phi.diagonal();
    const Vector inv_sd = d.cwiseSqrt().cwiseInverse();
    OmegaRho out;
    out.omega = d.cwiseInverse().asDiagonal() * phi * d.cwiseInverse().asDiagonal();
    out.rho = -(inv_sd.asDiagonal() * phi * inv_sd.asDiagonal());
    out.rho.diagonal().setConstant(-1.0);
    return out;
}

SpatialFit fit_spatial(const MultiSessionDataset& ds, const GammaSpec& gamma,
                       const grouplasso::SolverOptions& options) {
    const Dimensions& d = ds.dims();
    const auto q = static_cast<Index>(d.q);
    const grouplasso::SessionGrams grams = grouplasso::SessionGrams::from_dataset(ds);

    SpatialFit fit;
    fit.gammas = resolve_gammas(gamma, ds, grams, options);
    const auto nodes = grouplasso::fit_all_nodes(grams, fit.gammas, options);

    fit.beta.assign(d.m(), Matrix::Zero(q, q));
    for (Index i = 0; i < q; ++i) {
        const auto& node = nodes[static_cast<std::size_t>(i)];
        if (!node.ok) {
            std::ostringstream os;
            os << "regression for node " << i << " failed: " << node.error;
            throw Error(ErrorCode::InvalidArgument, os.str());
        }
        for (std::size_t l = 0; l < d.m(); ++l) {
            fit.beta[l].col(i) = node.solution.coef.row(static_cast<Index>(l)).transpose();
        }
        fit.iterations.push_back(node.solution.iterations);
        fit.converged.push_back(node.solution.converged);
        fit.max_kkt_residual = std::max(fit.max_kkt_residual, node.solution.kkt_residual);
    }

    fit.residuals = residuals(ds, fit.beta);
    PhiEstimate phi = debiased_phi(fit.residuals, fit.beta);
    if (phi.nonpositive_diagonal) {
        fail(ErrorCode::NonPositiveDiagonal,
             "a residual variance estimate is not positive; the fit is unusable for inference");
    }
    fit.phi = std::move(phi.phi);
    for (const Matrix& p : fit.phi) {
        OmegaRho orr = omega_rho(p);
        fit.omega.push_back(std::move(orr.omega));
        fit.rho.push_back(std::move(orr.rho));
    }
    return fit;
}

} // namespace mggm::spatial
