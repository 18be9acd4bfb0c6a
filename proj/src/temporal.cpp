#include "mggm/temporal.hpp"

#include <algorithm>
#include <cmath>

namespace mggm::temporal {

std::size_t default_bandwidth(std::size_t n, std::size_t q, double alpha, std::size_t p,
                              BandwidthRule rule) {
    if (n == 0 || q == 0 || !(alpha > 0.0) || p < 2) {
        fail(ErrorCode::InvalidArgument, "bandwidth needs n, q >= 1, alpha > 0 and p >= 2");
    }
    const double exponent = rule == BandwidthRule::Rate ? 1.0 / (1.0 + alpha)
                                                        : 1.0 / (2.0 * (alpha + 1.0));
    const double raw = std::floor(std::pow(static_cast<double>(n * q), exponent));
    const double clamped = std::clamp(raw, 1.0, static_cast<double>(p - 1));
    return static_cast<std::size_t>(clamped);
}

BandedRegression fit_banded_regression(const Matrix& stacked, std::size_t bandwidth) {
    const Index p = stacked.cols();
    const auto samples = static_cast<double>(stacked.rows());
    if (bandwidth < 1 || static_cast<Index>(bandwidth) > p - 1) {
        fail(ErrorCode::InvalidArgument, "bandwidth must lie in [1, p-1]");
    }
    const auto h = static_cast<Index>(bandwidth);

    BandedRegression out;
    out.bandwidth = bandwidth;
    out.beta = Matrix::Zero(p, p);
    out.phi = Vector::Zero(p);

    Matrix gram = Matrix::Zero(p, p);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(stacked.transpose());
    gram = gram.selfadjointView<Eigen::Lower>();

    std::vector<char> ridge(static_cast<std::size_t>(p), 0);
#pragma omp parallel for schedule(static)
    for (Index t = 0; t < p; ++t) {
        const Index s0 = std::max<Index>(0, t - h);
        const Index width = t - s0;
        Vector resid = stacked.col(t);
        if (width > 0) {
            Matrix g = gram.block(s0, s0, width, width);
            const Vector rhs = gram.block(s0, t, width, 1);
            Eigen::SelfAdjointEigenSolver<Matrix> eig(g, Eigen::EigenvaluesOnly);
            const double lmax = eig.eigenvalues().maxCoeff();
            const double lmin = eig.eigenvalues().minCoeff();
            if (!(lmin > 0.0) || lmax / lmin > 1e12) {
                g.diagonal().array() += 1e-8 * g.trace() / static_cast<double>(width);
                ridge[static_cast<std::size_t>(t)] = 1;
            }
            const Vector b = g.ldlt().solve(rhs);
            out.beta.block(s0, t, width, 1) = b;
            resid.noalias() -= stacked.middleCols(s0, width) * b;
        }
        out.phi[t] = resid.squaredNorm() / samples;
    }
    for (Index t = 0; t < p; ++t) {
        if (ridge[static_cast<std::size_t>(t)]) {
            out.ridge_points.push_back(static_cast<std::size_t>(t));
        }
    }
    return out;
}

Matrix truncate_singular(const Matrix& a, double eta) {
    if (!(eta >= 1.0)) {
        fail(ErrorCode::InvalidArgument, "eta must be at least 1");
    }
    if (!a.allFinite()) {
        fail(ErrorCode::SvdFailure, "cannot decompose a non-finite matrix");
    }
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.info() != Eigen::Success) {
        fail(ErrorCode::SvdFailure, "singular value decomposition failed");
    }
    const Vector s = svd.singularValues().cwiseMin(eta).cwiseMax(1.0 / eta);
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

TemporalEstimate assemble_temporal(const Matrix& beta, const Vector& phi, double eta) {
    const Index p = beta.rows();
    if (beta.cols() != p || phi.size() != p) {
        fail(ErrorCode::ShapeMismatch, "beta must be p x p and phi of length p");
    }
    if (!(phi.array() > 0.0).all()) {
        fail(ErrorCode::NonPositiveDiagonal, "innovation variances must be positive");
    }
    if (!(eta >= 1.0)) {
        fail(ErrorCode::InvalidArgument, "eta must be at least 1");
    }
    const Matrix a = (Matrix::Identity(p, p) - beta).transpose();
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.info() != Eigen::Success) {
        fail(ErrorCode::SvdFailure, "singular value decomposition failed");
    }
    const Vector s = svd.singularValues().cwiseMin(eta).cwiseMax(1.0 / eta);
    const Matrix& u = svd.matrixU();
    const Matrix& v = svd.matrixV();
    const Matrix clipped = u * s.asDiagonal() * v.transpose();

    TemporalEstimate out;
    out.omega_bar = clipped.transpose() * phi.cwiseInverse().asDiagonal() * clipped;
    out.omega_bar = 0.5 * (out.omega_bar + out.omega_bar.transpose()).eval();

    // Sigma_bar = P^-1 Phi P^-T with P^-1 = V S^-1 U^T.
    const Matrix pinv = v * s.cwiseInverse().asDiagonal() * u.transpose();
    out.sigma_bar = pinv * phi.asDiagonal() * pinv.transpose();
    out.sigma_bar = 0.5 * (out.sigma_bar + out.sigma_bar.transpose()).eval();

    const double tr = out.sigma_bar.trace();
    if (!(tr > 0.0) || !std::isfinite(tr)) {
        fail(ErrorCode::SingularOmega, "temporal precision is singular");
    }
    const double pd = static_cast<double>(p);
    out.sigma = (pd / tr) * out.sigma_bar;
    out.omega = (tr / pd) * out.omega_bar;
    out.frob_sq_over_p = out.sigma.squaredNorm() / pd;
    return out;
}

std::vector<double> TemporalFit::frob_sq_over_p() const {
    std::vector<double> out;
    out.reserve(sessions.size());
    for (const auto& s : sessions) {
        out.push_back(s.estimate.frob_sq_over_p);
    }
    return out;
}

TemporalFit fit_temporal(const MultiSessionDataset& ds, const TemporalOptions& options) {
    const Dimensions& d = ds.dims();
    if (!options.alpha.empty() && options.alpha.size() != d.m()) {
        fail(ErrorCode::InvalidArgument, "need one alpha per session");
    }
    if (!options.bandwidth.empty() && options.bandwidth.size() != d.m()) {
        fail(ErrorCode::InvalidArgument, "need one bandwidth per session");
    }
    TemporalFit fit;
    fit.sessions.resize(d.m());
    for (std::size_t l = 0; l < d.m(); ++l) {
        const double alpha = options.alpha.empty() ? 1.0 : options.alpha[l];
        const std::size_t h = options.bandwidth.empty()
                                  ? default_bandwidth(d.n[l], d.q, alpha, d.p, options.rule)
                                  : options.bandwidth[l];
        auto& s = fit.sessions[l];
        s.eta = options.eta;
        s.regression = fit_banded_regression(stack_temporal(ds.session(l)), h);
        s.estimate = assemble_temporal(s.regression.beta, s.regression.phi, options.eta);
    }
    return fit;
}

} // namespace mggm::temporal
