#include "mggm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mggm::simulate {

std::string to_string(GraphKind kind) {
    switch (kind) {
    case GraphKind::Random: return "random";
    case GraphKind::Hub: return "hub";
    case GraphKind::Chain: return "chain";
    }
    return "unknown";
}

GraphKind graph_kind_from_string(const std::string& name) {
    if (name == "random") return GraphKind::Random;
    if (name == "hub") return GraphKind::Hub;
    if (name == "chain") return GraphKind::Chain;
    fail(ErrorCode::InvalidArgument, "unknown graph kind '" + name + "'");
}

void SimulationSpec::validate() const {
    dims.validate();
    if (edge_prob_override && (*edge_prob_override < 0.0 || *edge_prob_override > 1.0)) {
        fail(ErrorCode::InvalidArgument, "edge probability must lie in [0, 1]");
    }
    if (!(spd_floor > 0.0 && spd_floor < 1.0)) {
        fail(ErrorCode::InvalidArgument, "spd_floor must lie in (0, 1)");
    }
    if (!(session_decay > 0.0) || nonzero_high_base < nonzero_low) {
        fail(ErrorCode::InvalidArgument, "bad nonzero sampling range");
    }
    if (!temporal_alpha.empty() && temporal_alpha.size() != dims.m()) {
        fail(ErrorCode::InvalidArgument, "temporal_alpha needs one entry per session");
    }
    for (double a : temporal_alpha) {
        if (!(a > 0.0)) {
            fail(ErrorCode::InvalidArgument, "temporal_alpha entries must be positive");
        }
    }
    if (temporal_kappa5 < 0.0) {
        fail(ErrorCode::InvalidArgument, "temporal_kappa5 must be non-negative");
    }
}

double SimulationSpec::alpha(std::size_t l) const {
    return temporal_alpha.empty() ? 1.0 : temporal_alpha.at(l);
}

BoolMatrix gen_support(GraphKind kind, std::size_t q, std::uint64_t seed,
                       std::optional<double> edge_prob) {
    if (q < 2) {
        fail(ErrorCode::InvalidArgument, "q must be at least 2");
    }
    const auto qi = static_cast<Index>(q);
    BoolMatrix mask = BoolMatrix::Constant(qi, qi, false);
    mask.diagonal().setConstant(true);
    switch (kind) {
    case GraphKind::Random: {
        const double prob = edge_prob.value_or(std::sqrt(3.0 / static_cast<double>(q)));
        Rng rng(seed, {static_cast<std::uint64_t>(Stream::Support)});
        for (Index i = 0; i < qi; ++i) {
            for (Index j = i + 1; j < qi; ++j) {
                const bool e = rng.bernoulli(prob);
                mask(i, j) = e;
                mask(j, i) = e;
            }
        }
        break;
    }
    case GraphKind::Hub: {
        const Index groups = (qi + 19) / 20;
        // Contiguous blocks of near-equal size; the block's first node is the hub.
        for (Index g = 0; g < groups; ++g) {
            const Index begin = g * qi / groups;
            const Index end = (g + 1) * qi / groups;
            for (Index j = begin + 1; j < end; ++j) {
                mask(begin, j) = true;
                mask(j, begin) = true;
            }
        }
        break;
    }
    case GraphKind::Chain:
        for (Index i = 0; i + 1 < qi; ++i) {
            mask(i, i + 1) = true;
            mask(i + 1, i) = true;
        }
        break;
    }
    return mask;
}

Matrix gen_spatial_precision(const BoolMatrix& mask, std::size_t session,
                             const SimulationSpec& spec, std::uint64_t seed) {
    const Index q = mask.rows();
    if (mask.cols() != q) {
        fail(ErrorCode::ShapeMismatch, "support mask must be square");
    }
    const double hi = spec.nonzero_high_base / std::pow(spec.session_decay, static_cast<double>(session));
    Rng rng(seed, {static_cast<std::uint64_t>(Stream::SpatialPrecision), session});
    Matrix omega = Matrix::Identity(q, q);
    for (Index i = 0; i < q; ++i) {
        for (Index j = i + 1; j < q; ++j) {
            if (mask(i, j) != mask(j, i)) {
                fail(ErrorCode::InvalidArgument, "support mask must be symmetric");
            }
            if (mask(i, j)) {
                const double v = rng.uniform(spec.nonzero_low, hi);
                omega(i, j) = v;
                omega(j, i) = v;
            }
        }
    }

    // With unit diagonal, (Omega + cI)/(1 + c) has smallest eigenvalue
    // (lambda + c)/(1 + c); pick c so that this equals the floor.
    const double lambda_min = Eigen::SelfAdjointEigenSolver<Matrix>(omega, Eigen::EigenvaluesOnly)
                                  .eigenvalues()
                                  .minCoeff();
    const double floor = spec.spd_floor;
    if (lambda_min < floor) {
        const double c = (floor - lambda_min) / (1.0 - floor);
        if (1.0 + c > 100.0) {
            std::ostringstream os;
            os << "diagonal inflation " << 1.0 + c << " exceeds the sanity cap";
            fail(ErrorCode::DegenerateMask, os.str());
        }
        omega.diagonal().array() += c;
        omega /= 1.0 + c;
        omega.diagonal().setOnes();
    }
    return omega;
}

Matrix temporal_precision(const Matrix& beta, const Vector& phi) {
    const Index p = beta.rows();
    const Matrix a = Matrix::Identity(p, p) - beta;
    return a * phi.cwiseInverse().asDiagonal() * a.transpose();
}

TemporalModel gen_temporal_model(std::size_t p, double alpha, double kappa5) {
    if (p < 2) {
        fail(ErrorCode::InvalidArgument, "p must be at least 2");
    }
    const auto pi = static_cast<Index>(p);
    TemporalModel model;
    model.beta = Matrix::Zero(pi, pi);
    for (Index t = 1; t < pi; ++t) {
        for (Index s = 0; s < t; ++s) {
            model.beta(s, t) = kappa5 * std::pow(static_cast<double>(t - s), -alpha - 1.0);
        }
    }
    model.phi = Vector::Ones(pi);

    // Sigma = L^-1 Phi L^-T with L = (I - beta)^T unit lower triangular.
    const Matrix lower = (Matrix::Identity(pi, pi) - model.beta).transpose();
    Matrix linv = Matrix::Identity(pi, pi);
    lower.triangularView<Eigen::UnitLower>().solveInPlace(linv);
    Matrix sigma = linv * model.phi.asDiagonal() * linv.transpose();
    sigma = 0.5 * (sigma + sigma.transpose()).eval();

    const double scale = static_cast<double>(p) / sigma.trace();
    model.sigma = scale * sigma;
    model.phi *= scale;
    model.omega = temporal_precision(model.beta, model.phi);
    return model;
}

MatrixNormalSampler::MatrixNormalSampler(const Matrix& temporal_cov, const Matrix& spatial_cov) {
    Eigen::LLT<Matrix> lt(temporal_cov);
    Eigen::LLT<Matrix> ls(spatial_cov);
    if (lt.info() != Eigen::Success || ls.info() != Eigen::Success) {
        fail(ErrorCode::NotSPD, "matrix-normal covariance factors must be SPD");
    }
    temporal_factor_ = lt.matrixL();
    spatial_factor_t_ = ls.matrixL().transpose();
}

Trial MatrixNormalSampler::draw(Rng& rng) const {
    const Matrix z = rng.normal_matrix(temporal_factor_.rows(), spatial_factor_t_.rows());
    return temporal_factor_ * z * spatial_factor_t_;
}

Trial sample_matrix_normal(const Matrix& temporal_cov, const Matrix& spatial_cov,
                           std::uint64_t seed) {
    MatrixNormalSampler sampler(temporal_cov, spatial_cov);
    Rng rng(seed);
    return sampler.draw(rng);
}

GroundTruth make_truth(const std::vector<Matrix>& spatial_precision,
                       const std::vector<TemporalModel>& temporal) {
    if (spatial_precision.empty() || spatial_precision.size() != temporal.size()) {
        fail(ErrorCode::InvalidArgument, "need one spatial and one temporal model per session");
    }
    GroundTruth t;
    const Index q = spatial_precision.front().rows();
    t.support = BoolMatrix::Constant(q, q, false);
    t.support.diagonal().setConstant(true);
    for (std::size_t l = 0; l < spatial_precision.size(); ++l) {
        const Matrix& om = spatial_precision[l];
        Eigen::LLT<Matrix> llt(om);
        if (llt.info() != Eigen::Success) {
            fail(ErrorCode::NotSPD, "spatial precision is not SPD");
        }
        Matrix cov = llt.solve(Matrix::Identity(q, q));
        cov = 0.5 * (cov + cov.transpose()).eval();
        t.spatial_precision.push_back(om);
        t.spatial_cov.push_back(std::move(cov));
        t.partial_corr.push_back(partial_correlation(om));
        t.temporal_cov.push_back(temporal[l].sigma);
        t.temporal_beta.push_back(temporal[l].beta);
        t.temporal_phi.push_back(temporal[l].phi);
        for (Index i = 0; i < q; ++i) {
            for (Index j = 0; j < q; ++j) {
                if (i != j && om(i, j) != 0.0) {
                    t.support(i, j) = true;
                }
            }
        }
    }
    return t;
}

GroundTruth simulate_truth(const SimulationSpec& spec) {
    spec.validate();
    const BoolMatrix mask = gen_support(spec.kind, spec.dims.q, spec.seed, spec.edge_prob_override);
    std::vector<Matrix> precisions;
    std::vector<TemporalModel> temporal;
    for (std::size_t l = 0; l < spec.dims.m(); ++l) {
        precisions.push_back(gen_spatial_precision(mask, l, spec, spec.seed));
        temporal.push_back(gen_temporal_model(spec.dims.p, spec.alpha(l), spec.temporal_kappa5));
    }
    GroundTruth truth = make_truth(precisions, temporal);
    // Keep the designed mask even if a uniform draw landed exactly on zero.
    truth.support = mask;
    return truth;
}

MultiSessionDataset sample_dataset(const GroundTruth& truth, const std::vector<std::size_t>& n,
                                   std::uint64_t seed, Manifest manifest) {
    const std::size_t m = truth.spatial_cov.size();
    if (n.size() != m) {
        fail(ErrorCode::InvalidArgument, "trial counts must match the number of sessions");
    }
    std::vector<MatrixNormalSampler> samplers;
    std::vector<std::pair<std::size_t, std::size_t>> jobs;
    for (std::size_t l = 0; l < m; ++l) {
        samplers.emplace_back(truth.temporal_cov[l], truth.spatial_cov[l]);
        for (std::size_t k = 0; k < n[l]; ++k) {
            jobs.emplace_back(l, k);
        }
    }
    std::vector<Session> sessions(m);
    for (std::size_t l = 0; l < m; ++l) {
        sessions[l].resize(n[l]);
    }
#pragma omp parallel for schedule(static)
    for (std::size_t idx = 0; idx < jobs.size(); ++idx) {
        const auto [l, k] = jobs[idx];
        Rng rng(seed, {static_cast<std::uint64_t>(Stream::Trials), l, k});
        sessions[l][k] = samplers[l].draw(rng);
    }
    if (!manifest.seed) {
        manifest.seed = seed;
    }
    return MultiSessionDataset(std::move(sessions), std::move(manifest), truth);
}

MultiSessionDataset simulate_dataset(const SimulationSpec& spec) {
    GroundTruth truth = simulate_truth(spec);
    Manifest manifest;
    manifest.name = "simulated-" + to_string(spec.kind);
    manifest.seed = spec.seed;
    std::ostringstream prov;
    prov << "simulate kind=" << to_string(spec.kind) << " m=" << spec.dims.m()
         << " p=" << spec.dims.p << " q=" << spec.dims.q << " seed=" << spec.seed;
    manifest.provenance = prov.str();
    return sample_dataset(truth, spec.dims.n, spec.seed, std::move(manifest));
}

} // namespace mggm::simulate
