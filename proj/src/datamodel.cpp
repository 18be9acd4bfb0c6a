#include "mggm/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace mggm {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateMask: return "DegenerateMask";
    case ErrorCode::NotSPD: return "NotSPD";
    case ErrorCode::NotPSD: return "NotPSD";
    case ErrorCode::ZeroVarianceColumn: return "ZeroVarianceColumn";
    case ErrorCode::NonPositiveDiagonal: return "NonPositiveDiagonal";
    case ErrorCode::SvdFailure: return "SvdFailure";
    case ErrorCode::SingularOmega: return "SingularOmega";
    case ErrorCode::EmptyEdgeSet: return "EmptyEdgeSet";
    case ErrorCode::BadAlpha: return "BadAlpha";
    case ErrorCode::NegativeC: return "NegativeC";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

Dimensions::Dimensions(std::vector<std::size_t> trials, std::size_t p_, std::size_t q_)
    : n(std::move(trials)), p(p_), q(q_) {}

std::size_t Dimensions::n0() const {
    if (n.empty()) {
        fail(ErrorCode::MalformedManifest, "dimensions have no sessions");
    }
    return *std::min_element(n.begin(), n.end());
}

void Dimensions::validate() const {
    if (n.empty()) {
        fail(ErrorCode::MalformedManifest, "at least one session is required");
    }
    for (std::size_t l = 0; l < n.size(); ++l) {
        if (n[l] == 0) {
            std::ostringstream os;
            os << "session " << l << " has no trials";
            fail(ErrorCode::MalformedManifest, os.str());
        }
    }
    if (p < 2 || q < 2) {
        fail(ErrorCode::MalformedManifest, "p and q must both be at least 2");
    }
}

void GroundTruth::validate(std::size_t p, double tol) const {
    for (std::size_t l = 0; l < spatial_cov.size(); ++l) {
        const Matrix& s = spatial_cov[l];
        const Matrix prod = s * spatial_precision.at(l);
        if ((prod - Matrix::Identity(s.rows(), s.cols())).cwiseAbs().maxCoeff() > tol) {
            fail(ErrorCode::InvalidArgument, "ground truth Sigma^S * Omega^S != I");
        }
        if (std::abs(temporal_cov.at(l).trace() - static_cast<double>(p)) > tol) {
            fail(ErrorCode::InvalidArgument, "ground truth tr(Sigma^T) != p");
        }
    }
}

MultiSessionDataset::MultiSessionDataset(std::vector<Session> sessions, Manifest manifest,
                                         std::optional<GroundTruth> truth)
    : sessions_(std::move(sessions)), manifest_(std::move(manifest)), truth_(std::move(truth)) {
    if (sessions_.empty()) {
        fail(ErrorCode::MalformedManifest, "dataset has no sessions");
    }
    if (sessions_.front().empty()) {
        fail(ErrorCode::MalformedManifest, "session 0 has no trials");
    }
    const auto p = static_cast<std::size_t>(sessions_.front().front().rows());
    const auto q = static_cast<std::size_t>(sessions_.front().front().cols());
    std::vector<std::size_t> n;
    n.reserve(sessions_.size());
    for (std::size_t l = 0; l < sessions_.size(); ++l) {
        n.push_back(sessions_[l].size());
        for (std::size_t k = 0; k < sessions_[l].size(); ++k) {
            const Trial& x = sessions_[l][k];
            if (static_cast<std::size_t>(x.rows()) != p || static_cast<std::size_t>(x.cols()) != q) {
                std::ostringstream os;
                os << "trial " << k << " of session " << l << " is " << x.rows() << "x"
                   << x.cols() << ", expected " << p << "x" << q;
                fail(ErrorCode::ShapeMismatch, os.str());
            }
            if (!x.allFinite()) {
                std::ostringstream os;
                os << "trial " << k << " of session " << l << " contains NaN or Inf";
                fail(ErrorCode::NonFiniteValue, os.str());
            }
        }
    }
    dims_ = Dimensions(std::move(n), p, q);
    dims_.validate();
}

MultiSessionDataset MultiSessionDataset::scaled(double c) const {
    std::vector<Session> out = sessions_;
    for (auto& s : out) {
        for (auto& x : s) {
            x *= c;
        }
    }
    return MultiSessionDataset(std::move(out), manifest_, truth_);
}

EdgeSet::EdgeSet(std::vector<Edge> edges, std::size_t q) : q_(q) {
    std::set<Edge> seen;
    edges_.reserve(edges.size());
    for (auto [i, j] : edges) {
        if (i == j) {
            fail(ErrorCode::InvalidArgument, "edge set contains a self-loop");
        }
        if (i >= q || j >= q) {
            fail(ErrorCode::InvalidArgument, "edge index out of range");
        }
        if (i > j) {
            std::swap(i, j);
        }
        if (!seen.insert({i, j}).second) {
            fail(ErrorCode::InvalidArgument, "edge set contains a duplicate pair");
        }
        edges_.emplace_back(i, j);
    }
}

EdgeSet EdgeSet::off_diagonal(std::size_t q) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t j = i + 1; j < q; ++j) {
            e.emplace_back(i, j);
        }
    }
    return EdgeSet(std::move(e), q);
}

EdgeSet EdgeSet::cross_block(std::size_t a0, std::size_t a1, std::size_t b0, std::size_t b1,
                             std::size_t q) {
    std::vector<Edge> e;
    for (std::size_t i = a0; i < a1; ++i) {
        for (std::size_t j = b0; j < b1; ++j) {
            e.emplace_back(i, j);
        }
    }
    return EdgeSet(std::move(e), q);
}

EdgeSet EdgeSet::zero_pairs(const BoolMatrix& support) {
    const auto q = static_cast<std::size_t>(support.rows());
    std::vector<Edge> e;
    for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t j = i + 1; j < q; ++j) {
            if (!support(i, j)) {
                e.emplace_back(i, j);
            }
        }
    }
    return EdgeSet(std::move(e), q);
}

EdgeSet EdgeSet::support_pairs(const BoolMatrix& support) {
    const auto q = static_cast<std::size_t>(support.rows());
    std::vector<Edge> e;
    for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t j = i + 1; j < q; ++j) {
            if (support(i, j)) {
                e.emplace_back(i, j);
            }
        }
    }
    return EdgeSet(std::move(e), q);
}

Matrix stack_spatial(const Session& session) {
    if (session.empty()) {
        fail(ErrorCode::ShapeMismatch, "cannot stack an empty session");
    }
    const Index p = session.front().rows();
    const Index q = session.front().cols();
    Matrix out(p * static_cast<Index>(session.size()), q);
    for (std::size_t k = 0; k < session.size(); ++k) {
        if (session[k].rows() != p || session[k].cols() != q) {
            fail(ErrorCode::ShapeMismatch, "trials in a session differ in shape");
        }
        out.middleRows(static_cast<Index>(k) * p, p) = session[k];
    }
    return out;
}

Matrix stack_temporal(const Session& session) {
    if (session.empty()) {
        fail(ErrorCode::ShapeMismatch, "cannot stack an empty session");
    }
    const Index p = session.front().rows();
    const Index q = session.front().cols();
    Matrix out(q * static_cast<Index>(session.size()), p);
    for (std::size_t k = 0; k < session.size(); ++k) {
        if (session[k].rows() != p || session[k].cols() != q) {
            fail(ErrorCode::ShapeMismatch, "trials in a session differ in shape");
        }
        out.middleRows(static_cast<Index>(k) * q, q) = session[k].transpose();
    }
    return out;
}

Matrix partial_correlation(const Matrix& precision) {
    const Vector d = precision.diagonal().cwiseSqrt().cwiseInverse();
    Matrix rho = -(d.asDiagonal() * precision * d.asDiagonal());
    rho.diagonal().setZero();
    return rho;
}

} // namespace mggm
