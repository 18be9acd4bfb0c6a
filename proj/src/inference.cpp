#include "mggm/inference.hpp"

#include <algorithm>
#include <cmath>

#include "mggm/rng.hpp"

namespace mggm::inference {

void InferenceInput::validate() const {
    dims.validate();
    if (rho.size() != dims.m() || frob_sq_over_p.size() != dims.m()) {
        fail(ErrorCode::InvalidArgument, "inference input needs one rho and one norm per session");
    }
    for (std::size_t l = 0; l < rho.size(); ++l) {
        const auto q = static_cast<Index>(dims.q);
        if (rho[l].rows() != q || rho[l].cols() != q) {
            fail(ErrorCode::ShapeMismatch, "rho must be q x q");
        }
        if (!rho[l].allFinite() || !std::isfinite(frob_sq_over_p[l])) {
            fail(ErrorCode::NonFiniteValue, "inference input is not finite");
        }
    }
}

InferenceInput InferenceInput::from_fits(const Dimensions& dims, const spatial::SpatialFit& sfit,
                                         const temporal::TemporalFit& tfit) {
    InferenceInput in{dims, sfit.rho, tfit.frob_sq_over_p()};
    in.validate();
    return in;
}

double statistic_scale(const Dimensions& dims) {
    double w = 0.0;
    for (std::size_t nl : dims.n) {
        w += std::sqrt(static_cast<double>(nl * dims.p));
    }
    return w / std::sqrt(static_cast<double>(dims.m()));
}

TestStatistic test_statistic(const std::vector<Matrix>& rho, const Dimensions& dims,
                             const EdgeSet& edges, const std::optional<Matrix>& signs) {
    if (rho.size() != dims.m()) {
        fail(ErrorCode::InvalidArgument, "need one rho per session");
    }
    const auto ne = static_cast<Index>(edges.size());
    const auto m = static_cast<Index>(dims.m());
    if (signs) {
        if (signs->rows() != m || signs->cols() != ne) {
            fail(ErrorCode::ShapeMismatch, "sign matrix must be m x |E|");
        }
        if (!(signs->array().abs() == 1.0).all()) {
            fail(ErrorCode::InvalidArgument, "signs must be +1 or -1");
        }
    }
    TestStatistic out;
    out.edges = edges;
    out.values = Vector::Zero(ne);
    const double root_m = std::sqrt(static_cast<double>(dims.m()));
    for (Index e = 0; e < ne; ++e) {
        const auto [i, j] = edges.edges()[static_cast<std::size_t>(e)];
        double acc = 0.0;
        for (Index l = 0; l < m; ++l) {
            const auto lu = static_cast<std::size_t>(l);
            const double term = std::sqrt(static_cast<double>(dims.n[lu] * dims.p)) *
                                rho[lu](static_cast<Index>(i), static_cast<Index>(j));
            acc += signs ? (*signs)(l, e) * term : term;
        }
        out.values[e] = acc / root_m;
    }
    out.sup_norm = ne > 0 ? out.values.cwiseAbs().maxCoeff() : 0.0;
    return out;
}

double covariance_bracket(const Matrix& rho, std::size_t i1, std::size_t j1, std::size_t i2,
                          std::size_t j2) {
    auto r = [&](std::size_t a, std::size_t b) {
        return a == b ? 1.0 : -rho(static_cast<Index>(a), static_cast<Index>(b));
    };
    const double r_i1i2 = r(i1, i2);
    const double r_j1j2 = r(j1, j2);
    const double r_i1j2 = r(i1, j2);
    const double r_i2j1 = r(i2, j1);
    const double r1 = r(i1, j1);
    const double r2 = r(i2, j2);
    return r_i1i2 * r_j1j2 + r_i1j2 * r_i2j1 +
           0.5 * r1 * r2 * (r_i1i2 * r_i1i2 + r_j1j2 * r_j1j2 + r_i1j2 * r_i1j2 + r_i2j1 * r_i2j1) -
           r_i1i2 * r2 * r_i2j1 - r_i1i2 * r1 * r_i1j2 - r_j1j2 * r2 * r_i1j2 -
           r_j1j2 * r_i2j1 * r1;
}

double diagonal_covariance(const std::vector<Matrix>& rho, const std::vector<double>& frob_sq_over_p,
                           std::size_t i, std::size_t j) {
    double acc = 0.0;
    for (std::size_t l = 0; l < rho.size(); ++l) {
        const double v = rho[l](static_cast<Index>(i), static_cast<Index>(j));
        acc += frob_sq_over_p[l] * (1.0 - v * v) * (1.0 - v * v);
    }
    return acc / static_cast<double>(rho.size());
}

AsymptoticCovariance compute_S(const std::vector<Matrix>& rho,
                               const std::vector<double>& frob_sq_over_p, const EdgeSet& edges) {
    if (rho.empty() || rho.size() != frob_sq_over_p.size()) {
        fail(ErrorCode::InvalidArgument, "need one rho and one norm per session");
    }
    const auto ne = static_cast<Index>(edges.size());
    const auto& list = edges.edges();
    const double m = static_cast<double>(rho.size());
    AsymptoticCovariance out;
    out.s = Matrix::Zero(ne, ne);
#pragma omp parallel for schedule(dynamic)
    for (Index a = 0; a < ne; ++a) {
        const auto [i1, j1] = list[static_cast<std::size_t>(a)];
        for (Index b = 0; b <= a; ++b) {
            const auto [i2, j2] = list[static_cast<std::size_t>(b)];
            double acc = 0.0;
            for (std::size_t l = 0; l < rho.size(); ++l) {
                acc += frob_sq_over_p[l] * covariance_bracket(rho[l], i1, j1, i2, j2);
            }
            out.s(a, b) = acc / m;
            out.s(b, a) = acc / m;
        }
    }
    if (ne == 0) {
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(out.s);
    out.min_eigenvalue = eig.eigenvalues().minCoeff();
    if (out.min_eigenvalue < 0.0) {
        const Vector clipped = eig.eigenvalues().cwiseMax(0.0);
        out.s = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
        out.s = 0.5 * (out.s + out.s.transpose()).eval();
        out.psd_repaired = true;
    }
    return out;
}

std::size_t order_statistic_rank(double alpha, std::size_t draws) {
    const double target = (1.0 - alpha) * static_cast<double>(draws);
    // Guard against (1 - alpha) * B landing a hair above an integer.
    auto k = static_cast<std::size_t>(std::ceil(target - 1e-9 * std::max(1.0, target)));
    return std::clamp<std::size_t>(k, 1, draws);
}

double BootstrapResult::quantile_at(double alpha) const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        fail(ErrorCode::BadAlpha, "alpha must lie in (0, 1)");
    }
    return sorted[order_statistic_rank(alpha, sorted.size()) - 1];
}

BootstrapResult bootstrap_quantile(const Matrix& s, double alpha, std::size_t draws,
                                   std::uint64_t seed) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        fail(ErrorCode::BadAlpha, "alpha must lie in (0, 1)");
    }
    if (draws < 100) {
        fail(ErrorCode::InvalidArgument, "at least 100 bootstrap draws are required");
    }
    const Index d = s.rows();
    if (d == 0 || s.cols() != d) {
        fail(ErrorCode::ShapeMismatch, "covariance must be square and non-empty");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
    const Vector lambda = eig.eigenvalues();
    const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
    if (lambda.minCoeff() < -1e-10 * scale) {
        fail(ErrorCode::NotPSD, "bootstrap covariance is not positive semidefinite");
    }
    const Matrix root = eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();

    BootstrapResult out;
    out.sup_norms.resize(draws);
#pragma omp parallel for schedule(static)
    for (std::size_t b = 0; b < draws; ++b) {
        Rng rng(seed, {static_cast<std::uint64_t>(Stream::Bootstrap), b});
        Vector xi(d);
        for (Index k = 0; k < d; ++k) {
            xi[k] = rng.normal();
        }
        out.sup_norms[b] = (root * xi).cwiseAbs().maxCoeff();
    }
    out.sorted = out.sup_norms;
    std::sort(out.sorted.begin(), out.sorted.end());
    out.quantile = out.quantile_at(alpha);
    return out;
}

namespace {

TestResult run_test(const InferenceInput& input, const EdgeSet& edges, double c, double alpha,
                    std::size_t draws, std::uint64_t seed, const std::optional<Matrix>& signs) {
    input.validate();
    if (edges.empty()) {
        fail(ErrorCode::EmptyEdgeSet, "edge set is empty");
    }
    if (edges.q() != input.dims.q) {
        fail(ErrorCode::InvalidArgument, "edge set was built for a different number of nodes");
    }
    TestResult out;
    out.statistic = test_statistic(input.rho, input.dims, edges, signs);
    out.covariance = compute_S(input.rho, input.frob_sq_over_p, edges);
    const BootstrapResult boot = bootstrap_quantile(out.covariance.s, alpha, draws, seed);
    out.sup_norm = out.statistic.sup_norm;
    out.c = c;
    out.test_value = c == 0.0
                         ? out.sup_norm
                         : (out.statistic.values.cwiseAbs().array() - c * statistic_scale(input.dims))
                               .maxCoeff();
    out.quantile = boot.quantile;
    out.reject = out.test_value > out.quantile;
    const auto exceed = std::count_if(boot.sup_norms.begin(), boot.sup_norms.end(),
                                      [&](double z) { return z >= out.test_value; });
    out.p_value = (1.0 + static_cast<double>(exceed)) / (static_cast<double>(draws) + 1.0);
    out.draws = draws;
    out.alpha = alpha;
    out.seed = seed;
    out.bootstrap_sup_norms = boot.sup_norms;
    return out;
}

} // namespace

TestResult simultaneous_test(const InferenceInput& input, const EdgeSet& edges, double alpha,
                             std::size_t draws, std::uint64_t seed,
                             const std::optional<Matrix>& signs) {
    return run_test(input, edges, 0.0, alpha, draws, seed, signs);
}

TestResult c_level_test(const InferenceInput& input, const EdgeSet& edges, double c, double alpha,
                        std::size_t draws, std::uint64_t seed) {
    if (!(c >= 0.0)) {
        fail(ErrorCode::NegativeC, "c must be non-negative");
    }
    return run_test(input, edges, c, alpha, draws, seed, std::nullopt);
}

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

Matrix single_edge_zscores(const InferenceInput& input) {
    input.validate();
    const auto q = static_cast<Index>(input.dims.q);
    const EdgeSet all = EdgeSet::off_diagonal(input.dims.q);
    const TestStatistic stat = test_statistic(input.rho, input.dims, all);
    Matrix z = Matrix::Zero(q, q);
    for (std::size_t e = 0; e < all.size(); ++e) {
        const auto [i, j] = all.edges()[e];
        const double var = diagonal_covariance(input.rho, input.frob_sq_over_p, i, j);
        if (!(var > 0.0)) {
            fail(ErrorCode::ZeroVariance, "single-edge variance is zero");
        }
        const double v = std::abs(stat.values[static_cast<Index>(e)]) / std::sqrt(var);
        z(static_cast<Index>(i), static_cast<Index>(j)) = v;
        z(static_cast<Index>(j), static_cast<Index>(i)) = v;
    }
    return z;
}

Matrix single_edge_pvalues(const InferenceInput& input) {
    const Matrix z = single_edge_zscores(input);
    Matrix p = z.unaryExpr([](double v) { return std::erfc(v / std::sqrt(2.0)); });
    p.diagonal().setOnes();
    return p;
}

} // namespace mggm::inference
