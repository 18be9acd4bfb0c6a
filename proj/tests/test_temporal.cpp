#include <doctest.h>

#include <algorithm>

#include "helpers.hpp"
#include "mggm/simulate.hpp"
#include "mggm/temporal.hpp"

using namespace mggm;
using namespace mggm::temporal;

namespace {

GroundTruth temporal_only_truth(const simulate::TemporalModel& model, std::size_t q) {
    return simulate::make_truth({Matrix::Identity(static_cast<Index>(q), static_cast<Index>(q))},
                                {model});
}

simulate::TemporalModel ar1_model(std::size_t p, double a) {
    simulate::TemporalModel m;
    const auto pi = static_cast<Index>(p);
    m.beta = Matrix::Zero(pi, pi);
    for (Index t = 1; t < pi; ++t) m.beta(t - 1, t) = a;
    m.phi = Vector::Ones(pi);
    m.omega = simulate::temporal_precision(m.beta, m.phi);
    m.sigma = m.omega.inverse();
    return m;
}

Vector singular_values(const Matrix& a) {
    return Eigen::JacobiSVD<Matrix>(a).singularValues();
}

} // namespace

TEST_CASE("bandwidth rules") {
    CHECK(default_bandwidth(1, 1024, 1.0, 100) == 32);
    CHECK(default_bandwidth(1, 1024, 1.0, 5) == 4);
    CHECK(default_bandwidth(1, 1024, 1e9, 100) == 1);
    std::size_t prev = 1000;
    for (double alpha : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const std::size_t h = default_bandwidth(10, 30, alpha, 1000);
        CHECK(h <= prev);
        prev = h;
    }
    CHECK(default_bandwidth(10, 30, 1.0, 50, BandwidthRule::ProofRate) == 4);
    CHECK(default_bandwidth(10, 30, 1.0, 50, BandwidthRule::Rate) == 17);
}

TEST_CASE("first time point has an empty band") {
    const auto ds = testutil::random_dataset({3}, 6, 4, 2);
    const Matrix stacked = stack_temporal(ds.session(0));
    const auto fit = fit_banded_regression(stacked, 3);
    CHECK(fit.beta.col(0).isZero(0.0));
    double ss = 0.0;
    for (const auto& x : ds.session(0)) ss += x.row(0).squaredNorm();
    CHECK(fit.phi[0] == doctest::Approx(ss / 12.0).epsilon(1e-14));
    for (Index s = 0; s < 6; ++s) {
        for (Index t = 0; t < 6; ++t) {
            if (s >= t || s < t - 3) CHECK(fit.beta(s, t) == 0.0);
        }
    }
    CHECK(testutil::error_code_of([&] { fit_banded_regression(stacked, 6); }) ==
          ErrorCode::InvalidArgument);
}

TEST_CASE("band coefficients match an unrestricted least-squares solve") {
    const auto ds = testutil::random_dataset({5}, 7, 6, 3);
    const Matrix x = stack_temporal(ds.session(0));
    const auto fit = fit_banded_regression(x, 2);
    for (Index t = 2; t < 7; ++t) {
        const Matrix design = x.middleCols(t - 2, 2);
        const Vector b = design.colPivHouseholderQr().solve(x.col(t));
        CHECK((fit.beta.block(t - 2, t, 2, 1) - b).cwiseAbs().maxCoeff() < 1e-10);
        const double resid = (x.col(t) - design * b).squaredNorm() / static_cast<double>(x.rows());
        CHECK(fit.phi[t] == doctest::Approx(resid).epsilon(1e-10));
    }
}

TEST_CASE("AR(1) coefficient is recovered") {
    const auto model = ar1_model(12, 0.5);
    const auto truth = temporal_only_truth(model, 40);
    Vector mean = Vector::Zero(12);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto ds = simulate::sample_dataset(truth, {50}, seed);
        const auto fit = fit_banded_regression(stack_temporal(ds.session(0)), 3);
        for (Index t = 1; t < 12; ++t) mean[t] += fit.beta(t - 1, t) / 10.0;
    }
    for (Index t = 1; t < 12; ++t) {
        CHECK(std::abs(mean[t] - 0.5) < 0.05);
    }
}

TEST_CASE("white noise innovations have unit variance") {
    simulate::TemporalModel white = ar1_model(8, 0.0);
    const auto truth = temporal_only_truth(white, 10);
    const int reps = 200;
    std::vector<Vector> draws;
    for (int r = 0; r < reps; ++r) {
        const auto ds = simulate::sample_dataset(truth, {5}, 300 + r);
        draws.push_back(fit_banded_regression(stack_temporal(ds.session(0)), 2).phi);
    }
    for (Index t = 0; t < 8; ++t) {
        double mean = 0.0;
        for (const auto& d : draws) mean += d[t] / reps;
        double var = 0.0;
        for (const auto& d : draws) var += (d[t] - mean) * (d[t] - mean) / (reps - 1);
        // Residual variance divides by the sample count, so it sits slightly
        // below 1 by a factor (N - width)/N; compare to that expectation.
        const double width = static_cast<double>(std::min<Index>(t, 2));
        const double expect = (50.0 - width) / 50.0;
        CHECK(std::abs(mean - expect) < 3.0 * std::sqrt(var / reps));
    }
}

TEST_CASE("singular value truncation") {
    Matrix a(2, 2);
    a << 3, 0, 0, 0.1;
    const Matrix t = truncate_singular(a, 2.0);
    CHECK((t - Vector(Eigen::Vector2d(2.0, 0.5)).asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() <
          1e-12);

    const Matrix q = testutil::random_matrix(5, 5, 1).householderQr().householderQ();
    CHECK((truncate_singular(q, 1.0) - q).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((truncate_singular(q, 3.0) - q).cwiseAbs().maxCoeff() < 1e-10);

    const Matrix r = 3.0 * testutil::random_matrix(6, 6, 2);
    const Vector s = singular_values(truncate_singular(r, 1.5));
    CHECK(s.maxCoeff() <= 1.5 + 1e-9);
    CHECK(s.minCoeff() >= 1.0 / 1.5 - 1e-9);

    CHECK(testutil::error_code_of([&] { truncate_singular(a, 0.5); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("assembly on trivial inputs") {
    const auto est = assemble_temporal(Matrix::Zero(4, 4), Vector::Ones(4), 1.0);
    CHECK(est.sigma.isIdentity(1e-12));
    CHECK(est.omega.isIdentity(1e-12));
    CHECK(est.frob_sq_over_p == doctest::Approx(1.0));
}

TEST_CASE("assembly keeps trace p and inverse pairs on random inputs") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Matrix beta = 0.3 * testutil::random_matrix(9, 9, seed);
        beta = beta.triangularView<Eigen::StrictlyUpper>();
        const Vector phi = testutil::random_matrix(9, 1, seed + 50).col(0).cwiseAbs().array() + 0.2;
        const auto est = assemble_temporal(beta, phi, 10.0);
        CHECK(est.sigma.trace() == doctest::Approx(9.0).epsilon(1e-12));
        CHECK((est.sigma * est.omega - Matrix::Identity(9, 9)).cwiseAbs().maxCoeff() < 1e-6);
        CHECK(est.frob_sq_over_p == doctest::Approx(est.sigma.squaredNorm() / 9.0));
        // Clipping keeps Omega_bar bounded below by eta^-2 / max(phi).
        const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(est.omega_bar).eigenvalues().minCoeff();
        CHECK(lmin >= 1e-2 / phi.maxCoeff() - 1e-10);
    }
}

TEST_CASE("the generating model is a fixed point of assembly") {
    const auto model = simulate::gen_temporal_model(15, 1.0, 0.2);
    const auto est = assemble_temporal(model.beta, model.phi, 10.0);
    CHECK((est.sigma - model.sigma).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("fit_temporal is per session and deterministic") {
    simulate::SimulationSpec spec;
    spec.dims = Dimensions({4, 6}, 12, 10);
    spec.temporal_alpha = {1.0, 2.0};
    spec.seed = 9;
    const auto ds = simulate::simulate_dataset(spec);
    const auto fit = fit_temporal(ds);
    REQUIRE(fit.sessions.size() == 2);
    CHECK(fit.sessions[0].regression.bandwidth == default_bandwidth(4, 10, 1.0, 12));
    const MultiSessionDataset swapped({ds.session(1), ds.session(0)});
    TemporalOptions opt;
    opt.alpha = {1.0, 1.0};
    opt.bandwidth = {fit.sessions[1].regression.bandwidth, fit.sessions[0].regression.bandwidth};
    const auto back = fit_temporal(swapped, opt);
    CHECK(back.sessions[0].estimate.sigma == fit.sessions[1].estimate.sigma);
    CHECK(back.sessions[1].estimate.sigma == fit.sessions[0].estimate.sigma);
    CHECK(fit_temporal(ds).frob_sq_over_p() == fit.frob_sq_over_p());
}

TEST_CASE("Frobenius error shrinks with more trials") {
    const auto model = simulate::gen_temporal_model(30, 1.0, 0.2);
    const auto truth = temporal_only_truth(model, 50);
    const double target = model.sigma.squaredNorm() / 30.0;
    std::vector<double> medians;
    for (std::size_t n : {5, 10, 20, 40}) {
        std::vector<double> err;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto ds = simulate::sample_dataset(truth, {n}, 900 + seed);
            err.push_back(std::abs(fit_temporal(ds).frob_sq_over_p()[0] - target));
        }
        std::sort(err.begin(), err.end());
        medians.push_back(0.5 * (err[4] + err[5]));
    }
    MESSAGE("median errors: " << medians[0] << " " << medians[1] << " " << medians[2] << " "
                              << medians[3]);
    for (std::size_t k = 1; k < medians.size(); ++k) {
        CHECK(medians[k] < medians[k - 1]);
    }
}
