#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "reference_lasso.hpp"
#include "mggm/group_lasso.hpp"
#include "mggm/simulate.hpp"

using namespace mggm;
using namespace mggm::grouplasso;

namespace {

std::vector<Matrix> random_designs(std::size_t m, Index rows, Index q, std::uint64_t seed) {
    std::vector<Matrix> d;
    for (std::size_t l = 0; l < m; ++l) {
        Matrix x = testutil::random_matrix(rows, q, seed * 31 + l);
        // Correlate the columns a little so the problem is not trivially separable.
        x.col(1) += 0.5 * x.col(0);
        d.push_back(x);
    }
    return d;
}

} // namespace

TEST_CASE("default gamma formula") {
    // m n0 p q = e makes the log term 1: 0.5 * sqrt((1 + 1) / 1).
    const double q = std::exp(1.0);
    const double m = 1.0, n0 = 1.0, p = 1.0;
    CHECK(0.5 * std::sqrt((m + std::log(m * n0 * p * q)) / (n0 * p)) ==
          doctest::Approx(0.5 * std::sqrt(2.0)));
    const double g10 = default_gamma(Dimensions({10, 10, 10, 10, 10}, 50, 30));
    const double g40 = default_gamma(Dimensions({40, 40, 40, 40, 40}, 50, 30));
    CHECK(g40 < g10);
    CHECK(g10 == doctest::Approx(0.5 * std::sqrt((5.0 + std::log(5.0 * 10 * 50 * 30)) / 500.0)));
    MESSAGE("theory gamma for m=5, n0=10, p=50, q=30: " << g10);
}

TEST_CASE("single-column OLS") {
    Matrix x(2, 2);
    x << 2, 1, 2, 1;  // column 0 is the target (2,2), column 1 the predictor (1,1)
    const std::vector<Matrix> designs{x};
    const auto grams = SessionGrams::from_designs(designs);
    const auto sol = solve({&grams, 0, 0.0});
    CHECK(sol.coef(0, 1) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(sol.coef(0, 0) == 0.0);
}

TEST_CASE("penalty at the null threshold gives exactly zero") {
    const auto designs = random_designs(3, 30, 6, 1);
    const auto grams = SessionGrams::from_designs(designs);
    for (Index i = 0; i < 6; ++i) {
        const double g0 = null_gamma({&grams, i, 0.0});
        // Independent evaluation of the threshold from the designs.
        const double n0p = 30.0;
        double best = 0.0;
        for (Index j = 0; j < 6; ++j) {
            if (j == i) continue;
            double ss = 0.0;
            for (const Matrix& x : designs) {
                const double w = x.col(j).norm() / std::sqrt(30.0);
                const double v = x.col(j).dot(x.col(i)) / (w * n0p);
                ss += v * v;
            }
            best = std::max(best, std::sqrt(ss));
        }
        CHECK(g0 == doctest::Approx(best).epsilon(1e-12));
        const auto at = solve({&grams, i, g0 * (1.0 + 1e-12)});
        CHECK(at.coef.isZero(0.0));
        const auto below = solve({&grams, i, g0 * 0.9});
        CHECK_FALSE(below.coef.isZero(0.0));
    }
}

TEST_CASE("random instance is optimal against perturbations") {
    const auto designs = random_designs(2, 40, 5, 2);
    const auto grams = SessionGrams::from_designs(designs);
    const GroupLassoProblem problem{&grams, 2, 0.1};
    const auto sol = solve(problem);
    CHECK(sol.converged);
    CHECK(sol.kkt_residual <= 1e-6);
    CHECK(kkt_residual(problem, sol.coef) <= 1e-6);
    const double f = objective(problem, sol.coef);
    std::mt19937_64 eng(3);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> scale(-6.0, 0.0);
    for (int k = 0; k < 10000; ++k) {
        Matrix d = Matrix::Zero(2, 5);
        const double s = std::pow(10.0, scale(eng));
        for (Index l = 0; l < 2; ++l) {
            for (Index j = 0; j < 5; ++j) {
                if (j != 2) d(l, j) = s * z(eng);
            }
        }
        CHECK(f <= objective(problem, sol.coef + d) + 1e-14);
    }
}

TEST_CASE("objective history never increases") {
    const auto designs = random_designs(3, 25, 8, 4);
    const auto grams = SessionGrams::from_designs(designs);
    const auto sol = solve({&grams, 0, 0.05});
    REQUIRE(sol.objective_history.size() >= 2);
    for (std::size_t k = 1; k < sol.objective_history.size(); ++k) {
        CHECK(sol.objective_history[k] <= sol.objective_history[k - 1] + 1e-12);
    }
}

TEST_CASE("one session reduces to a standardized lasso") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Matrix x = testutil::random_matrix(20, 5, 100 + seed);
        const std::vector<Matrix> designs{x};
        const auto grams = SessionGrams::from_designs(designs);
        for (double gamma : {0.0, 0.05, 0.2}) {
            const auto sol = solve({&grams, 0, gamma}, {10000, 1e-12, 1e-9});
            Matrix preds(20, 4);
            preds << x.col(1), x.col(2), x.col(3), x.col(4);
            const Vector ref = testutil::reference_lasso(preds, x.col(0), gamma);
            for (Index j = 0; j < 4; ++j) {
                CHECK(std::abs(sol.coef(0, j + 1) - ref[j]) < 1e-6);
            }
        }
    }
}

TEST_CASE("zero-variance predictor is an error") {
    Matrix x = testutil::random_matrix(10, 3, 5);
    x.col(2).setZero();
    const std::vector<Matrix> designs{x};
    const auto grams = SessionGrams::from_designs(designs);
    CHECK(testutil::error_code_of([&] { solve({&grams, 0, 0.1}); }) ==
          ErrorCode::ZeroVarianceColumn);
}

TEST_CASE("solver output is invariant to trial order and deterministic") {
    const auto ds = testutil::random_dataset({4, 3}, 6, 5, 9);
    std::vector<Session> rev = ds.sessions();
    for (auto& s : rev) std::reverse(s.begin(), s.end());
    const MultiSessionDataset shuffled(rev);
    const auto g1 = SessionGrams::from_dataset(ds);
    const auto g2 = SessionGrams::from_dataset(shuffled);
    const std::vector<double> gammas(5, 0.05);
    const auto a = fit_all_nodes(g1, gammas);
    const auto b = fit_all_nodes(g2, gammas);
    const auto c = fit_all_nodes(g1, gammas);
    REQUIRE(a.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(a[i].ok);
        CHECK(a[i].solution.coef.col(static_cast<Index>(i)).isZero(0.0));
        CHECK((a[i].solution.coef - b[i].solution.coef).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(a[i].solution.coef == c[i].solution.coef);
    }
}

TEST_CASE("two-node dataset yields two solutions") {
    const auto ds = testutil::random_dataset({3}, 5, 2, 1);
    const auto fits = fit_all_nodes(SessionGrams::from_dataset(ds), {0.01, 0.01});
    REQUIRE(fits.size() == 2);
    CHECK(fits[0].solution.coef(0, 0) == 0.0);
    CHECK(fits[1].solution.coef(0, 1) == 0.0);
}

TEST_CASE("strong group-sparse signal is selected") {
    const std::size_t q = 10;
    int good = 0;
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
        std::vector<Matrix> precisions;
        std::vector<simulate::TemporalModel> temporal;
        for (int l = 0; l < 2; ++l) {
            Matrix omega = Matrix::Identity(q, q);
            for (Index i = 0; i + 1 < static_cast<Index>(q); ++i) {
                omega(i, i + 1) = omega(i + 1, i) = 0.4;
            }
            precisions.push_back(omega);
            temporal.push_back(simulate::gen_temporal_model(20, 1.0, 0.2));
        }
        const auto truth = simulate::make_truth(precisions, temporal);
        const auto ds = simulate::sample_dataset(truth, {50, 50}, rep);
        const auto grams = SessionGrams::from_dataset(ds);
        const auto fits = fit_all_nodes(grams, theory_gammas(grams, ds.dims()));
        bool superset = true;
        for (Index i = 0; i < static_cast<Index>(q); ++i) {
            const Matrix& coef = fits[static_cast<std::size_t>(i)].solution.coef;
            const Matrix w = column_weights(grams, i);
            for (Index j = 0; j < static_cast<Index>(q); ++j) {
                if (j != i && truth.support(i, j)) {
                    superset = superset && w.col(j).cwiseProduct(coef.col(j)).norm() > 1e-6;
                }
            }
        }
        good += superset ? 1 : 0;
    }
    CHECK(good >= 19);
}

TEST_CASE("cross-validation picks a multiplier from the grid") {
    simulate::SimulationSpec spec;
    spec.dims = Dimensions({6, 6}, 10, 8);
    spec.seed = 12;
    const auto ds = simulate::simulate_dataset(spec);
    const auto grid = log_grid(0.1, 10.0, 5);
    CHECK(grid.front() == doctest::Approx(0.1));
    CHECK(grid.back() == doctest::Approx(10.0));
    const auto cv = cross_validate(ds, grid, 3);
    CHECK(cv.losses.size() == grid.size());
    CHECK(std::find(grid.begin(), grid.end(), cv.best_multiplier) != grid.end());
    CHECK(cv.gammas.size() == 8);
}
