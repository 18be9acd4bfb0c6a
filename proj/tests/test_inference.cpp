#include <doctest.h>

#include "helpers.hpp"
#include "mggm/inference.hpp"

using namespace mggm;
using namespace mggm::inference;

namespace {

Matrix sym_rho(Index q, std::initializer_list<std::tuple<Index, Index, double>> entries) {
    Matrix r = -Matrix::Identity(q, q);
    for (const auto& [i, j, v] : entries) {
        r(i, j) = v;
        r(j, i) = v;
    }
    return r;
}

InferenceInput make_input(std::vector<std::size_t> n, std::size_t p, std::vector<Matrix> rho,
                          std::vector<double> frob) {
    const auto q = static_cast<std::size_t>(rho.front().rows());
    return InferenceInput{Dimensions(std::move(n), p, q), std::move(rho), std::move(frob)};
}

} // namespace

TEST_CASE("statistic from partial correlations") {
    const Dimensions d({4}, 25, 3);
    const auto zero = test_statistic({sym_rho(3, {})}, d, EdgeSet::off_diagonal(3));
    CHECK(zero.sup_norm == 0.0);
    CHECK(zero.values.isZero(0.0));

    const auto t = test_statistic({sym_rho(3, {{0, 1, 0.5}})}, d, EdgeSet({{0, 1}}, 3));
    CHECK(t.values[0] == doctest::Approx(5.0));
    CHECK(t.sup_norm == doctest::Approx(5.0));

    const Dimensions d2({4, 9}, 25, 3);
    const std::vector<Matrix> rho{sym_rho(3, {{0, 1, 0.3}, {1, 2, -0.2}}),
                                  sym_rho(3, {{0, 1, -0.4}, {1, 2, -0.1}})};
    const EdgeSet e = EdgeSet::off_diagonal(3);
    const auto plain = test_statistic(rho, d2, e);
    Matrix signs(2, 3);
    for (Index l = 0; l < 2; ++l) {
        for (Index k = 0; k < 3; ++k) {
            const auto [i, j] = e.edges()[static_cast<std::size_t>(k)];
            const double v = rho[static_cast<std::size_t>(l)](static_cast<Index>(i), static_cast<Index>(j));
            signs(l, k) = v < 0.0 ? -1.0 : 1.0;
        }
    }
    const auto addressed = test_statistic(rho, d2, e, signs);
    for (Index k = 0; k < 3; ++k) {
        CHECK(addressed.values[k] >= std::abs(plain.values[k]) - 1e-15);
    }
    CHECK(testutil::error_code_of([&] { test_statistic(rho, d2, e, Matrix::Constant(2, 3, 0.5)); }) ==
          ErrorCode::InvalidArgument);
    CHECK(statistic_scale(d2) == doctest::Approx((10.0 + 15.0) / std::sqrt(2.0)));
}

TEST_CASE("covariance entries from the closed form") {
    const Matrix rho = sym_rho(4, {});
    const EdgeSet disjoint({{0, 1}, {2, 3}}, 4);
    const auto s = compute_S({rho}, {1.0}, disjoint);
    CHECK(s.s(0, 1) == 0.0);
    CHECK(s.s(0, 0) == doctest::Approx(1.0));

    const Matrix half = sym_rho(4, {{0, 1, 0.5}});
    CHECK(compute_S({half}, {1.0}, EdgeSet({{0, 1}}, 4)).s(0, 0) == doctest::Approx(0.5625));
}

TEST_CASE("diagonal matches the closed form for random partial correlations") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::vector<Matrix> rho;
        std::vector<double> frob;
        for (int l = 0; l < 3; ++l) {
            Matrix r = 0.3 * testutil::random_matrix(6, 6, seed * 10 + l);
            r = 0.5 * (r + r.transpose()).eval();
            r.diagonal().setConstant(-1.0);
            rho.push_back(r);
            frob.push_back(1.0 + 0.1 * l);
        }
        const EdgeSet e = EdgeSet::off_diagonal(6);
        const auto s = compute_S(rho, frob, e);
        CHECK(s.s == s.s.transpose());
        for (std::size_t k = 0; k < e.size(); ++k) {
            const auto [i, j] = e.edges()[k];
            double closed = 0.0;
            for (int l = 0; l < 3; ++l) {
                const double v = rho[static_cast<std::size_t>(l)](static_cast<Index>(i), static_cast<Index>(j));
                closed += frob[static_cast<std::size_t>(l)] * (1 - v * v) * (1 - v * v) / 3.0;
            }
            CHECK(covariance_bracket(rho[0], i, j, i, j) ==
                  doctest::Approx((1 - std::pow(rho[0](static_cast<Index>(i), static_cast<Index>(j)), 2)) *
                                  (1 - std::pow(rho[0](static_cast<Index>(i), static_cast<Index>(j)), 2)))
                      .epsilon(1e-12));
            CHECK(diagonal_covariance(rho, frob, i, j) == doctest::Approx(closed).epsilon(1e-12));
            if (!s.psd_repaired) {
                CHECK(s.s(static_cast<Index>(k), static_cast<Index>(k)) == doctest::Approx(closed).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("indefinite plug-in covariance is clipped") {
    Matrix r = Matrix::Constant(6, 6, 0.9);
    r.diagonal().setConstant(-1.0);
    const auto s = compute_S({r}, {1.0}, EdgeSet::off_diagonal(6));
    const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(s.s).eigenvalues().minCoeff();
    CHECK(lmin >= -1e-10);
    if (s.min_eigenvalue < 0.0) {
        CHECK(s.psd_repaired);
    }
}

TEST_CASE("bootstrap quantile of a single standard normal") {
    const Matrix one = Matrix::Ones(1, 1);
    const auto b = bootstrap_quantile(one, 0.05, 20000, 1);
    CHECK(std::abs(b.quantile - 1.96) < 0.06);
    CHECK(bootstrap_quantile(one, 0.05, 20000, 1).quantile == b.quantile);
    CHECK(b.quantile_at(0.5 / 20000.0) == b.sorted.back());
    CHECK(b.quantile_at(1.0 / 20000.0) == b.sorted[19998]);
    CHECK(b.quantile_at(1.0 - 1e-9) == b.sorted.front());
    double prev = std::numeric_limits<double>::infinity();
    for (double a : {0.01, 0.02, 0.05, 0.1, 0.2, 0.5}) {
        CHECK(b.quantile_at(a) <= prev);
        prev = b.quantile_at(a);
    }
}

TEST_CASE("order statistic rank") {
    CHECK(order_statistic_rank(0.05, 1000) == 950);
    CHECK(order_statistic_rank(0.05, 1001) == 951);
    CHECK(order_statistic_rank(0.001, 1000) == 999);
    CHECK(order_statistic_rank(0.999999, 1000) == 1);
}

TEST_CASE("bootstrap input validation") {
    const Matrix one = Matrix::Ones(1, 1);
    CHECK(testutil::error_code_of([&] { bootstrap_quantile(one, 0.0, 1000, 1); }) == ErrorCode::BadAlpha);
    CHECK(testutil::error_code_of([&] { bootstrap_quantile(one, 1.0, 1000, 1); }) == ErrorCode::BadAlpha);
    Matrix neg(2, 2);
    neg << 1, 2, 2, 1;
    CHECK(testutil::error_code_of([&] { bootstrap_quantile(neg, 0.05, 1000, 1); }) == ErrorCode::NotPSD);
    CHECK(testutil::error_code_of([&] { bootstrap_quantile(one, 0.05, 50, 1); }) ==
          ErrorCode::InvalidArgument);
}

TEST_CASE("simultaneous and c-level tests agree at c = 0") {
    const auto input = make_input({5, 5}, 20, {sym_rho(4, {{0, 1, 0.3}, {2, 3, 0.1}}),
                                               sym_rho(4, {{0, 1, 0.2}, {1, 3, -0.05}})},
                                  {1.1, 1.2});
    const EdgeSet e = EdgeSet::off_diagonal(4);
    const auto plain = simultaneous_test(input, e, 0.05, 2000, 3);
    const auto c0 = c_level_test(input, e, 0.0, 0.05, 2000, 3);
    CHECK(plain.quantile == c0.quantile);
    CHECK(plain.reject == c0.reject);
    CHECK(plain.sup_norm == c0.sup_norm);
    CHECK(plain.reject == (plain.sup_norm > plain.quantile));
    CHECK(plain.p_value > 0.0);
    CHECK(plain.p_value <= 1.0);
    // Reject at level alpha iff the add-one p-value is below alpha, up to one rank.
    const double quantum = 1.0 / 2001.0;
    if (plain.reject) CHECK(plain.p_value <= 0.05 + quantum);
    else CHECK(plain.p_value >= 0.05 - quantum);

    const double w = statistic_scale(input.dims);
    const auto big = c_level_test(input, e, plain.sup_norm / w, 0.05, 2000, 3);
    CHECK_FALSE(big.reject);
    bool rejected_before = true;
    for (double c : {0.0, 0.05, 0.1, 0.2, 0.3}) {
        const bool r = c_level_test(input, e, c, 0.05, 2000, 3).reject;
        CHECK((rejected_before || !r));
        rejected_before = r;
    }
    CHECK(testutil::error_code_of([&] { c_level_test(input, e, -0.1, 0.05, 2000, 3); }) ==
          ErrorCode::NegativeC);
    CHECK(testutil::error_code_of([&] { simultaneous_test(input, EdgeSet({}, 4), 0.05, 2000, 3); }) ==
          ErrorCode::EmptyEdgeSet);
}

TEST_CASE("single-edge p-values") {
    // m = 1, n p = 100, rho = 0.1 gives T = 1; pick the norm so that T / sqrt(S) = 1.96.
    const double f = 1.0 / (1.96 * 1.96 * 0.99 * 0.99);
    const auto input = make_input({4}, 25, {sym_rho(3, {{0, 1, 0.1}})}, {f});
    const Matrix p = single_edge_pvalues(input);
    CHECK(std::abs(p(0, 1) - 0.05) < 1e-3);
    CHECK(p(0, 2) == 1.0);
    CHECK(p(1, 1) == 1.0);
    CHECK(p(1, 0) == p(0, 1));
    const auto zero = make_input({4}, 25, {sym_rho(3, {})}, {0.0});
    CHECK(testutil::error_code_of([&] { single_edge_pvalues(zero); }) == ErrorCode::ZeroVariance);
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
}
