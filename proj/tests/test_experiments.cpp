#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "mggm/experiments.hpp"
#include "mggm/inference.hpp"

using namespace mggm;
using namespace mggm::experiments;

namespace {

CoverageSpec small_coverage(std::size_t reps) {
    CoverageSpec spec;
    spec.sim.dims = Dimensions({5, 5}, 12, 8);
    spec.sim.edge_prob_override = 0.3;
    spec.replications = reps;
    spec.draws = 500;
    spec.seed = 17;
    return spec;
}

} // namespace

TEST_CASE("perfect separation has unit AUC") {
    const std::vector<double> scores{9, 8, 7, 1, 0.5, 0.1};
    const std::vector<bool> labels{true, true, true, false, false, false};
    const auto curve = roc_curve(scores, labels);
    CHECK(auc(curve) == doctest::Approx(1.0));
    CHECK(curve.front().fpr == 0.0);
    CHECK(curve.back().tpr == 1.0);
    CHECK(curve.back().fpr == 1.0);
}

TEST_CASE("tied scores form one step") {
    const std::vector<double> scores{1, 1, 1, 1};
    const std::vector<bool> labels{true, false, true, false};
    const auto curve = roc_curve(scores, labels);
    CHECK(curve.size() == 2);
    CHECK(auc(curve) == doctest::Approx(0.5));
}

TEST_CASE("random scores sit at chance") {
    std::mt19937_64 eng(5);
    std::uniform_real_distribution<double> u;
    double mean = 0.0;
    for (int seed = 0; seed < 20; ++seed) {
        std::vector<double> scores;
        std::vector<bool> labels;
        for (int k = 0; k < 200; ++k) {
            scores.push_back(u(eng));
            labels.push_back(k % 3 == 0);
        }
        mean += auc(roc_curve(scores, labels)) / 20.0;
    }
    CHECK(std::abs(mean - 0.5) < 0.1);
}

TEST_CASE("threshold ROC counts calls at each level") {
    const std::vector<double> p{0.001, 0.02, 0.3, 0.04, 0.9};
    const std::vector<bool> labels{true, true, true, false, false};
    const auto curve = roc_at_thresholds(p, labels, {0.01, 0.05, 0.5});
    REQUIRE(curve.size() == 5);
    CHECK(curve[1].tpr == doctest::Approx(1.0 / 3.0));
    CHECK(curve[2].tpr == doctest::Approx(2.0 / 3.0));
    CHECK(curve[2].fpr == doctest::Approx(0.5));
    CHECK(curve[3].tpr == doctest::Approx(1.0));
}

TEST_CASE("ROC inputs are validated") {
    CHECK_THROWS_AS(roc_curve({1.0, 2.0}, {true, true}), Error);
    CHECK_THROWS_AS(roc_curve({1.0}, {true, false}), Error);
    CHECK_THROWS_AS(roc_at_thresholds({0.1, 0.2}, {true, false}, {0.5, 0.1}), Error);
}

TEST_CASE("one replication covers or not") {
    const auto rep = run_coverage(small_coverage(1));
    for (const auto& row : rep.rows) {
        CHECK((row.coverage == 0.0 || row.coverage == 1.0));
    }
}

TEST_CASE("coverage is deterministic and monotone in the level") {
    const auto a = run_coverage(small_coverage(20));
    const auto b = run_coverage(small_coverage(20));
    REQUIRE(a.rows.size() == 6);
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
        CHECK(a.rows[k].covered == b.rows[k].covered);
    }
    for (auto kind : {EdgeSetKind::Off, EdgeSetKind::Zero}) {
        CHECK(a.row(0.925, kind).covered <= a.row(0.95, kind).covered);
        CHECK(a.row(0.95, kind).covered <= a.row(0.975, kind).covered);
        const auto& r = a.row(0.95, kind);
        CHECK(r.se == doctest::Approx(std::sqrt(r.coverage * (1 - r.coverage) / r.completed)));
    }
}

TEST_CASE("doubling the bootstrap size barely moves coverage") {
    auto spec = small_coverage(40);
    const auto a = run_coverage(spec);
    spec.draws = 1000;
    const auto b = run_coverage(spec);
    for (auto kind : {EdgeSetKind::Off, EdgeSetKind::Zero}) {
        const auto& ra = a.row(0.95, kind);
        const auto& rb = b.row(0.95, kind);
        CHECK(std::abs(ra.coverage - rb.coverage) <= ra.se + 1e-12);
    }
}

TEST_CASE("per-session scores combine sessions by the largest and smallest p-value") {
    simulate::SimulationSpec sim;
    sim.dims = Dimensions({4, 4, 4}, 10, 6);
    sim.edge_prob_override = 0.4;
    sim.seed = 12;
    const auto ds = simulate::simulate_dataset(sim);
    const auto scores = score_edges(ds, spatial::GammaSpec::theory(), {});
    std::vector<Matrix> z;
    for (std::size_t l = 0; l < 3; ++l) {
        const MultiSessionDataset one({ds.session(l)}, ds.manifest());
        z.push_back(inference::single_edge_zscores(inference::InferenceInput::from_fits(
            one.dims(), spatial::fit_spatial(one), temporal::fit_temporal(one))));
    }
    const EdgeSet all = EdgeSet::off_diagonal(6);
    REQUIRE(scores.per_session.size() == all.size());
    for (std::size_t k = 0; k < all.size(); ++k) {
        const auto i = static_cast<Index>(all.edges()[k].first);
        const auto j = static_cast<Index>(all.edges()[k].second);
        const double lo = std::min({z[0](i, j), z[1](i, j), z[2](i, j)});
        const double hi = std::max({z[0](i, j), z[1](i, j), z[2](i, j)});
        CHECK(scores.per_session[k] == lo);
        CHECK(scores.per_session_min_p[k] == hi);
    }
}

TEST_CASE("ROC report has every method") {
    RocSpec spec;
    spec.sim.dims = Dimensions({4, 4}, 10, 10);
    spec.sim.edge_prob_override = 0.3;
    spec.replications = 2;
    spec.seed = 3;
    const auto rep = run_roc(spec);
    CHECK(rep.failures == 0);
    CHECK(rep.method("group").aucs.size() == 2);
    CHECK(rep.method("per_session").aucs.size() == 2);
    CHECK(rep.method("per_session_min_p").aucs.size() == 2);
    for (double v : rep.method("group").aucs) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}
