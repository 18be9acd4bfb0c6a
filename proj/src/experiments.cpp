#include "mggm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mggm/inference.hpp"
#include "mggm/rng.hpp"

namespace mggm::experiments {

std::string to_string(EdgeSetKind kind) {
    return kind == EdgeSetKind::Off ? "E_off" : "E_zero";
}

void CoverageSpec::validate() const {
    sim.validate();
    if (replications < 1) {
        fail(ErrorCode::InvalidArgument, "coverage needs at least one replication");
    }
    for (double level : levels) {
        if (!(level > 0.0 && level < 1.0)) {
            fail(ErrorCode::InvalidArgument, "nominal levels must lie in (0, 1)");
        }
    }
    if (edge_sets.empty() || levels.empty()) {
        fail(ErrorCode::InvalidArgument, "coverage needs at least one level and one edge set");
    }
}

const CoverageRow& CoverageReport::row(double level, EdgeSetKind kind) const {
    for (const auto& r : rows) {
        if (r.edge_set == kind && std::abs(r.level - level) < 1e-12) {
            return r;
        }
    }
    fail(ErrorCode::InvalidArgument, "no coverage row for the requested level and edge set");
}

Vector true_statistic(const GroundTruth& truth, const Dimensions& dims, const EdgeSet& edges) {
    return inference::test_statistic(truth.partial_corr, dims, edges).values;
}

CoverageReport run_coverage(const CoverageSpec& spec) {
    spec.validate();
    const std::size_t kinds = spec.edge_sets.size();
    std::vector<CoverageTrial> trials(spec.replications * kinds);

#pragma omp parallel for schedule(dynamic)
    for (std::size_t r = 0; r < spec.replications; ++r) {
        simulate::SimulationSpec sim = spec.sim;
        sim.seed = derive_seed(spec.seed, {static_cast<std::uint64_t>(Stream::Replication), r});
        for (std::size_t k = 0; k < kinds; ++k) {
            trials[r * kinds + k].replication = r;
            trials[r * kinds + k].edge_set = spec.edge_sets[k];
        }
        try {
            const MultiSessionDataset ds = simulate::simulate_dataset(sim);
            const auto sfit = spatial::fit_spatial(ds, spec.gamma);
            const auto tfit = temporal::fit_temporal(ds, spec.temporal);
            const auto input = inference::InferenceInput::from_fits(ds.dims(), sfit, tfit);
            for (std::size_t k = 0; k < kinds; ++k) {
                CoverageTrial& trial = trials[r * kinds + k];
                const EdgeSet edges = spec.edge_sets[k] == EdgeSetKind::Off
                                          ? EdgeSet::off_diagonal(ds.dims().q)
                                          : EdgeSet::zero_pairs(ds.truth()->support);
                if (edges.empty()) {
                    trial.ok = false;
                    trial.error = "edge set is empty for this replication";
                    continue;
                }
                const Vector estimate = inference::test_statistic(input.rho, ds.dims(), edges).values;
                const Vector truth = true_statistic(*ds.truth(), ds.dims(), edges);
                trial.distance = (estimate - truth).cwiseAbs().maxCoeff();
                const auto cov = inference::compute_S(input.rho, input.frob_sq_over_p, edges);
                const auto boot = inference::bootstrap_quantile(
                    cov.s, 0.05, spec.draws,
                    derive_seed(sim.seed, {static_cast<std::uint64_t>(Stream::Bootstrap), k}));
                for (double level : spec.levels) {
                    trial.quantiles.push_back(boot.quantile_at(1.0 - level));
                }
            }
        } catch (const std::exception& e) {
            for (std::size_t k = 0; k < kinds; ++k) {
                trials[r * kinds + k].ok = false;
                trials[r * kinds + k].error = e.what();
            }
        }
    }

    CoverageReport report;
    for (std::size_t r = 0; r < spec.replications; ++r) {
        bool failed = false;
        for (std::size_t k = 0; k < kinds; ++k) {
            failed = failed || !trials[r * kinds + k].ok;
        }
        report.failures += failed ? 1 : 0;
    }
    for (std::size_t li = 0; li < spec.levels.size(); ++li) {
        for (std::size_t k = 0; k < kinds; ++k) {
            CoverageRow row;
            row.level = spec.levels[li];
            row.edge_set = spec.edge_sets[k];
            for (std::size_t r = 0; r < spec.replications; ++r) {
                const CoverageTrial& t = trials[r * kinds + k];
                if (!t.ok) {
                    continue;
                }
                ++row.completed;
                row.covered += t.distance <= t.quantiles[li] ? 1 : 0;
            }
            if (row.completed > 0) {
                const double c = static_cast<double>(row.covered) / static_cast<double>(row.completed);
                row.coverage = c;
                row.se = std::sqrt(c * (1.0 - c) / static_cast<double>(row.completed));
            }
            report.rows.push_back(row);
        }
    }
    report.trials = std::move(trials);
    return report;
}

std::vector<RocPoint> roc_curve(const std::vector<double>& scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size()) {
        fail(ErrorCode::InvalidArgument, "scores and labels differ in length");
    }
    const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), true));
    const auto neg = static_cast<double>(labels.size()) - pos;
    if (pos == 0.0 || neg == 0.0) {
        fail(ErrorCode::InvalidArgument, "ROC needs both positive and negative labels");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::vector<RocPoint> curve{{0.0, 0.0}};
    double tp = 0.0;
    double fp = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        (labels[order[k]] ? tp : fp) += 1.0;
        // Tied scores move together: one point per distinct threshold.
        if (k + 1 == order.size() || scores[order[k + 1]] != scores[order[k]]) {
            curve.push_back({fp / neg, tp / pos});
        }
    }
    return curve;
}

std::vector<RocPoint> roc_at_thresholds(const std::vector<double>& pvalues,
                                        const std::vector<bool>& labels,
                                        const std::vector<double>& thresholds) {
    if (pvalues.size() != labels.size()) {
        fail(ErrorCode::InvalidArgument, "p-values and labels differ in length");
    }
    if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
        fail(ErrorCode::InvalidArgument, "threshold grid must be sorted");
    }
    const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), true));
    const auto neg = static_cast<double>(labels.size()) - pos;
    if (pos == 0.0 || neg == 0.0) {
        fail(ErrorCode::InvalidArgument, "ROC needs both positive and negative labels");
    }
    std::vector<RocPoint> curve{{0.0, 0.0}};
    for (double thr : thresholds) {
        double tp = 0.0;
        double fp = 0.0;
        for (std::size_t k = 0; k < pvalues.size(); ++k) {
            if (pvalues[k] <= thr) {
                (labels[k] ? tp : fp) += 1.0;
            }
        }
        curve.push_back({fp / neg, tp / pos});
    }
    curve.push_back({1.0, 1.0});
    return curve;
}

double auc(const std::vector<RocPoint>& curve) {
    double area = 0.0;
    for (std::size_t k = 1; k < curve.size(); ++k) {
        area += (curve[k].fpr - curve[k - 1].fpr) * 0.5 * (curve[k].tpr + curve[k - 1].tpr);
    }
    return area;
}

void RocSpec::validate() const {
    sim.validate();
    if (replications < 1) {
        fail(ErrorCode::InvalidArgument, "ROC needs at least one replication");
    }
    if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
        fail(ErrorCode::InvalidArgument, "threshold grid must be sorted");
    }
}

const MethodRoc& RocReport::method(const std::string& name) const {
    for (const auto& m : methods) {
        if (m.method == name) {
            return m;
        }
    }
    fail(ErrorCode::InvalidArgument, "no ROC for method " + name);
}

EdgeScores score_edges(const MultiSessionDataset& ds, const spatial::GammaSpec& gamma,
                       const temporal::TemporalOptions& temporal) {
    if (!ds.truth()) {
        fail(ErrorCode::InvalidArgument, "edge scoring needs ground truth");
    }
    const Dimensions& d = ds.dims();
    const EdgeSet all = EdgeSet::off_diagonal(d.q);

    auto zscores = [&](const MultiSessionDataset& data, const temporal::TemporalOptions& topt) {
        const auto sfit = spatial::fit_spatial(data, gamma);
        const auto tfit = temporal::fit_temporal(data, topt);
        return inference::single_edge_zscores(
            inference::InferenceInput::from_fits(data.dims(), sfit, tfit));
    };

    EdgeScores out;
    const Matrix zg = zscores(ds, temporal);
    Matrix zmax = Matrix::Zero(zg.rows(), zg.cols());
    Matrix zmin = Matrix::Constant(zg.rows(), zg.cols(), std::numeric_limits<double>::infinity());
    for (std::size_t l = 0; l < d.m(); ++l) {
        temporal::TemporalOptions topt = temporal;
        if (!topt.alpha.empty()) {
            topt.alpha = {temporal.alpha[l]};
        }
        if (!topt.bandwidth.empty()) {
            topt.bandwidth = {temporal.bandwidth[l]};
        }
        const MultiSessionDataset single({ds.session(l)}, ds.manifest());
        const Matrix z = zscores(single, topt);
        zmax = zmax.cwiseMax(z);
        zmin = zmin.cwiseMin(z);
    }
    for (const auto& [i, j] : all.edges()) {
        const auto ii = static_cast<Index>(i);
        const auto jj = static_cast<Index>(j);
        out.group.push_back(zg(ii, jj));
        out.per_session.push_back(zmin(ii, jj));
        out.per_session_min_p.push_back(zmax(ii, jj));
        out.labels.push_back(ds.truth()->support(ii, jj));
    }
    return out;
}

RocReport run_roc(const RocSpec& spec) {
    spec.validate();
    const std::size_t reps = spec.replications;
    std::vector<EdgeScores> scores(reps);
    std::vector<char> ok(reps, 1);

#pragma omp parallel for schedule(dynamic)
    for (std::size_t r = 0; r < reps; ++r) {
        simulate::SimulationSpec sim = spec.sim;
        sim.seed = derive_seed(spec.seed, {static_cast<std::uint64_t>(Stream::Replication), r});
        try {
            scores[r] = score_edges(simulate::simulate_dataset(sim), spec.gamma, spec.temporal);
            const auto pos = std::count(scores[r].labels.begin(), scores[r].labels.end(), true);
            if (pos == 0 || pos == static_cast<long>(scores[r].labels.size())) {
                ok[r] = 0;
            }
        } catch (const std::exception&) {
            ok[r] = 0;
        }
    }

    RocReport report;
    report.methods.resize(3);
    report.methods[0].method = "group";
    report.methods[1].method = "per_session";
    report.methods[2].method = "per_session_min_p";
    auto to_p = [](std::vector<double> z) {
        for (double& v : z) {
            v = std::erfc(v / std::sqrt(2.0));
        }
        return z;
    };
    for (std::size_t r = 0; r < reps; ++r) {
        if (!ok[r]) {
            ++report.failures;
            continue;
        }
        const std::vector<double>* method_scores[] = {&scores[r].group, &scores[r].per_session,
                                                      &scores[r].per_session_min_p};
        for (std::size_t k = 0; k < 3; ++k) {
            const auto curve = spec.thresholds.empty()
                                   ? roc_curve(*method_scores[k], scores[r].labels)
                                   : roc_at_thresholds(to_p(*method_scores[k]), scores[r].labels,
                                                       spec.thresholds);
            report.methods[k].aucs.push_back(auc(curve));
            report.methods[k].curves.push_back(curve);
        }
    }
    for (auto& m : report.methods) {
        if (!m.aucs.empty()) {
            m.mean_auc = std::accumulate(m.aucs.begin(), m.aucs.end(), 0.0) /
                         static_cast<double>(m.aucs.size());
        }
    }
    return report;
}

} // namespace mggm::experiments
