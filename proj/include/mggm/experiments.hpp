#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mggm/simulate.hpp"
#include "mggm/spatial.hpp"
#include "mggm/temporal.hpp"

namespace mggm::experiments {

enum class EdgeSetKind { Off, Zero };
std::string to_string(EdgeSetKind kind);

struct CoverageSpec {
    simulate::SimulationSpec sim;
    std::size_t replications = 200;
    std::vector<double> levels{0.925, 0.95, 0.975};
    std::vector<EdgeSetKind> edge_sets{EdgeSetKind::Off, EdgeSetKind::Zero};
    std::size_t draws = 1000;
    std::uint64_t seed = 0;
    spatial::GammaSpec gamma = spatial::GammaSpec::theory();
    temporal::TemporalOptions temporal;

    void validate() const;
};

/// One replication's outcome for one edge set.
struct CoverageTrial {
    std::size_t replication = 0;
    EdgeSetKind edge_set = EdgeSetKind::Off;
    bool ok = true;
    std::string error;
    /// ||T_hat_E - T_E||_inf.
    double distance = 0.0;
    /// Bootstrap quantile per nominal level (same order as spec.levels).
    std::vector<double> quantiles;
};

struct CoverageRow {
    double level = 0.0;
    EdgeSetKind edge_set = EdgeSetKind::Off;
    std::size_t covered = 0;
    std::size_t completed = 0;
    double coverage = 0.0;
    /// Binomial standard error sqrt(c (1 - c) / R).
    double se = 0.0;
};

struct CoverageReport {
    std::vector<CoverageRow> rows;
    std::vector<CoverageTrial> trials;
    std::size_t failures = 0;

    const CoverageRow& row(double level, EdgeSetKind kind) const;
};

/// True T_E from the ground-truth partial correlations.
Vector true_statistic(const GroundTruth& truth, const Dimensions& dims, const EdgeSet& edges);

/// Simulate, fit both covariance factors, and check whether the true T_E
/// lies in the bootstrap confidence region, once per replication.
CoverageReport run_coverage(const CoverageSpec& spec);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

/// ROC over every distinct score (higher means "edge"), from (0,0) to (1,1).
std::vector<RocPoint> roc_curve(const std::vector<double>& scores, const std::vector<bool>& labels);
/// ROC at fixed p-value thresholds: an edge is called when p <= threshold.
std::vector<RocPoint> roc_at_thresholds(const std::vector<double>& pvalues,
                                        const std::vector<bool>& labels,
                                        const std::vector<double>& thresholds);
double auc(const std::vector<RocPoint>& curve);

struct RocSpec {
    simulate::SimulationSpec sim;
    std::size_t replications = 20;
    std::uint64_t seed = 0;
    spatial::GammaSpec gamma = spatial::GammaSpec::theory();
    temporal::TemporalOptions temporal;
    /// Sorted p-value thresholds; empty means every distinct score.
    std::vector<double> thresholds;

    void validate() const;
};

struct MethodRoc {
    std::string method;
    std::vector<std::vector<RocPoint>> curves;  // one per replication
    std::vector<double> aucs;
    double mean_auc = 0.0;
};

struct RocReport {
    std::vector<MethodRoc> methods;
    std::size_t failures = 0;

    const MethodRoc& method(const std::string& name) const;
};

/// Edge scores (single-edge |z|) of the multi-session estimator and of
/// per-session fits with m = 1. `per_session` combines the sessions by the
/// largest p-value (smallest |z|); `per_session_min_p` by the smallest.
struct EdgeScores {
    std::vector<double> group;
    std::vector<double> per_session;
    std::vector<double> per_session_min_p;
    std::vector<bool> labels;
};

EdgeScores score_edges(const MultiSessionDataset& ds, const spatial::GammaSpec& gamma,
                       const temporal::TemporalOptions& temporal);

RocReport run_roc(const RocSpec& spec);

} // namespace mggm::experiments
