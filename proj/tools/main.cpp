#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli_config.hpp"
#include "mggm/experiments.hpp"
#include "mggm/inference.hpp"
#include "mggm/io.hpp"
#include "mggm/simulate.hpp"
#include "mggm/spatial.hpp"
#include "mggm/temporal.hpp"

using namespace mggm;
using namespace mggm::cli;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Option tables

std::vector<OptionSpec> sim_options() {
    return {
        {"kind", OptType::Text, "random", "graph kind: random | hub | chain"},
        {"n", OptType::IntList, json::array({10}), "trials per session (one value or m values)"},
        {"m", OptType::Int, nullptr, "number of sessions (repeats a single n)"},
        {"p", OptType::Int, 50, "time points per trial"},
        {"q", OptType::Int, 30, "spatial nodes"},
        {"edge_prob", OptType::Real, nullptr, "random-graph edge probability (default sqrt(3/q))"},
        {"low", OptType::Real, 0.0, "lower end of the nonzero range"},
        {"high", OptType::Real, 0.3, "upper end of the nonzero range for session 0"},
        {"decay", OptType::Real, 2.0, "per-session divisor of the upper end"},
        {"kappa5", OptType::Real, 0.2, "temporal coefficient scale"},
        {"temporal_alpha", OptType::RealList, nullptr, "temporal decay exponent per session"},
        {"spd_floor", OptType::Real, 0.1, "smallest eigenvalue of each spatial precision"},
    };
}

std::vector<OptionSpec> fit_options() {
    return {
        {"gamma", OptType::Text, "theory", "penalty: theory | cv | <number> | <q comma-separated numbers>"},
        {"c0", OptType::Real, 0.5, "theory penalty constant"},
        {"cv_folds", OptType::Int, 5, "folds for --gamma cv"},
        {"max_iter", OptType::Int, 10000, "group-lasso sweeps"},
        {"tol", OptType::Real, 1e-8, "group-lasso coefficient tolerance"},
        {"eta", OptType::Real, 10.0, "singular-value truncation level"},
        {"bandwidth", OptType::IntList, nullptr, "temporal bandwidth per session"},
        {"bandwidth_rule", OptType::Text, "rate", "default bandwidth: rate | proof"},
    };
}

std::vector<OptionSpec> temporal_only_options() {
    return {
        {"eta", OptType::Real, 10.0, "singular-value truncation level"},
        {"temporal_alpha", OptType::RealList, nullptr, "temporal decay exponent per session"},
        {"bandwidth", OptType::IntList, nullptr, "temporal bandwidth per session"},
        {"bandwidth_rule", OptType::Text, "rate", "default bandwidth: rate | proof"},
    };
}

OptionSpec path_option(const std::string& key, const std::string& help) {
    return {key, OptType::Text, nullptr, help, false};
}

OptionSpec threads_option() {
    return {"threads", OptType::Int, nullptr, "worker threads (default: MGGM_THREADS or all cores)",
            false};
}

std::vector<OptionSpec> concat(std::initializer_list<std::vector<OptionSpec>> parts) {
    std::vector<OptionSpec> out;
    for (const auto& p : parts) {
        for (const auto& s : p) {
            if (std::none_of(out.begin(), out.end(), [&](const OptionSpec& o) { return o.key == s.key; })) {
                out.push_back(s);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Config -> library types

std::string text(const json& cfg, const char* key) {
    return cfg.at(key).get<std::string>();
}

const json& required(const json& cfg, const char* key) {
    if (cfg.at(key).is_null()) {
        fail(ErrorCode::ConfigError, std::string("missing required option ") + flag_name(key));
    }
    return cfg.at(key);
}

std::vector<double> opt_reals(const json& cfg, const char* key) {
    return cfg.at(key).is_null() ? std::vector<double>{} : cfg.at(key).get<std::vector<double>>();
}

std::vector<std::size_t> opt_counts(const json& cfg, const char* key) {
    return cfg.at(key).is_null() ? std::vector<std::size_t>{}
                                 : cfg.at(key).get<std::vector<std::size_t>>();
}

std::vector<std::size_t> session_counts(const json& cfg) {
    auto n = cfg.at("n").get<std::vector<std::size_t>>();
    if (!cfg.at("m").is_null()) {
        const auto m = cfg.at("m").get<std::size_t>();
        if (n.size() == 1) {
            n.assign(m, n.front());
        } else if (n.size() != m) {
            fail(ErrorCode::ConfigError, "--n lists a different number of sessions than --m");
        }
    }
    return n;
}

simulate::SimulationSpec simulation_spec(const json& cfg, std::uint64_t seed) {
    simulate::SimulationSpec s;
    try {
        s.kind = simulate::graph_kind_from_string(text(cfg, "kind"));
    } catch (const Error& e) {
        fail(ErrorCode::ConfigError, e.what());
    }
    s.dims = Dimensions(session_counts(cfg), cfg.at("p").get<std::size_t>(),
                        cfg.at("q").get<std::size_t>());
    if (!cfg.at("edge_prob").is_null()) {
        s.edge_prob_override = cfg.at("edge_prob").get<double>();
    }
    s.nonzero_low = cfg.at("low").get<double>();
    s.nonzero_high_base = cfg.at("high").get<double>();
    s.session_decay = cfg.at("decay").get<double>();
    s.temporal_kappa5 = cfg.at("kappa5").get<double>();
    s.temporal_alpha = opt_reals(cfg, "temporal_alpha");
    s.spd_floor = cfg.at("spd_floor").get<double>();
    s.seed = seed;
    try {
        s.validate();
    } catch (const Error& e) {
        fail(ErrorCode::ConfigError, e.what());
    }
    return s;
}

spatial::GammaSpec gamma_spec(const json& cfg) {
    const std::string g = text(cfg, "gamma");
    spatial::GammaSpec spec = spatial::GammaSpec::theory(cfg.at("c0").get<double>());
    spec.cv_folds = cfg.at("cv_folds").get<std::size_t>();
    if (g == "theory") {
        return spec;
    }
    if (g == "cv") {
        spec.kind = spatial::GammaSpec::Kind::CrossValidated;
        return spec;
    }
    const OptionSpec as_list{"gamma", OptType::RealList, nullptr, ""};
    const auto values = parse_value(as_list, g).get<std::vector<double>>();
    for (double v : values) {
        if (!(v >= 0.0)) {
            fail(ErrorCode::ConfigError, "gamma values must be non-negative");
        }
    }
    if (values.size() == 1) {
        return spatial::GammaSpec::scalar(values.front());
    }
    spec.kind = spatial::GammaSpec::Kind::PerNode;
    spec.per_node = values;
    return spec;
}

grouplasso::SolverOptions solver_options(const json& cfg) {
    grouplasso::SolverOptions o;
    o.max_iter = static_cast<int>(cfg.at("max_iter").get<std::size_t>());
    o.tol = cfg.at("tol").get<double>();
    return o;
}

temporal::TemporalOptions temporal_options(const json& cfg) {
    temporal::TemporalOptions o;
    o.eta = cfg.at("eta").get<double>();
    o.alpha = opt_reals(cfg, "temporal_alpha");
    o.bandwidth = opt_counts(cfg, "bandwidth");
    const std::string rule = text(cfg, "bandwidth_rule");
    if (rule == "rate") {
        o.rule = temporal::BandwidthRule::Rate;
    } else if (rule == "proof") {
        o.rule = temporal::BandwidthRule::ProofRate;
    } else {
        fail(ErrorCode::ConfigError, "--bandwidth-rule must be rate or proof");
    }
    return o;
}

EdgeSet parse_edges(const std::string& source, std::size_t q) {
    if (source == "off-diagonal") {
        return EdgeSet::off_diagonal(q);
    }
    const std::string cb = "cross-block:";
    if (source.rfind(cb, 0) == 0) {
        std::vector<std::size_t> b;
        std::stringstream ss(source.substr(cb.size()));
        std::string item;
        while (std::getline(ss, item, ':')) {
            const OptionSpec s{"edges", OptType::Int, nullptr, ""};
            b.push_back(parse_value(s, item).get<std::size_t>());
        }
        if (b.size() != 4 || b[0] > b[1] || b[2] > b[3] || b[1] > q || b[3] > q) {
            fail(ErrorCode::ConfigError, "cross-block edges take A0:A1:B0:B1 with A0<=A1<=q, B0<=B1<=q");
        }
        return EdgeSet::cross_block(b[0], b[1], b[2], b[3], q);
    }
    const std::string path = source.rfind("file:", 0) == 0 ? source.substr(5) : source;
    std::istringstream in(io::read_text(path));
    std::vector<EdgeSet::Edge> edges;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("i,", 0) == 0) {
            continue;
        }
        std::size_t i = 0, j = 0;
        char comma = 0;
        std::istringstream ls(line);
        if (!(ls >> i >> comma >> j) || comma != ',') {
            fail(ErrorCode::ConfigError, "edge file lines must read 'i,j': " + line);
        }
        edges.emplace_back(i, j);
    }
    return EdgeSet(std::move(edges), q);
}

void set_threads(const json& cfg) {
    if (!cfg.at("threads").is_null()) {
        omp_set_num_threads(static_cast<int>(cfg.at("threads").get<std::size_t>()));
    } else if (const char* env = std::getenv("MGGM_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) {
            omp_set_num_threads(t);
        }
    }
}

std::string real(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string tag(const std::string& hash, std::uint64_t seed) {
    return hash + "_seed" + std::to_string(seed);
}

Matrix row_of(const std::vector<double>& v) {
    Matrix r(1, static_cast<Index>(v.size()));
    for (std::size_t k = 0; k < v.size(); ++k) r(0, static_cast<Index>(k)) = v[k];
    return r;
}

std::vector<double> values_of(const Matrix& m) {
    return std::vector<double>(m.data(), m.data() + m.size());
}

/// The config without paths and thread counts, as recorded in result files.
json recorded(const json& cfg) {
    json out = cfg;
    for (const char* key : {"out", "data", "fit", "name", "threads"}) {
        out.erase(key);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fit persistence

struct Fits {
    spatial::SpatialFit spatial;
    temporal::TemporalFit temporal;
};

io::MatrixBundle spatial_bundle(const spatial::SpatialFit& fit, const Dimensions& d) {
    io::MatrixBundle b;
    b.kind = "spatial-fit";
    b.entries["beta"] = fit.beta;
    b.entries["phi"] = fit.phi;
    b.entries["omega"] = fit.omega;
    b.entries["rho"] = fit.rho;
    b.entries["gamma"] = {row_of(fit.gammas)};
    std::vector<double> n(d.n.begin(), d.n.end());
    b.entries["n"] = {row_of(n)};
    b.scalars["p"] = static_cast<double>(d.p);
    b.scalars["q"] = static_cast<double>(d.q);
    b.scalars["max_kkt_residual"] = fit.max_kkt_residual;
    return b;
}

io::MatrixBundle temporal_bundle(const temporal::TemporalFit& fit) {
    io::MatrixBundle b;
    b.kind = "temporal-fit";
    std::vector<double> bw;
    for (const auto& s : fit.sessions) {
        b.entries["beta"].push_back(s.regression.beta);
        b.entries["phi"].push_back(s.regression.phi);
        b.entries["sigma"].push_back(s.estimate.sigma);
        b.entries["omega"].push_back(s.estimate.omega);
        b.entries["sigma_bar"].push_back(s.estimate.sigma_bar);
        b.entries["omega_bar"].push_back(s.estimate.omega_bar);
        bw.push_back(static_cast<double>(s.regression.bandwidth));
    }
    b.entries["frob_sq_over_p"] = {row_of(fit.frob_sq_over_p())};
    b.entries["bandwidth"] = {row_of(bw)};
    if (!fit.sessions.empty()) {
        b.scalars["eta"] = fit.sessions.front().eta;
    }
    return b;
}

inference::InferenceInput input_from_bundles(const fs::path& dir) {
    const auto sb = io::load_bundle(dir / "spatial");
    const auto tb = io::load_bundle(dir / "temporal");
    if (sb.kind != "spatial-fit" || tb.kind != "temporal-fit") {
        fail(ErrorCode::MalformedManifest, "fit directory does not hold spatial and temporal fits");
    }
    std::vector<std::size_t> n;
    for (double v : values_of(sb.entries.at("n").at(0))) n.push_back(static_cast<std::size_t>(v));
    inference::InferenceInput in{
        Dimensions(n, static_cast<std::size_t>(sb.scalars.at("p")),
                   static_cast<std::size_t>(sb.scalars.at("q"))),
        sb.entries.at("rho"), values_of(tb.entries.at("frob_sq_over_p").at(0))};
    in.validate();
    return in;
}

// ---------------------------------------------------------------------------
// Commands

struct Output {
    json files = json::object();
    json summary = json::object();
};

Output cmd_simulate(const json& cfg, const std::string& hash) {
    const auto seed = cfg.at("seed").get<std::uint64_t>();
    const fs::path out = text(cfg, "out");
    const auto spec = simulation_spec(cfg, seed);
    auto ds = simulate::simulate_dataset(spec);
    Manifest man;
    man.name = cfg.at("name").is_null() ? "sim_" + tag(hash, seed) : text(cfg, "name");
    man.seed = seed;
    man.provenance = "mggm simulate spec " + hash;
    ds = MultiSessionDataset(ds.sessions(), man, ds.truth());
    io::save_dataset(ds, out);
    const fs::path cfg_file = out / ("simulate_" + tag(hash, seed) + ".json");
    io::write_text(cfg_file, json{{"command", "simulate"}, {"spec_hash", hash}, {"config", recorded(cfg)}}.dump(2) + "\n");
    Output o;
    o.files["dataset"] = out.string();
    o.files["config"] = cfg_file.string();
    return o;
}

Fits run_fits(const MultiSessionDataset& ds, const json& cfg) {
    Fits f;
    f.spatial = spatial::fit_spatial(ds, gamma_spec(cfg), solver_options(cfg));
    f.temporal = temporal::fit_temporal(ds, temporal_options(cfg));
    return f;
}

Output cmd_fit(const json& cfg, const std::string& hash) {
    const fs::path out = text(cfg, "out");
    const auto ds = io::load_dataset(text(cfg, "data"));
    const Fits f = run_fits(ds, cfg);
    io::save_bundle(spatial_bundle(f.spatial, ds.dims()), out / "spatial");
    io::save_bundle(temporal_bundle(f.temporal), out / "temporal");
    json summary = {{"command", "fit"},
                    {"spec_hash", hash},
                    {"config", recorded(cfg)},
                    {"gammas", f.spatial.gammas},
                    {"converged", f.spatial.converged},
                    {"max_kkt_residual", f.spatial.max_kkt_residual},
                    {"frob_sq_over_p", f.temporal.frob_sq_over_p()}};
    const fs::path file = out / ("fit_" + hash + ".json");
    io::write_text(file, summary.dump(2) + "\n");
    Output o;
    o.files = {{"spatial", (out / "spatial").string()},
               {"temporal", (out / "temporal").string()},
               {"summary", file.string()}};
    return o;
}

Output cmd_fit_temporal(const json& cfg, const std::string& hash) {
    const fs::path out = text(cfg, "out");
    const auto ds = io::load_dataset(text(cfg, "data"));
    const auto fit = temporal::fit_temporal(ds, temporal_options(cfg));
    io::save_bundle(temporal_bundle(fit), out / "temporal");
    const fs::path file = out / ("fit_temporal_" + hash + ".json");
    io::write_text(file, json{{"command", "fit-temporal"},
                              {"spec_hash", hash},
                              {"config", recorded(cfg)},
                              {"frob_sq_over_p", fit.frob_sq_over_p()}}
                                 .dump(2) + "\n");
    Output o;
    o.files = {{"temporal", (out / "temporal").string()}, {"summary", file.string()}};
    return o;
}

Output cmd_test(const json& cfg, const std::string& hash) {
    const fs::path out = text(cfg, "out");
    const auto seed = cfg.at("seed").get<std::uint64_t>();
    const bool has_fit = !cfg.at("fit").is_null();
    const bool has_data = !cfg.at("data").is_null();
    if (has_fit == has_data) {
        fail(ErrorCode::ConfigError, "test needs exactly one of --fit or --data");
    }
    inference::InferenceInput input;
    if (has_fit) {
        input = input_from_bundles(text(cfg, "fit"));
    } else {
        const auto ds = io::load_dataset(text(cfg, "data"));
        const Fits f = run_fits(ds, cfg);
        input = inference::InferenceInput::from_fits(ds.dims(), f.spatial, f.temporal);
    }
    const EdgeSet edges = parse_edges(text(cfg, "edges"), input.dims.q);
    const double c = cfg.at("c").get<double>();
    const auto r = inference::c_level_test(input, edges, c, cfg.at("alpha").get<double>(),
                                           cfg.at("draws").get<std::size_t>(), seed);
    const Matrix z = inference::single_edge_zscores(input);
    const Matrix p = inference::single_edge_pvalues(input);

    const std::string base = tag(hash, seed);
    json result = {{"command", "test"},
                   {"spec_hash", hash},
                   {"config", recorded(cfg)},
                   {"edges", edges.size()},
                   {"sup_norm", r.sup_norm},
                   {"test_value", r.test_value},
                   {"quantile", r.quantile},
                   {"reject", r.reject},
                   {"p_value", r.p_value},
                   {"alpha", r.alpha},
                   {"c", r.c},
                   {"draws", r.draws},
                   {"seed", r.seed},
                   {"psd_repaired", r.covariance.psd_repaired},
                   {"min_eigenvalue", r.covariance.min_eigenvalue}};
    const fs::path json_file = out / ("test_" + base + ".json");
    io::write_text(json_file, result.dump(2) + "\n");

    std::string csv = "i,j,statistic,z,single_edge_p\n";
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto [i, j] = edges.edges()[k];
        const auto ii = static_cast<Index>(i);
        const auto jj = static_cast<Index>(j);
        csv += std::to_string(i) + "," + std::to_string(j) + "," +
               real(r.statistic.values[static_cast<Index>(k)]) + "," + real(z(ii, jj)) + "," +
               real(p(ii, jj)) + "\n";
    }
    const fs::path csv_file = out / ("edges_" + base + ".csv");
    io::write_text(csv_file, csv);
    Output o;
    o.files = {{"result", json_file.string()}, {"edges", csv_file.string()}};
    o.summary = {{"sup_norm", r.sup_norm}, {"quantile", r.quantile}, {"reject", r.reject},
                 {"p_value", r.p_value}};
    return o;
}

Output cmd_coverage(const json& cfg, const std::string& hash) {
    const fs::path out = text(cfg, "out");
    const auto seed = cfg.at("seed").get<std::uint64_t>();
    experiments::CoverageSpec spec;
    spec.sim = simulation_spec(cfg, seed);
    spec.replications = cfg.at("replications").get<std::size_t>();
    spec.levels = cfg.at("levels").get<std::vector<double>>();
    spec.draws = cfg.at("draws").get<std::size_t>();
    spec.seed = seed;
    spec.gamma = gamma_spec(cfg);
    spec.temporal = temporal_options(cfg);
    spec.edge_sets.clear();
    std::stringstream ss(text(cfg, "edge_sets"));
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "off") spec.edge_sets.push_back(experiments::EdgeSetKind::Off);
        else if (item == "zero") spec.edge_sets.push_back(experiments::EdgeSetKind::Zero);
        else fail(ErrorCode::ConfigError, "--edge-sets takes off and/or zero");
    }
    const auto rep = experiments::run_coverage(spec);

    std::string csv = "level,edge_set,covered,completed,coverage,se\n";
    json rows = json::array();
    for (const auto& r : rep.rows) {
        csv += real(r.level) + "," + experiments::to_string(r.edge_set) + "," +
               std::to_string(r.covered) + "," + std::to_string(r.completed) + "," +
               real(r.coverage) + "," + real(r.se) + "\n";
        rows.push_back({{"level", r.level},
                        {"edge_set", experiments::to_string(r.edge_set)},
                        {"coverage", r.coverage},
                        {"se", r.se},
                        {"completed", r.completed}});
    }
    const std::string base = tag(hash, seed);
    const fs::path csv_file = out / ("coverage_" + base + ".csv");
    io::write_text(csv_file, csv);
    json errors = json::array();
    for (const auto& t : rep.trials) {
        if (!t.ok) errors.push_back({{"replication", t.replication}, {"error", t.error}});
    }
    const fs::path json_file = out / ("coverage_" + base + ".json");
    io::write_text(json_file, json{{"command", "coverage"},
                                   {"spec_hash", hash},
                                   {"config", recorded(cfg)},
                                   {"rows", rows},
                                   {"failures", rep.failures},
                                   {"errors", errors}}
                                      .dump(2) + "\n");
    Output o;
    o.files = {{"table", csv_file.string()}, {"summary", json_file.string()}};
    o.summary = {{"rows", rows}, {"failures", rep.failures}};
    return o;
}

Output cmd_roc(const json& cfg, const std::string& hash) {
    const fs::path out = text(cfg, "out");
    const auto seed = cfg.at("seed").get<std::uint64_t>();
    experiments::RocSpec spec;
    spec.sim = simulation_spec(cfg, seed);
    spec.replications = cfg.at("replications").get<std::size_t>();
    spec.seed = seed;
    spec.gamma = gamma_spec(cfg);
    spec.temporal = temporal_options(cfg);
    spec.thresholds = opt_reals(cfg, "thresholds");
    const auto rep = experiments::run_roc(spec);

    std::string csv = "method,curve,point,fpr,tpr\n";
    json methods = json::object();
    for (const auto& m : rep.methods) {
        for (std::size_t c = 0; c < m.curves.size(); ++c) {
            for (std::size_t k = 0; k < m.curves[c].size(); ++k) {
                csv += m.method + "," + std::to_string(c) + "," + std::to_string(k) + "," +
                       real(m.curves[c][k].fpr) + "," + real(m.curves[c][k].tpr) + "\n";
            }
        }
        methods[m.method] = {{"aucs", m.aucs}, {"mean_auc", m.mean_auc}};
    }
    const std::string base = tag(hash, seed);
    const fs::path csv_file = out / ("roc_" + base + ".csv");
    io::write_text(csv_file, csv);
    const fs::path json_file = out / ("roc_" + base + ".json");
    io::write_text(json_file, json{{"command", "roc"},
                                   {"spec_hash", hash},
                                   {"config", recorded(cfg)},
                                   {"methods", methods},
                                   {"failures", rep.failures}}
                                      .dump(2) + "\n");
    Output o;
    o.files = {{"curves", csv_file.string()}, {"summary", json_file.string()}};
    o.summary = {{"group_mean_auc", rep.method("group").mean_auc},
                 {"per_session_mean_auc", rep.method("per_session").mean_auc},
                 {"per_session_min_p_mean_auc", rep.method("per_session_min_p").mean_auc}};
    return o;
}

// ---------------------------------------------------------------------------

void make_output_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        fail(ErrorCode::IoFailure, "cannot create output directory " + dir.string() + ": " + ec.message());
    }
}

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedManifest:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::NonFiniteValue:
    case ErrorCode::IoFailure:
    case ErrorCode::InvalidArgument:
    case ErrorCode::ZeroVarianceColumn:
    case ErrorCode::EmptyEdgeSet:
    case ErrorCode::BadAlpha:
    case ErrorCode::NegativeC:
    case ErrorCode::ConfigError:
        return 1;
    default:
        return 2;
    }
}

int report(std::string_view code, const std::string& message, int exit_code) {
    std::cerr << json{{"error", {{"code", code}, {"message", message}, {"exit_code", exit_code}}}}.dump()
              << "\n";
    return exit_code;
}

struct Command {
    std::string name;
    std::string help;
    std::vector<OptionSpec> specs;
    Output (*run)(const json&, const std::string&);
    CLI::App* app = nullptr;
    std::unique_ptr<CommandConfig> config{};
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-session matrix-variate graphical model estimation and simultaneous edge tests"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "mggm 1.0.0");

    const OptionSpec seed{"seed", OptType::Int, 0, "master random seed"};
    const OptionSpec out = path_option("out", "output directory");
    const OptionSpec data = path_option("data", "dataset directory or manifest");

    std::vector<Command> commands;
    commands.push_back({"simulate", "simulate a multi-session dataset with ground truth",
                        concat({sim_options(), {seed, out, threads_option(),
                                                path_option("name", "dataset name")}}),
                        cmd_simulate});
    commands.push_back({"fit", "fit spatial and temporal models to a dataset",
                        concat({{data, out}, fit_options(),
                                {{"temporal_alpha", OptType::RealList, nullptr,
                                  "temporal decay exponent per session"},
                                 threads_option()}}),
                        cmd_fit});
    commands.push_back({"fit-temporal", "fit only the temporal covariance of each session",
                        concat({{data, out}, temporal_only_options(), {threads_option()}}),
                        cmd_fit_temporal});
    commands.push_back(
        {"test", "simultaneous (or c-level) test over an edge set",
         concat({{path_option("fit", "directory written by the fit command"), data, out,
                  {"edges", OptType::Text, "off-diagonal",
                   "off-diagonal | cross-block:A0:A1:B0:B1 | file:PATH"},
                  {"alpha", OptType::Real, 0.05, "significance level"},
                  {"draws", OptType::Int, 3000, "bootstrap draws"},
                  {"c", OptType::Real, 0.0, "c-level null bound on |rho|"},
                  seed},
                 fit_options(),
                 {{"temporal_alpha", OptType::RealList, nullptr,
                   "temporal decay exponent per session"},
                  threads_option()}}),
         cmd_test});
    commands.push_back(
        {"coverage", "coverage of the bootstrap confidence region over simulated replications",
         concat({sim_options(), fit_options(),
                 {{"replications", OptType::Int, 200, "replications"},
                  {"levels", OptType::RealList, json::array({0.925, 0.95, 0.975}), "nominal levels"},
                  {"edge_sets", OptType::Text, "off,zero", "edge sets: off and/or zero"},
                  {"draws", OptType::Int, 1000, "bootstrap draws"},
                  seed, out, threads_option()}}),
         cmd_coverage});
    commands.push_back(
        {"roc", "ROC of the multi-session method against a per-session baseline",
         concat({sim_options(), fit_options(),
                 {{"replications", OptType::Int, 20, "replications"},
                  {"thresholds", OptType::RealList, nullptr,
                   "sorted p-value thresholds (default: every distinct score)"},
                  seed, out, threads_option()}}),
         cmd_roc});

    for (auto& c : commands) {
        c.app = app.add_subcommand(c.name, c.help);
        c.config = std::make_unique<CommandConfig>(c.app, c.specs);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report("ConfigError", e.what(), 1);
    }

    for (auto& c : commands) {
        if (!c.app->parsed()) {
            continue;
        }
        try {
            const json cfg = c.config->resolve();
            make_output_dir(required(cfg, "out").get<std::string>());
            set_threads(cfg);
            const std::string hash = CommandConfig::spec_hash(cfg, c.specs);
            Output o = c.run(cfg, hash);
            std::cout << json{{"command", c.name}, {"spec_hash", hash}, {"files", o.files},
                              {"summary", o.summary}}
                             .dump(2)
                      << "\n";
            return 0;
        } catch (const Error& e) {
            return report(to_string(e.code()), e.what(), exit_code_for(e.code()));
        } catch (const std::exception& e) {
            return report("Internal", e.what(), 2);
        }
    }
    return report("ConfigError", "no subcommand given", 1);
}
