#include "mggm/io.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mggm::io {

using nlohmann::json;

namespace {

constexpr const char* kDatasetFormat = "mggm-dataset";
constexpr const char* kBundleFormat = "mggm-matrices";

std::uint64_t byteswap64(std::uint64_t v) {
    v = ((v & 0x00000000FFFFFFFFull) << 32) | ((v & 0xFFFFFFFF00000000ull) >> 32);
    v = ((v & 0x0000FFFF0000FFFFull) << 16) | ((v & 0xFFFF0000FFFF0000ull) >> 16);
    v = ((v & 0x00FF00FF00FF00FFull) << 8) | ((v & 0xFF00FF00FF00FF00ull) >> 8);
    return v;
}

fs::path manifest_path(const fs::path& path) {
    if (fs::is_directory(path)) {
        return path / kManifestName;
    }
    return path;
}

json parse_manifest(const fs::path& file) {
    if (!fs::exists(file)) {
        fail(ErrorCode::IoFailure, "missing manifest: " + file.string());
    }
    try {
        return json::parse(read_text(file));
    } catch (const json::exception& e) {
        fail(ErrorCode::MalformedManifest, "cannot parse " + file.string() + ": " + e.what());
    }
}

template <class T>
T required(const json& j, const char* key) {
    if (!j.contains(key)) {
        fail(ErrorCode::MalformedManifest, std::string("manifest is missing '") + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        fail(ErrorCode::MalformedManifest, std::string("bad value for '") + key + "': " + e.what());
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        fail(ErrorCode::IoFailure, "cannot create directory " + dir.string() + ": " + ec.message());
    }
}

void check_finite(const Matrix& m, const std::string& what) {
    if (!m.allFinite()) {
        fail(ErrorCode::NonFiniteValue, what + " contains NaN or Inf");
    }
}

std::string session_file(std::size_t l) {
    std::ostringstream os;
    os << "session_" << l << ".bin";
    return os.str();
}

} // namespace

void write_text(const fs::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoFailure, "cannot open for writing: " + file.string());
    }
    out << text;
    out.flush();
    if (!out) {
        fail(ErrorCode::IoFailure, "write failed: " + file.string());
    }
}

std::string read_text(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open for reading: " + file.string());
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_f64_le(const fs::path& file, const double* data, std::size_t count) {
    std::vector<std::uint64_t> raw(count);
    std::memcpy(raw.data(), data, count * sizeof(double));
    if constexpr (std::endian::native == std::endian::big) {
        for (auto& v : raw) {
            v = byteswap64(v);
        }
    }
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorCode::IoFailure, "cannot open for writing: " + file.string());
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(count * sizeof(double)));
    if (!out) {
        fail(ErrorCode::IoFailure, "write failed: " + file.string());
    }
}

std::vector<double> read_f64_le(const fs::path& file) {
    std::ifstream in(file, std::ios::binary | std::ios::ate);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open for reading: " + file.string());
    }
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes % sizeof(double) != 0) {
        fail(ErrorCode::ShapeMismatch, file.string() + " is not a whole number of float64 values");
    }
    std::vector<std::uint64_t> raw(bytes / sizeof(double));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
    if constexpr (std::endian::native == std::endian::big) {
        for (auto& v : raw) {
            v = byteswap64(v);
        }
    }
    std::vector<double> out(raw.size());
    std::memcpy(out.data(), raw.data(), bytes);
    return out;
}

Matrix read_csv_matrix(const fs::path& file) {
    std::ifstream in(file);
    if (!in) {
        fail(ErrorCode::IoFailure, "cannot open for reading: " + file.string());
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                if (cell.find_first_not_of(" \t\r", used) != std::string::npos) {
                    throw std::invalid_argument(cell);
                }
                row.push_back(v);
            } catch (const std::out_of_range&) {
                fail(ErrorCode::NonFiniteValue, "value out of range in " + file.string());
            } catch (const std::invalid_argument&) {
                fail(ErrorCode::ShapeMismatch, "unparseable cell '" + cell + "' in " + file.string());
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            fail(ErrorCode::ShapeMismatch, "ragged rows in " + file.string());
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        fail(ErrorCode::ShapeMismatch, "empty CSV file " + file.string());
    }
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
        }
    }
    return m;
}

MultiSessionDataset load_dataset(const fs::path& path) {
    const fs::path mfile = manifest_path(path);
    const fs::path root = mfile.parent_path();
    const json j = parse_manifest(mfile);

    if (j.value("format", std::string()) != kDatasetFormat) {
        fail(ErrorCode::MalformedManifest, "manifest format is not " + std::string(kDatasetFormat));
    }
    const json dims = required<json>(j, "dims");
    const auto n = required<std::vector<std::size_t>>(dims, "n");
    const auto p = required<std::size_t>(dims, "p");
    const auto q = required<std::size_t>(dims, "q");
    if (dims.contains("m") && dims.at("m").get<std::size_t>() != n.size()) {
        fail(ErrorCode::MalformedManifest, "dims.m does not match the length of dims.n");
    }
    Dimensions(n, p, q).validate();

    const std::string dtype = j.value("dtype", std::string("float64"));
    const std::string endian = j.value("endianness", std::string("little"));
    if (dtype == "float64" && endian != "little") {
        fail(ErrorCode::MalformedManifest, "only little-endian float64 is supported");
    }
    const auto sessions_j = required<json>(j, "sessions");
    if (!sessions_j.is_array() || sessions_j.size() != n.size()) {
        fail(ErrorCode::MalformedManifest, "sessions list does not match dims.n");
    }

    const auto pi = static_cast<Index>(p);
    const auto qi = static_cast<Index>(q);
    std::vector<Session> sessions(n.size());
    for (std::size_t l = 0; l < n.size(); ++l) {
        const json& sj = sessions_j[l];
        Session& s = sessions[l];
        if (dtype == "float64") {
            const auto file = root / required<std::string>(sj, "file");
            const std::vector<double> v = read_f64_le(file);
            if (v.size() != n[l] * p * q) {
                std::ostringstream os;
                os << file.string() << " holds " << v.size() << " values, manifest implies "
                   << n[l] * p * q;
                fail(ErrorCode::ShapeMismatch, os.str());
            }
            for (std::size_t k = 0; k < n[l]; ++k) {
                using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
                Trial x = Eigen::Map<const RowMajor>(v.data() + k * p * q, pi, qi);
                check_finite(x, file.string());
                s.push_back(std::move(x));
            }
        } else if (dtype == "csv") {
            const auto files = required<std::vector<std::string>>(sj, "files");
            if (files.size() != n[l]) {
                std::ostringstream os;
                os << "session " << l << " lists " << files.size() << " trial files, dims.n says "
                   << n[l];
                fail(ErrorCode::ShapeMismatch, os.str());
            }
            for (const auto& f : files) {
                Trial x = read_csv_matrix(root / f);
                if (x.rows() != pi || x.cols() != qi) {
                    fail(ErrorCode::ShapeMismatch, f + " does not have shape p x q");
                }
                check_finite(x, f);
                s.push_back(std::move(x));
            }
        } else {
            fail(ErrorCode::MalformedManifest, "unknown dtype '" + dtype + "'");
        }
    }

    Manifest manifest;
    manifest.name = j.value("name", std::string("dataset"));
    if (j.contains("seed") && !j.at("seed").is_null()) {
        manifest.seed = j.at("seed").get<std::uint64_t>();
    }
    manifest.provenance = j.value("provenance", std::string());

    std::optional<GroundTruth> truth;
    if (j.contains("ground_truth") && !j.at("ground_truth").is_null()) {
        truth = truth_from_bundle(load_bundle(root / j.at("ground_truth").get<std::string>()));
    }
    return MultiSessionDataset(std::move(sessions), std::move(manifest), std::move(truth));
}

void save_dataset(const MultiSessionDataset& ds, const fs::path& dir) {
    if (ds.sessions().empty()) {
        fail(ErrorCode::MalformedManifest, "refusing to save a dataset with no sessions");
    }
    ensure_dir(dir);
    const Dimensions& d = ds.dims();
    json sessions = json::array();
    for (std::size_t l = 0; l < ds.sessions().size(); ++l) {
        const Session& s = ds.session(l);
        std::vector<double> buf;
        buf.reserve(s.size() * d.p * d.q);
        for (const Trial& x : s) {
            for (Index r = 0; r < x.rows(); ++r) {
                for (Index c = 0; c < x.cols(); ++c) {
                    buf.push_back(x(r, c));
                }
            }
        }
        const std::string file = session_file(l);
        write_f64_le(dir / file, buf.data(), buf.size());
        sessions.push_back({{"file", file}, {"trials", s.size()}});
    }

    json j;
    j["format"] = kDatasetFormat;
    j["version"] = 1;
    j["name"] = ds.manifest().name;
    j["seed"] = ds.manifest().seed ? json(*ds.manifest().seed) : json(nullptr);
    j["provenance"] = ds.manifest().provenance;
    j["dims"] = {{"m", d.m()}, {"n", d.n}, {"p", d.p}, {"q", d.q}};
    j["dtype"] = "float64";
    j["endianness"] = "little";
    j["layout"] = "trial-major, row-major within trial";
    j["sessions"] = sessions;
    if (ds.truth()) {
        save_bundle(truth_to_bundle(*ds.truth()), dir / "truth");
        j["ground_truth"] = "truth";
    } else {
        j["ground_truth"] = nullptr;
    }
    write_text(dir / kManifestName, j.dump(2) + "\n");
}

void save_bundle(const MatrixBundle& bundle, const fs::path& dir) {
    ensure_dir(dir);
    json entries = json::array();
    for (const auto& [name, mats] : bundle.entries) {
        for (std::size_t l = 0; l < mats.size(); ++l) {
            const Matrix& m = mats[l];
            std::vector<double> buf;
            buf.reserve(static_cast<std::size_t>(m.size()));
            for (Index r = 0; r < m.rows(); ++r) {
                for (Index c = 0; c < m.cols(); ++c) {
                    buf.push_back(m(r, c));
                }
            }
            std::ostringstream file;
            file << name << "_" << l << ".bin";
            write_f64_le(dir / file.str(), buf.data(), buf.size());
            entries.push_back({{"name", name},
                               {"session", l},
                               {"rows", m.rows()},
                               {"cols", m.cols()},
                               {"file", file.str()}});
        }
    }
    json j;
    j["format"] = kBundleFormat;
    j["version"] = 1;
    j["kind"] = bundle.kind;
    j["dtype"] = "float64";
    j["endianness"] = "little";
    j["layout"] = "row-major";
    j["matrices"] = entries;
    j["scalars"] = bundle.scalars;
    write_text(dir / kManifestName, j.dump(2) + "\n");
}

MatrixBundle load_bundle(const fs::path& dir) {
    const fs::path mfile = manifest_path(dir);
    const fs::path root = mfile.parent_path();
    const json j = parse_manifest(mfile);
    if (j.value("format", std::string()) != kBundleFormat) {
        fail(ErrorCode::MalformedManifest, "manifest format is not " + std::string(kBundleFormat));
    }
    MatrixBundle b;
    b.kind = j.value("kind", std::string());
    if (j.contains("scalars")) {
        b.scalars = j.at("scalars").get<std::map<std::string, double>>();
    }
    for (const json& e : required<json>(j, "matrices")) {
        const auto name = required<std::string>(e, "name");
        const auto l = required<std::size_t>(e, "session");
        const auto rows = required<Index>(e, "rows");
        const auto cols = required<Index>(e, "cols");
        const std::vector<double> v = read_f64_le(root / required<std::string>(e, "file"));
        if (v.size() != static_cast<std::size_t>(rows * cols)) {
            fail(ErrorCode::ShapeMismatch, "matrix file size does not match rows x cols for " + name);
        }
        using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
        auto& slot = b.entries[name];
        if (slot.size() <= l) {
            slot.resize(l + 1);
        }
        slot[l] = Eigen::Map<const RowMajor>(v.data(), rows, cols);
    }
    return b;
}

MatrixBundle truth_to_bundle(const GroundTruth& t) {
    MatrixBundle b;
    b.kind = "ground-truth";
    b.entries["spatial_cov"] = t.spatial_cov;
    b.entries["spatial_precision"] = t.spatial_precision;
    b.entries["partial_corr"] = t.partial_corr;
    b.entries["temporal_cov"] = t.temporal_cov;
    b.entries["temporal_beta"] = t.temporal_beta;
    std::vector<Matrix> phi;
    for (const Vector& v : t.temporal_phi) {
        phi.emplace_back(v);
    }
    b.entries["temporal_phi"] = phi;
    b.entries["support"] = {t.support.cast<double>()};
    return b;
}

GroundTruth truth_from_bundle(const MatrixBundle& b) {
    auto get = [&](const std::string& key) -> const std::vector<Matrix>& {
        auto it = b.entries.find(key);
        if (it == b.entries.end()) {
            fail(ErrorCode::MalformedManifest, "ground truth is missing '" + key + "'");
        }
        return it->second;
    };
    GroundTruth t;
    t.spatial_cov = get("spatial_cov");
    t.spatial_precision = get("spatial_precision");
    t.partial_corr = get("partial_corr");
    t.temporal_cov = get("temporal_cov");
    t.temporal_beta = get("temporal_beta");
    for (const Matrix& m : get("temporal_phi")) {
        t.temporal_phi.emplace_back(m.col(0));
    }
    const auto& support = get("support");
    if (support.size() != 1) {
        fail(ErrorCode::MalformedManifest, "ground truth must hold exactly one support mask");
    }
    t.support = support.front().array() != 0.0;
    return t;
}

} // namespace mggm::io
