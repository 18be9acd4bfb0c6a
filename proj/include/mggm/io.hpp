#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mggm/types.hpp"

namespace mggm::io {

namespace fs = std::filesystem;

inline constexpr const char* kManifestName = "manifest.json";

/// Reads a dataset directory (or a path to its manifest.json).
///
/// The manifest declares dims and one file per session. With
/// `"dtype": "float64"` each session file holds n_l * p * q little-endian
/// doubles, trial-major and row-major within a trial. With `"dtype": "csv"`
/// each session lists one header-free CSV file per trial instead.
MultiSessionDataset load_dataset(const fs::path& path);

/// Writes the canonical binary layout plus manifest.json into `dir`.
void save_dataset(const MultiSessionDataset& ds, const fs::path& dir);

/// Named matrices grouped by session, persisted with the same
/// manifest + raw float64 convention. Used for fits and ground truth.
struct MatrixBundle {
    std::string kind;
    std::map<std::string, std::vector<Matrix>> entries;
    std::map<std::string, double> scalars;
};

void save_bundle(const MatrixBundle& bundle, const fs::path& dir);
MatrixBundle load_bundle(const fs::path& dir);

GroundTruth truth_from_bundle(const MatrixBundle& bundle);
MatrixBundle truth_to_bundle(const GroundTruth& truth);

void write_f64_le(const fs::path& file, const double* data, std::size_t count);
std::vector<double> read_f64_le(const fs::path& file);

Matrix read_csv_matrix(const fs::path& file);

/// Writes text atomically enough for our purposes; throws IoFailure.
void write_text(const fs::path& file, const std::string& text);
std::string read_text(const fs::path& file);

} // namespace mggm::io
