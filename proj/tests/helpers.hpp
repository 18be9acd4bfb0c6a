#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "mggm/types.hpp"

namespace testutil {

inline mggm::Matrix random_matrix(mggm::Index rows, mggm::Index cols, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> z;
    mggm::Matrix a(rows, cols);
    for (mggm::Index i = 0; i < rows; ++i) {
        for (mggm::Index j = 0; j < cols; ++j) {
            a(i, j) = z(eng);
        }
    }
    return a;
}

inline mggm::MultiSessionDataset random_dataset(std::vector<std::size_t> n, std::size_t p,
                                                std::size_t q, std::uint64_t seed) {
    std::vector<mggm::Session> sessions;
    for (std::size_t l = 0; l < n.size(); ++l) {
        mggm::Session s;
        for (std::size_t k = 0; k < n[l]; ++k) {
            s.push_back(random_matrix(static_cast<mggm::Index>(p), static_cast<mggm::Index>(q),
                                      seed * 1000 + l * 100 + k));
        }
        sessions.push_back(std::move(s));
    }
    return mggm::MultiSessionDataset(std::move(sessions));
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("mggm_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

template <class F>
mggm::ErrorCode error_code_of(F&& f) {
    try {
        f();
    } catch (const mggm::Error& e) {
        return e.code();
    }
    throw std::runtime_error("expected mggm::Error");
}

} // namespace testutil
