#include "mggm/rng.hpp"

namespace mggm {

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t key = mix64(master);
    for (std::uint64_t tag : path) {
        key = mix64(key ^ mix64(tag + 0x632BE59BD9B4E019ull));
    }
    return key;
}

Matrix Rng::normal_matrix(Index rows, Index cols) {
    Matrix z(rows, cols);
    // Fill in row-major order so the draw sequence does not depend on storage.
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) {
            z(r, c) = normal();
        }
    }
    return z;
}

} // namespace mggm
