// eigen_cache.hpp: on-disk eigensystem cache.
//
// File layout (all integers and floats little-endian):
//   "ETHEIG1"            7-byte magic
//   u64 dim
//   u8  flags            bit 0 set: complex eigenvectors
//   32 bytes             SHA-256 of the source Hamiltonian spec text
//   f64[dim]             eigenvalues
//   f64[dim*dim]         eigenvectors, column-major; complex entries are
//                        stored as (re, im) pairs, so 2*dim*dim values

#pragma once

#include "ethbath/spectra.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace ethbath {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(const std::string& data);
Digest sha256_file(const std::filesystem::path& path);
std::string to_hex(const Digest& d);

void write_eigensystem(const std::filesystem::path& path, const EigenSystem& eig,
                       const Digest& spec_hash);

// Throws NumericalError on a malformed file or (when given) a hash mismatch.
EigenSystem read_eigensystem(const std::filesystem::path& path,
                             const std::optional<Digest>& expected_hash = std::nullopt);

class EigenCache {
public:
    // An empty directory disables caching.
    explicit EigenCache(std::filesystem::path dir = {});

    bool enabled() const { return !dir_.empty(); }
    std::filesystem::path path_for(const std::string& spec_text) const;

    // Loads the eigensystem keyed by spec_text, or builds, diagonalizes and
    // stores it. Writes go to a temporary file and are renamed into place.
    EigenSystem get_or_compute(const std::string& spec_text,
                               const std::function<HermitianOperator()>& build) const;

private:
    std::filesystem::path dir_;
};

} // namespace ethbath
