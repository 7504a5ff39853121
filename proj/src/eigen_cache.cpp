// eigen_cache.cpp

#include "ethbath/eigen_cache.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <vector>

namespace ethbath {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[7] = {'E', 'T', 'H', 'E', 'I', 'G', '1'};

template <typename T>
T byteswap_if_big(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

void write_doubles(std::ostream& os, const double* p, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double v = byteswap_if_big(p[i]);
            os.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
    }
}

void read_doubles(std::istream& is, double* p, std::size_t n) {
    is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t i = 0; i < n; ++i) p[i] = byteswap_if_big(p[i]);
    }
}

struct MdCtxDeleter {
    void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
            throw Error("sha256: digest initialisation failed");
        }
    }
    void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
    Digest finish() {
        Digest d{};
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_.get(), d.data(), &len);
        return d;
    }

private:
    std::unique_ptr<EVP_MD_CTX, MdCtxDeleter> ctx_;
};

} // namespace

Digest sha256(const std::string& data) {
    Sha256 h;
    h.update(data.data(), data.size());
    return h.finish();
}

Digest sha256_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path.string() + " for hashing");
    Sha256 h;
    std::vector<char> buf(1 << 16);
    while (is) {
        is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        h.update(buf.data(), static_cast<std::size_t>(is.gcount()));
    }
    return h.finish();
}

std::string to_hex(const Digest& d) {
    static constexpr char hex[] = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (auto b : d) {
        s.push_back(hex[b >> 4]);
        s.push_back(hex[b & 0xF]);
    }
    return s;
}

void write_eigensystem(const fs::path& path, const EigenSystem& eig, const Digest& spec_hash) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + path.string() + " for writing");
    os.write(kMagic, sizeof kMagic);
    const std::uint64_t dim = byteswap_if_big(static_cast<std::uint64_t>(eig.dim()));
    os.write(reinterpret_cast<const char*>(&dim), sizeof dim);
    const std::uint8_t flags = eig.is_real() ? 0 : 1;
    os.write(reinterpret_cast<const char*>(&flags), 1);
    os.write(reinterpret_cast<const char*>(spec_hash.data()), spec_hash.size());
    write_doubles(os, eig.values.data(), static_cast<std::size_t>(eig.dim()));
    std::visit(
        [&](const auto& V) {
            using Scalar = typename std::decay_t<decltype(V)>::Scalar;
            const std::size_t per = std::is_same_v<Scalar, double> ? 1 : 2;
            write_doubles(os, reinterpret_cast<const double*>(V.data()),
                          per * static_cast<std::size_t>(V.size()));
        },
        eig.vectors);
    if (!os) throw Error("write failed for " + path.string());
}

EigenSystem read_eigensystem(const fs::path& path, const std::optional<Digest>& expected_hash) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw NumericalError("cannot open eigensystem cache " + path.string());
    char magic[7];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw NumericalError("bad magic in eigensystem cache " + path.string());
    }
    std::uint64_t dim = 0;
    is.read(reinterpret_cast<char*>(&dim), sizeof dim);
    dim = byteswap_if_big(dim);
    std::uint8_t flags = 0;
    is.read(reinterpret_cast<char*>(&flags), 1);
    Digest hash{};
    is.read(reinterpret_cast<char*>(hash.data()), hash.size());
    if (!is || dim == 0 || dim > (std::uint64_t{1} << 20) || flags > 1) {
        throw NumericalError("corrupt header in eigensystem cache " + path.string());
    }
    if (expected_hash && *expected_hash != hash) {
        throw NumericalError("eigensystem cache " + path.string() + " belongs to a different spec");
    }
    const auto n = static_cast<Eigen::Index>(dim);
    EigenSystem eig;
    eig.values.resize(n);
    read_doubles(is, eig.values.data(), dim);
    if (flags & 1) {
        ComplexMatrix V(n, n);
        read_doubles(is, reinterpret_cast<double*>(V.data()), 2 * dim * dim);
        eig.vectors = std::move(V);
    } else {
        RealMatrix V(n, n);
        read_doubles(is, V.data(), dim * dim);
        eig.vectors = std::move(V);
    }
    if (!is) throw NumericalError("truncated eigensystem cache " + path.string());
    return eig;
}

EigenCache::EigenCache(fs::path dir) : dir_(std::move(dir)) {}

fs::path EigenCache::path_for(const std::string& spec_text) const {
    return dir_ / (to_hex(sha256(spec_text)).substr(0, 24) + ".eig");
}

EigenSystem EigenCache::get_or_compute(const std::string& spec_text,
                                       const std::function<HermitianOperator()>& build) const {
    if (!enabled()) return diagonalize(build());
    const Digest hash = sha256(spec_text);
    const fs::path target = path_for(spec_text);
    if (fs::exists(target)) return read_eigensystem(target, hash);

    EigenSystem eig = diagonalize(build());
    fs::create_directories(dir_);
    std::random_device rd;
    const fs::path tmp = target.string() + ".tmp" + std::to_string(rd());
    write_eigensystem(tmp, eig, hash);
    fs::rename(tmp, target);
    return eig;
}

} // namespace ethbath
