// hamiltonian.cpp: direct assembly of Pauli-string sums in the computational basis

#include "ethbath/hamiltonian.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace ethbath {

namespace {

using Factor = std::pair<int, Axis>; // (slot, axis)

// Adds coeff * (product of Pauli factors) to H. Each basis column i maps to a
// single row j = i ^ flipmask with a phase in {+-1, +-i}, so the result stays
// Hermitian bit-exactly.
template <typename Scalar>
void add_pauli_string(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& H, int n_spins,
                      std::span<const Factor> factors, double coeff) {
    const std::uint64_t dim = std::uint64_t{1} << n_spins;
    std::uint64_t flip = 0;
    for (const auto& [slot, axis] : factors) {
        if (axis != Axis::z) flip ^= std::uint64_t{1} << (n_spins - 1 - slot);
    }
    for (std::uint64_t i = 0; i < dim; ++i) {
        Complex phase{1.0, 0.0};
        for (const auto& [slot, axis] : factors) {
            const bool down = (i >> (n_spins - 1 - slot)) & 1U;
            switch (axis) {
            case Axis::x:
                break;
            case Axis::y:
                // sigma^y|up> = i|down>, sigma^y|down> = -i|up>
                phase *= down ? Complex{0.0, -1.0} : Complex{0.0, 1.0};
                break;
            case Axis::z:
                if (down) phase = -phase;
                break;
            }
        }
        const auto j = static_cast<Eigen::Index>(i ^ flip);
        const auto col = static_cast<Eigen::Index>(i);
        if constexpr (std::is_same_v<Scalar, double>) {
            H(j, col) += coeff * phase.real();
        } else {
            H(j, col) += coeff * phase;
        }
    }
}

void check_sites(int n_spins, int max_sites) {
    if (n_spins < 1) throw std::invalid_argument("spin chain needs at least one site");
    if (n_spins > max_sites) {
        throw std::invalid_argument("chain of " + std::to_string(n_spins) +
                                    " sites exceeds the configured maximum of " +
                                    std::to_string(max_sites));
    }
}

template <typename Scalar>
void add_bath_terms(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& H, int n_spins,
                    int offset, const SpinChainParams& p) {
    // bath site j (1-based) lives in slot offset + j - 1
    auto slot = [offset](int site) { return offset + site - 1; };
    for (int j = 1; j < p.L; ++j) {
        const Factor zz[] = {{slot(j), Axis::z}, {slot(j + 1), Axis::z}};
        add_pauli_string(H, n_spins, std::span<const Factor>(zz), p.J);
    }
    for (int j = 1; j <= p.L; ++j) {
        double hz = p.hz;
        if (j == 1) hz += p.h1;
        if (j == p.L) hz += p.hL;
        const Factor z[] = {{slot(j), Axis::z}};
        const Factor x[] = {{slot(j), Axis::x}};
        add_pauli_string(H, n_spins, std::span<const Factor>(z), hz);
        add_pauli_string(H, n_spins, std::span<const Factor>(x), p.hx);
    }
}

} // namespace

Axis parse_axis(std::string_view name) {
    if (name == "x") return Axis::x;
    if (name == "y") return Axis::y;
    if (name == "z") return Axis::z;
    throw std::invalid_argument("unknown Pauli axis '" + std::string(name) + "'");
}

char axis_name(Axis a) {
    switch (a) {
    case Axis::x: return 'x';
    case Axis::y: return 'y';
    case Axis::z: return 'z';
    }
    return '?';
}

SpinChainParams SpinChainParams::preset(std::string_view name, int L) {
    if (name == "chaotic") return chaotic(L);
    if (name == "integrable") return integrable(L);
    throw std::invalid_argument("unknown bath preset '" + std::string(name) + "'");
}

void SpinChainParams::validate() const {
    if (L < 1) throw std::invalid_argument("bath site count L must be >= 1");
    for (double v : {J, hz, hx, h1, hL}) {
        if (!std::isfinite(v)) throw std::invalid_argument("bath couplings must be finite");
    }
}

void SystemParams::validate() const {
    if (!(omega0 > 0.0) || !std::isfinite(omega0)) {
        throw std::invalid_argument("system splitting omega0 must be positive");
    }
}

void CouplingSpec::validate(int L) const {
    if (!std::isfinite(kappa)) throw std::invalid_argument("coupling kappa must be finite");
    if (terms.empty()) throw std::invalid_argument("coupling needs at least one term");
    for (const auto& t : terms) {
        if (t.site < 1 || t.site > L) {
            throw std::invalid_argument("coupling term references bath site " +
                                        std::to_string(t.site) + " outside 1.." +
                                        std::to_string(L));
        }
    }
}

bool CouplingSpec::is_real() const {
    for (const auto& t : terms) {
        // sigma^y (x) sigma^y is real, but any single y factor is not
        if ((t.system_axis == Axis::y) != (t.bath_axis == Axis::y)) return false;
    }
    return true;
}

HermitianOperator::HermitianOperator(RealMatrix m) : data_(std::move(m)) {
    if (real().rows() != real().cols()) throw std::invalid_argument("operator must be square");
}

HermitianOperator::HermitianOperator(ComplexMatrix m) : data_(std::move(m)) {
    if (complex().rows() != complex().cols()) throw std::invalid_argument("operator must be square");
}

const RealMatrix& HermitianOperator::real() const {
    if (const auto* r = std::get_if<RealMatrix>(&data_)) return *r;
    throw std::logic_error("operator is stored as complex");
}

const ComplexMatrix& HermitianOperator::complex() const {
    if (const auto* c = std::get_if<ComplexMatrix>(&data_)) return *c;
    throw std::logic_error("operator is stored as real");
}

double HermitianOperator::hermiticity_error() const {
    return std::visit(
        [](const auto& m) {
            if (m.size() == 0) return 0.0;
            return (m - m.adjoint()).cwiseAbs().maxCoeff();
        },
        data_);
}

ComplexMatrix pauli(Axis a) {
    ComplexMatrix s(2, 2);
    switch (a) {
    case Axis::x: s << 0, 1, 1, 0; break;
    case Axis::y: s << 0, Complex(0, -1), Complex(0, 1), 0; break;
    case Axis::z: s << 1, 0, 0, -1; break;
    }
    return s;
}

HermitianOperator pauli_slot_operator(int n_spins, int slot, Axis axis) {
    check_sites(n_spins, kDefaultMaxSites);
    if (slot < 0 || slot >= n_spins) throw std::out_of_range("slot index out of range");
    const auto dim = Eigen::Index{1} << n_spins;
    const Factor f[] = {{slot, axis}};
    if (axis == Axis::y) {
        ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
        add_pauli_string(m, n_spins, std::span<const Factor>(f), 1.0);
        return HermitianOperator(std::move(m));
    }
    RealMatrix m = RealMatrix::Zero(dim, dim);
    add_pauli_string(m, n_spins, std::span<const Factor>(f), 1.0);
    return HermitianOperator(std::move(m));
}

HermitianOperator pauli_site_operator(int L, int site, Axis axis) {
    if (L < 1) throw std::invalid_argument("L must be >= 1");
    if (site < 1 || site > L) throw std::out_of_range("site index out of range 1..L");
    return pauli_slot_operator(L, site - 1, axis);
}

HermitianOperator build_bath_hamiltonian(const SpinChainParams& params, int max_sites) {
    params.validate();
    check_sites(params.L, max_sites);
    const auto dim = Eigen::Index{1} << params.L;
    RealMatrix H = RealMatrix::Zero(dim, dim);
    add_bath_terms(H, params.L, 0, params);
    return HermitianOperator(std::move(H));
}

Matrix2c system_hamiltonian(const SystemParams& sys) {
    sys.validate();
    return 0.5 * sys.omega0 * pauli(Axis::z);
}

HermitianOperator coupling_bath_operator(int L, const CouplingTerm& term) {
    return pauli_site_operator(L, term.site, term.bath_axis);
}

namespace {

template <typename Scalar>
HermitianOperator assemble_total(const SystemParams& sys, const SpinChainParams& bath,
                                 const CouplingSpec& coupling) {
    const int n = bath.L + 1;
    const auto dim = Eigen::Index{1} << n;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> H =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(dim, dim);
    const Factor sz[] = {{0, Axis::z}};
    add_pauli_string(H, n, std::span<const Factor>(sz), 0.5 * sys.omega0);
    add_bath_terms(H, n, 1, bath);
    for (const auto& t : coupling.terms) {
        const Factor sb[] = {{0, t.system_axis}, {t.site, t.bath_axis}};
        add_pauli_string(H, n, std::span<const Factor>(sb), coupling.kappa);
    }
    return HermitianOperator(std::move(H));
}

} // namespace

HermitianOperator build_total_hamiltonian(const SystemParams& sys, const SpinChainParams& bath,
                                          const CouplingSpec& coupling, int max_sites) {
    sys.validate();
    bath.validate();
    coupling.validate(bath.L);
    check_sites(bath.L, max_sites);
    check_sites(bath.L + 1, max_sites + 1);
    if (coupling.is_real()) return assemble_total<double>(sys, bath, coupling);
    return assemble_total<Complex>(sys, bath, coupling);
}

} // namespace ethbath
