// states.cpp

#include "ethbath/states.hpp"

#include "ethbath/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ethbath {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_basis(const PureState& psi, Basis expected, const char* what) {
    if (psi.basis != expected) throw std::invalid_argument(std::string(what) + ": state is in the wrong basis");
}

// golden-section refinement of a bracketed extremum; sign = +1 for a minimum
double refine_extremum(const SpinChainParams& bath, double lo, double hi, double sign) {
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - g * (hi - lo);
    double b = lo + g * (hi - lo);
    double fa = sign * product_state_energy(bath, a);
    double fb = sign * product_state_energy(bath, b);
    for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
        if (fa < fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = sign * product_state_energy(bath, a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = sign * product_state_energy(bath, b);
        }
    }
    return 0.5 * (lo + hi);
}

std::pair<double, double> extremal_angles(const SpinChainParams& bath) {
    constexpr int n = 4096;
    const double h = kTwoPi / n;
    int imin = 0, imax = 0;
    double emin = product_state_energy(bath, 0.0), emax = emin;
    for (int i = 1; i < n; ++i) {
        const double e = product_state_energy(bath, i * h);
        if (e < emin) emin = e, imin = i;
        if (e > emax) emax = e, imax = i;
    }
    return {refine_extremum(bath, (imin - 1) * h, (imin + 1) * h, 1.0),
            refine_extremum(bath, (imax - 1) * h, (imax + 1) * h, -1.0)};
}

} // namespace

MicrocanonicalWindow microcanonical_window(const Eigen::VectorXd& energies, double E0, double width) {
    if (!(width >= 0.0)) throw std::invalid_argument("microcanonical window width must be nonnegative");
    MicrocanonicalWindow w;
    w.E0 = E0;
    w.width = width;
    for (Eigen::Index n = 0; n < energies.size(); ++n) {
        if (energies(n) >= E0 - 0.5 * width && energies(n) <= E0 + 0.5 * width) w.members.push_back(n);
    }
    return w;
}

Eigen::Index nearest_eigenstate(const Eigen::VectorXd& energies, double E_target) {
    if (energies.size() == 0) throw std::invalid_argument("nearest_eigenstate: empty spectrum");
    Eigen::Index best = 0;
    for (Eigen::Index n = 1; n < energies.size(); ++n) {
        if (std::abs(energies(n) - E_target) < std::abs(energies(best) - E_target)) best = n;
    }
    return best;
}

PureState eigenstate_preparation(const EigenSystem& eig, double E_target) {
    PureState psi;
    psi.basis = Basis::energy;
    psi.amplitudes = Eigen::VectorXcd::Zero(eig.dim());
    psi.amplitudes(nearest_eigenstate(eig.values, E_target)) = 1.0;
    return psi;
}

PureState typical_microcanonical_state(const MicrocanonicalWindow& window, Eigen::Index dim,
                                       std::uint64_t seed, bool complex_amplitudes) {
    if (window.members.empty()) {
        throw std::invalid_argument("typical state: empty microcanonical window around E0 = " +
                                    std::to_string(window.E0));
    }
    const CounterRng rng(seed);
    PureState psi;
    psi.basis = Basis::energy;
    psi.amplitudes = Eigen::VectorXcd::Zero(dim);
    for (std::size_t j = 0; j < window.members.size(); ++j) {
        const Eigen::Index n = window.members[j];
        if (complex_amplitudes) {
            psi.amplitudes(n) = Complex(rng.normal(2 * j), rng.normal(2 * j + 1));
        } else {
            psi.amplitudes(n) = rng.normal(j);
        }
    }
    const double nrm = psi.amplitudes.norm();
    if (!(nrm > 0.0)) throw NumericalError("typical state: zero amplitude draw");
    psi.amplitudes /= nrm;
    return psi;
}

PureState typical_microcanonical_state(const EigenSystem& eig, double E0, double deltaE,
                                       std::uint64_t seed, bool complex_amplitudes) {
    return typical_microcanonical_state(microcanonical_window(eig.values, E0, deltaE), eig.dim(), seed,
                                        complex_amplitudes);
}

double product_state_energy(const SpinChainParams& bath, double theta) {
    const double z = std::cos(theta);
    const double x = std::sin(theta);
    const double L = bath.L;
    return bath.J * (L - 1.0) * z * z + L * (bath.hz * z + bath.hx * x) + (bath.h1 + bath.hL) * z;
}

std::pair<double, double> product_energy_range(const SpinChainParams& bath) {
    const auto [tmin, tmax] = extremal_angles(bath);
    return {product_state_energy(bath, tmin), product_state_energy(bath, tmax)};
}

ProductState product_state_with_energy(const SpinChainParams& bath, double E_target, double tolerance) {
    bath.validate();
    auto [lo, hi] = extremal_angles(bath);
    const double emin = product_state_energy(bath, lo);
    const double emax = product_state_energy(bath, hi);
    if (E_target < emin - tolerance || E_target > emax + tolerance) {
        throw std::out_of_range("product state: target energy " + std::to_string(E_target) +
                                " outside the reachable interval [" + std::to_string(emin) + ", " +
                                std::to_string(emax) + "]");
    }
    // E rises from emin to emax along the arc lo -> hi
    if (hi < lo) hi += kTwoPi;
    double theta = lo;
    double e = emin;
    for (int it = 0; it < 200; ++it) {
        theta = 0.5 * (lo + hi);
        e = product_state_energy(bath, theta);
        if (std::abs(e - E_target) <= 0.5 * tolerance) break;
        if (e < E_target) lo = theta;
        else hi = theta;
    }
    if (std::abs(e - E_target) > tolerance) {
        theta = std::abs(product_state_energy(bath, lo) - E_target) < std::abs(product_state_energy(bath, hi) - E_target) ? lo : hi;
        e = product_state_energy(bath, theta);
    }

    const Complex up = std::cos(0.5 * theta);
    const Complex down = std::sin(0.5 * theta);
    const Eigen::Index dim = Eigen::Index{1} << bath.L;
    ProductState out;
    out.theta = std::fmod(theta, kTwoPi);
    out.energy = e;
    out.state.basis = Basis::computational;
    out.state.amplitudes.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        Complex a = 1.0;
        for (int s = 0; s < bath.L; ++s) a *= ((i >> s) & 1) ? down : up;
        out.state.amplitudes(i) = a;
    }
    return out;
}

PureState system_initial_state(SystemState kind) {
    PureState psi;
    psi.basis = Basis::computational;
    psi.amplitudes = Eigen::Vector2cd(1.0, 0.0);
    if (kind == SystemState::superposition) psi.amplitudes = Eigen::Vector2cd(1.0, 1.0) / std::sqrt(2.0);
    return psi;
}

Matrix2c density_matrix(const PureState& two_level) {
    if (two_level.dim() != 2) throw std::invalid_argument("density_matrix: expected a two-level state");
    return two_level.amplitudes * two_level.amplitudes.adjoint();
}

PureState to_energy_basis(const PureState& psi, const EigenSystem& eig) {
    if (psi.basis == Basis::energy) return psi;
    if (psi.dim() != eig.dim()) throw std::invalid_argument("to_energy_basis: dimension mismatch");
    PureState out;
    out.basis = Basis::energy;
    out.amplitudes = std::visit([&](const auto& V) -> Eigen::VectorXcd { return V.adjoint() * psi.amplitudes; },
                                eig.vectors);
    return out;
}

PureState to_computational_basis(const PureState& psi, const EigenSystem& eig) {
    if (psi.basis == Basis::computational) return psi;
    if (psi.dim() != eig.dim()) throw std::invalid_argument("to_computational_basis: dimension mismatch");
    PureState out;
    out.basis = Basis::computational;
    out.amplitudes = std::visit([&](const auto& V) -> Eigen::VectorXcd { return V * psi.amplitudes; },
                                eig.vectors);
    return out;
}

PureState tensor_product(const PureState& sys, const PureState& bath) {
    check_basis(sys, Basis::computational, "tensor_product");
    check_basis(bath, Basis::computational, "tensor_product");
    PureState out;
    out.basis = Basis::computational;
    out.amplitudes.resize(sys.dim() * bath.dim());
    for (Eigen::Index a = 0; a < sys.dim(); ++a) {
        out.amplitudes.segment(a * bath.dim(), bath.dim()) = sys.amplitudes(a) * bath.amplitudes;
    }
    return out;
}

} // namespace ethbath
