// states.hpp: bath and probe pure states.

#pragma once

#include "ethbath/common.hpp"
#include "ethbath/hamiltonian.hpp"
#include "ethbath/spectra.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace ethbath {

enum class Basis { computational, energy };

struct PureState {
    Eigen::VectorXcd amplitudes;
    Basis basis{Basis::computational};

    Eigen::Index dim() const { return amplitudes.size(); }
    double norm() const { return amplitudes.norm(); }
};

// Members are exactly the indices with E_n in [E0 - width/2, E0 + width/2].
struct MicrocanonicalWindow {
    double E0{0.0};
    double width{0.0};
    std::vector<Eigen::Index> members;

    Eigen::Index dim() const { return static_cast<Eigen::Index>(members.size()); }
};

MicrocanonicalWindow microcanonical_window(const Eigen::VectorXd& energies, double E0, double width);

// Eigenstate with E_n nearest E_target; ties go to the lower index.
PureState eigenstate_preparation(const EigenSystem& eig, double E_target);
Eigen::Index nearest_eigenstate(const Eigen::VectorXd& energies, double E_target);

// Gaussian amplitudes on the window members (see rng.hpp for the stream),
// normalized. With complex_amplitudes the real and imaginary parts take
// consecutive normal deviates.
PureState typical_microcanonical_state(const EigenSystem& eig, double E0, double deltaE,
                                       std::uint64_t seed, bool complex_amplitudes = false);
PureState typical_microcanonical_state(const MicrocanonicalWindow& window, Eigen::Index dim,
                                       std::uint64_t seed, bool complex_amplitudes = false);

// <theta|^L H_B |theta>^L for |theta> = cos(theta/2)|up> + sin(theta/2)|down>.
double product_state_energy(const SpinChainParams& bath, double theta);
// [min, max] of product_state_energy over theta.
std::pair<double, double> product_energy_range(const SpinChainParams& bath);

struct ProductState {
    PureState state;
    double theta{0.0};
    double energy{0.0};
};

// Throws std::out_of_range naming the reachable interval when E_target is outside it.
ProductState product_state_with_energy(const SpinChainParams& bath, double E_target,
                                       double tolerance = 1e-10);

enum class SystemState { polarized, superposition };

// |0> or (|0> + |1>)/sqrt(2).
PureState system_initial_state(SystemState kind);

Matrix2c density_matrix(const PureState& two_level);

PureState to_energy_basis(const PureState& psi, const EigenSystem& eig);
PureState to_computational_basis(const PureState& psi, const EigenSystem& eig);

// |sys> (x) |bath> with the probe in the most significant slot; both computational.
PureState tensor_product(const PureState& sys, const PureState& bath);

} // namespace ethbath
