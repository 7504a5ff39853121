// pipeline.hpp: experiment stages shared by the runner and the end-to-end tests.

#pragma once

#include "ethbath/config.hpp"
#include "ethbath/dynamics.hpp"
#include "ethbath/eigen_cache.hpp"
#include "ethbath/eth.hpp"
#include "ethbath/thermo.hpp"

#include <optional>
#include <string>

namespace ethbath {

EigenSystem bath_eigensystem(const EigenCache& cache, const SpinChainParams& bath, int max_sites = kDefaultMaxSites);
EigenSystem total_eigensystem(const EigenCache& cache, const SystemParams& sys, const SpinChainParams& bath,
                              const CouplingSpec& coupling, int max_sites = kDefaultMaxSites);

struct BathThermo {
    EntropyFit fit;
    double E0{0.0};
    double beta{0.0};
    double capacity{0.0};
};

// Entropy fit of the spectrum and the target energy: state.E if set, else the
// energy where the fitted beta equals state.beta (default 0).
BathThermo bath_thermo(const Eigen::VectorXd& energies, const EthSpec& eth, const StateSpec& state);

struct EthRateModel {
    SpectralFunctionTable raw;   // unsymmetrized, unnormalized
    SpectralFunctionTable table; // symmetrized and normalized
    std::optional<SpectralFunctionTable> dtable_dE;
    RateFunction gamma;
    std::optional<RateFunction> gamma_fs;
    double varB{0.0};
    Eigen::Index reference_state{0};
    BathThermo thermo;
};

// Spectral function at thermo.E0, symmetrized and normalized to the variance
// of B in the eigenstate nearest E0, and the leading-order rates. With
// finite_size the tables at E0 +- window give the energy derivative.
EthRateModel eth_rate_model(const EigenSystem& eig, const DenseMatrix& B_eig, const BathThermo& thermo,
                            const EthSpec& eth, double freq_bin, double kappa, bool finite_size = false);

struct BathPreparation {
    PureState energy_basis;
    PureState computational;
    double B_expect{0.0};
    double energy{0.0};
};

BathPreparation prepare_bath_state(const EigenSystem& eig, const SpinChainParams& bath, const DenseMatrix& B_eig,
                                   const StateSpec& state, double E0);

struct DynamicsResult {
    EffectiveSystem hs;
    LindbladModel model;
    ReducedTrajectory exact;
    ReducedTrajectory lindblad;
    double gamma_pop{0.0};
    Matrix2c stationary;
    std::optional<ExponentialFit> fit_exact;
    std::optional<ExponentialFit> fit_lindblad;
    Eigen::VectorXd trace_distance;
    double avg_trace_distance{0.0};
    double t_final{0.0};
    // mean-force comparison at the canonical temperature of the initial total energy
    double total_energy{0.0};
    double beta_total{0.0};
    Matrix2c mean_force;
    Matrix2c gibbs;
    double p0_long_time{0.0};
};

struct DynamicsInputs {
    SystemParams system;
    CouplingTerm term;
    double kappa{0.15};
    SystemState system_state{SystemState::polarized};
    TimeGrid grid;
    double t_final{0.0};
    bool include_zero_frequency{false};
    bool fit_rates{true};
    bool mean_force{true};
};

// Exact evolution from |sys> (x) |bath> against the Lindblad model built from
// the given rates. rates may come from a different bath size than the state.
DynamicsResult run_dynamics(const EigenSystem& total, const BathPreparation& bath_state, const RateFunction& rates,
                            const DynamicsInputs& in);

} // namespace ethbath
