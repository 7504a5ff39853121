// thermo.hpp: density of states, Boltzmann entropy fit, microcanonical and
// canonical temperatures, heat capacity.

#pragma once

#include "ethbath/common.hpp"

namespace ethbath {

struct DensityOfStates {
    Eigen::VectorXd centers;
    Eigen::VectorXd counts; // Omega(E) * dE per bin
    double bin_width{0.0};
};

// Default bin width: bandwidth / 100, but never below 20 mean level spacings.
double default_dos_bin_width(const Eigen::VectorXd& energies);

// Histogram over [E_min, E_max]. With strict set the bin width must exceed the
// mean level spacing and stay below 10% of the bandwidth.
DensityOfStates density_of_states(const Eigen::VectorXd& energies, double bin_width,
                                  bool strict = true);

// S(E) = log(Omega(E) dE) as a polynomial, stored in x = (E - center) / scale.
struct EntropyFit {
    Eigen::VectorXd coeffs; // ascending powers of x
    int degree{2};
    double center{0.0};
    double scale{1.0};
    double e_lo{0.0};
    double e_hi{0.0};
    double max_residual{0.0};

    bool contains(double E) const { return E >= e_lo && E <= e_hi; }
    double entropy(double E) const;
    double beta(double E) const;       // dS/dE
    double dbeta_dE(double E) const;   // d^2S/dE^2
};

// Least-squares fit of log(count) against bin centre over nonempty bins,
// weighted by count (the inverse variance of a Poisson log-count).
EntropyFit entropy_fit(const DensityOfStates& dos, int degree = 2);

double inverse_temperature(const EntropyFit& fit, double E);

// C = dE/dT = -beta^2 (dbeta/dE)^{-1}. Returns +inf when dbeta/dE = 0.
double heat_capacity(const EntropyFit& fit, double E);

// Energy at which the fitted beta(E) equals beta (bisection on the fit domain).
double energy_at_inverse_temperature(const EntropyFit& fit, double beta);

// <H>_beta = sum E_n exp(-beta E_n) / Z, evaluated with a max-shifted exponent.
double canonical_energy(const Eigen::VectorXd& energies, double beta);

// Solves <H>_beta = target by bisection on [-beta_max, beta_max].
// beta_max <= 0 selects the default 50 / bandwidth.
double canonical_inverse_temperature(const Eigen::VectorXd& energies, double target,
                                     double beta_max = 0.0);

} // namespace ethbath
