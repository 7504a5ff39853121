// eth.hpp: eigenstate-thermalization data extracted from an eigenbasis
// operator: diagonal profiles, binned spectral functions |f(E, w)|^2, the
// dissipation rates they imply and multi-operator rate matrices.

#pragma once

#include "ethbath/common.hpp"
#include "ethbath/spectra.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ethbath {

struct DiagonalProfile {
    Eigen::VectorXd energies;
    Eigen::VectorXd diagonals;
    // mean |B_{n+1,n+1} - B_nn| over the central states
    double fluctuation{0.0};
    Eigen::Index central_begin{0};
    Eigen::Index central_count{0};
};

// The central window holds central_fraction of the states, widened to at least
// min_central_states + 1 states when the spectrum allows it.
DiagonalProfile diagonal_profile(const DenseMatrix& op_eig, const EigenSystem& eig,
                                 double central_fraction = 0.1, int min_central_states = 20);

// Frequency-binned |f(E0, w)|^2. Bin k is centred on k * bin_width and covers
// [(k - 1/2), (k + 1/2)) * bin_width, so bins are mirrored about w = 0.
struct SpectralFunctionTable {
    double center_energy{0.0};
    double window{0.0};
    double bin_width{0.0};
    Eigen::VectorXd omega;
    Eigen::VectorXd values;
    std::vector<std::size_t> counts;
    double log_density{0.0};   // S(E0) used as the e^S estimator factor
    double normalization{1.0}; // accumulated constant from normalization
    double beta{0.0};
    bool normalized{false};
    bool symmetrized{false};
    // max |f2(w) - f2(-w)| / max f2 before symmetrization
    double raw_asymmetry{0.0};

    Eigen::Index size() const { return omega.size(); }
    bool empty_bin(Eigen::Index k) const { return counts[static_cast<std::size_t>(k)] == 0; }
    double support_min() const { return omega.size() ? omega(0) : 0.0; }
    double support_max() const { return omega.size() ? omega(omega.size() - 1) : 0.0; }

    // Linear interpolation between bin centres. Throws std::out_of_range
    // outside the support and std::domain_error next to an empty bin.
    double interpolate(double w) const;

    // Synthetic table on a uniform grid (every bin counted once).
    static SpectralFunctionTable tabulated(Eigen::VectorXd omega, Eigen::VectorXd values,
                                           double beta = 0.0);
};

struct SpectralOptions {
    // floor on distinct eigenstates entering the selected pairs
    std::size_t min_states{100};
    // S(E0); when absent, log of the number of eigenstates with E_n in the window
    std::optional<double> log_density;
};

// Pairs n != m with (E_n + E_m)/2 inside [E0 - window/2, E0 + window/2]; each
// bin holds exp(S) * mean |B_nm|^2 over its pairs.
SpectralFunctionTable spectral_function(const DenseMatrix& op_eig, const EigenSystem& eig, double E0,
                                        double window, double freq_bin,
                                        const SpectralOptions& opts = {});

// Replaces each bin by the mean of the mirrored pair (w, -w).
SpectralFunctionTable symmetrize(const SpectralFunctionTable& table);

// trapezoid of exp(beta w / 2) |f|^2 over the bins
double spectral_integral(const SpectralFunctionTable& table, double beta);

// Rescales so the integral above equals varB.
SpectralFunctionTable normalize_spectral_function(const SpectralFunctionTable& table, double varB,
                                                  double beta);

// <n|B^2|n> - <n|B|n>^2 for eigenstate n, read off the eigenbasis operator.
double eigenstate_variance(const DenseMatrix& op_eig, Eigen::Index n);

// gamma(w) = 2 pi kappa^2 exp(beta w / 2) |f(E, w)|^2 on a symmetrized table.
double transition_rate(const SpectralFunctionTable& table, double kappa, double beta, double omega);

struct FiniteSizeRate {
    double value{0.0};
    bool clipped{false};
};

// Adds the heat-capacity and energy-derivative corrections to the rate.
FiniteSizeRate finite_size_transition_rate(const SpectralFunctionTable& table,
                                           const SpectralFunctionTable& dtable_dE, double kappa,
                                           double beta, double capacity, double omega);

// (upper - lower) / (2 delta) on the frequency bins both tables share.
SpectralFunctionTable energy_derivative(const SpectralFunctionTable& lower,
                                        const SpectralFunctionTable& upper, double delta);

// J(w) = 2 pi sinh(beta w / 2) |f(E, w)|^2
double caldeira_leggett_density(const SpectralFunctionTable& table, double beta, double omega);

enum class RateOrder { leading, finite_size };

// Tabulated gamma(w) on the table's frequency grid with linear interpolation.
// Points backed by empty bins are invalid; evaluating next to one throws
// std::domain_error.
struct RateFunction {
    Eigen::VectorXd omega;
    Eigen::VectorXd gamma;
    std::vector<char> valid;
    double kappa{0.0};
    double beta{0.0};
    RateOrder order{RateOrder::leading};
    std::size_t clipped_points{0};

    double operator()(double w) const;
};

RateFunction make_rate_function(const SpectralFunctionTable& table, double kappa, double beta);
RateFunction make_finite_size_rate_function(const SpectralFunctionTable& table,
                                            const SpectralFunctionTable& dtable_dE, double kappa,
                                            double beta, double capacity);

struct RateMatrix {
    double omega{0.0};
    std::size_t count{0};
    ComplexMatrix gamma;            // Hermitized 2 pi kappa^2 e^{beta w/2} F^{mu nu}
    Eigen::VectorXd eigenvalues;    // ascending, unclipped
    ComplexMatrix unitary;          // columns diagonalize gamma
    double min_eigenvalue{0.0};
    double clipped{0.0};            // magnitude removed by clipping at zero
    double hermiticity_residual{0.0};
    bool flagged{false};            // residual > 1e-6 before Hermitization

    Eigen::VectorXd clipped_eigenvalues() const { return eigenvalues.cwiseMax(0.0); }
};

struct MultiRateOptions {
    std::optional<double> log_density;
    // per-operator normalization constants c_mu; F^{mu nu} is scaled by sqrt(c_mu c_nu)
    std::vector<double> normalization;
};

// One rate matrix per nonempty frequency bin of the shared pair selection.
std::vector<RateMatrix> rate_matrix_multi(std::span<const DenseMatrix> ops_eig, const EigenSystem& eig,
                                          double E0, double window, double freq_bin, double kappa,
                                          double beta, const MultiRateOptions& opts = {});

// Fermi-golden-rule rates out of the eigenstates with E_n in the window:
// gamma(w_k) = 2 pi kappa^2 / (d bin) * sum_{n in window, m} |B_nm|^2 [E_m - E_n in bin k].
// No symmetrization; detailed balance here is an emergent property.
struct GoldenRuleRates {
    Eigen::VectorXd omega;
    Eigen::VectorXd gamma;
    std::vector<std::size_t> counts;
    std::size_t window_states{0};

    double operator()(double w) const;
};

GoldenRuleRates golden_rule_rates(const DenseMatrix& op_eig, const EigenSystem& eig, double E0,
                                  double window, double freq_bin, double kappa);

} // namespace ethbath
