// dynamics.hpp: exact probe+bath evolution, bath correlation functions, the
// two-level Lindblad model and trajectory diagnostics.

#pragma once

#include "ethbath/common.hpp"
#include "ethbath/eth.hpp"
#include "ethbath/hamiltonian.hpp"
#include "ethbath/spectra.hpp"
#include "ethbath/states.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ethbath {

struct TimeGrid {
    double t0{0.0};
    double t_max{0.0};
    double dt{1.0};
    Eigen::Index count{1};

    // t_max must be an integer multiple of dt (to 1e-9 relative).
    static TimeGrid uniform(double t_max, double dt);
    double operator[](Eigen::Index i) const { return t0 + static_cast<double>(i) * dt; }
    Eigen::VectorXd times() const;
};

struct BathCorrelation {
    Eigen::VectorXd times;
    Eigen::VectorXcd values;
    std::string preparation;
    double variance{0.0}; // <B^2> - <B>^2 in the prepared state
};

struct EffectiveSystem {
    Matrix2c H;
    double bohr_frequency{0.0}; // gap of H
};

// H_S' = (omega0/2) sigma^z + kappa <B> S, with S = sigma^x unless given.
EffectiveSystem mean_field_shift(const SystemParams& sys, double kappa, double B_expect);
EffectiveSystem mean_field_shift(const SystemParams& sys, double kappa, double B_expect, const Matrix2c& S);

// <psi|B|psi> for psi in the energy basis and B in the eigenbasis.
double expectation(const DenseMatrix& op_eig, const PureState& psi);

// C(t, 0) = <psi|B(t) B(0)|psi> - <psi|B|psi>^2 by spectral sums.
BathCorrelation bath_correlation_function(const EigenSystem& eig, const DenseMatrix& B_eig,
                                          const PureState& psi, const TimeGrid& grid);

// C(t + s, s): the same quantity for the state evolved to time s.
BathCorrelation bath_correlation_function(const EigenSystem& eig, const DenseMatrix& B_eig,
                                          const PureState& psi, const TimeGrid& grid, double s);

// C(tau) = int dw exp(-i w tau) exp(beta w / 2) |f(w)|^2, trapezoid over bins.
BathCorrelation bcf_from_spectral_function(const SpectralFunctionTable& table, double beta,
                                           const TimeGrid& grid);

// Half width at half maximum of |C|, linearly interpolated; +inf if |C| never drops to half.
double half_width_half_max(const BathCorrelation& bcf);

struct JumpOperator {
    double omega{0.0};
    Matrix2c op;
};

// Bohr-frequency components of S in the eigenbasis of H: S(w) lowers the
// energy by w. S(0) is included only when nonzero.
std::vector<JumpOperator> lowering_operators(const Matrix2c& H, const Matrix2c& S);

struct LindbladChannel {
    double omega{0.0};
    Matrix2c op;
    double rate{0.0};
};

struct LindbladModel {
    Matrix2c H;
    double bohr_frequency{0.0};
    std::vector<LindbladChannel> channels;

    // sum of rates at +-bohr_frequency
    double population_rate() const;
    double max_rate() const;
};

struct LindbladOptions {
    bool include_zero_frequency{false};
};

// Channels S(w) with rate(w). Throws NumericalError on a negative rate.
LindbladModel build_lindblad(const EffectiveSystem& hs, const std::vector<JumpOperator>& jumps,
                             const std::function<double(double)>& rate, const LindbladOptions& opts = {});

// Several system operators with a rate matrix gamma^{mu nu}(w); each
// eigenvector of gamma becomes one channel, negative eigenvalues clipped to 0.
LindbladModel build_lindblad_multi(const EffectiveSystem& hs, std::span<const Matrix2c> system_ops,
                                   const std::function<ComplexMatrix(double)>& rate_matrix,
                                   const LindbladOptions& opts = {}, double* clipped = nullptr);

Matrix2c lindblad_rhs(const LindbladModel& model, const Matrix2c& rho);

// Stationary state of the generator (null vector of the 4x4 superoperator).
Matrix2c lindblad_stationary_state(const LindbladModel& model);

enum class Provenance { exact, lindblad };

struct TrajectoryChecks {
    double max_trace_error{0.0};
    double min_eigenvalue{1.0};
    double max_hermiticity_error{0.0};
    double max_norm_error{0.0}; // exact evolution only
};

struct ReducedTrajectory {
    Eigen::VectorXd times;
    std::vector<Matrix2c> rho;
    Provenance provenance{Provenance::lindblad};
    TrajectoryChecks checks;

    Eigen::Index size() const { return times.size(); }
    Eigen::VectorXd population(int level) const;
    Eigen::VectorXd coherence() const; // |rho_01|
};

struct IntegratorOptions {
    // RK4 step; zero picks the largest step dividing dt with h <= 0.01 / max(w', gamma_pop)
    double step{0.0};
    double invariant_tolerance{1e-6};
};

ReducedTrajectory lindblad_evolve(const LindbladModel& model, const Matrix2c& rho0, const TimeGrid& grid,
                                  const IntegratorOptions& opts = {});

// psi0 in the total computational basis, probe in the most significant slot.
ReducedTrajectory exact_evolve(const EigenSystem& total, const PureState& psi0, const TimeGrid& grid);

Matrix2c partial_trace_bath(const Eigen::VectorXcd& psi);
Matrix2c partial_trace_bath(const ComplexMatrix& rho);

// rho_MF proportional to tr_B exp(-beta H) over the total eigensystem.
Matrix2c mean_force_state(const EigenSystem& total, double beta);

// Gibbs state of a 2x2 Hamiltonian.
Matrix2c gibbs_state(const Matrix2c& H, double beta);

double trace_distance(const Matrix2c& rho, const Matrix2c& sigma);

Eigen::VectorXd trace_distance_series(const ReducedTrajectory& a, const ReducedTrajectory& b);

// (1/t') int_0^t' T(t) dt by trapezoid; t_final must be a grid point.
double time_averaged_trace_distance(const ReducedTrajectory& a, const ReducedTrajectory& b, double t_final);

// Trapezoid mean of y over the grid points in [t_from, t_to].
double time_average(const Eigen::VectorXd& times, const Eigen::VectorXd& y, double t_from, double t_to);

struct ExponentialFit {
    double rate{0.0};
    double residual{0.0}; // rms of the log-residuals
    Eigen::Index points{0};
    double t_end{0.0};
};

// Slope of log|y - asymptote| over the leading stretch where |y - asymptote|
// stays above 5% of its initial value and, given an expected rate, within
// three expected e-foldings. Needs at least 20 points there.
ExponentialFit fit_exponential_rate(const Eigen::VectorXd& times, const Eigen::VectorXd& y, double asymptote,
                                   std::optional<double> expected_rate = std::nullopt);

struct LevyPoint {
    double epsilon{0.0};
    double exceedance{0.0}; // fraction of (sample, time) pairs with deviation > epsilon
    double bound{0.0};
};

struct TypicalityReport {
    Eigen::Index window_dim{0};
    double microcanonical_B{0.0};
    Eigen::VectorXd max_dev_B;       // per sample, max_t |<B(t)> - mc average|
    Eigen::VectorXd max_dev_C;       // per sample, max_t |C(t,0) - window-averaged C|
    Eigen::VectorXd long_time_dev_B; // per sample, |time average of <B(t)> - B(E)|
    double deviation_std{0.0};
    std::vector<LevyPoint> levy;
    bool levy_violated{false};

    double median_spread() const;
};

double levy_bound(Eigen::Index d, double epsilon, double op_norm);

TypicalityReport typicality_spread(const EigenSystem& eig, const DenseMatrix& B_eig, double E0, double deltaE,
                                   int n_samples, std::uint64_t seed, const TimeGrid& grid,
                                   double op_norm = 1.0);

} // namespace ethbath
