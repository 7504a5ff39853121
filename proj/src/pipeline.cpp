// pipeline.cpp

#include "ethbath/pipeline.hpp"

#include <cmath>
#include <limits>

namespace ethbath {

EigenSystem bath_eigensystem(const EigenCache& cache, const SpinChainParams& bath, int max_sites) {
    return cache.get_or_compute(bath_spec_text(bath), [&] { return build_bath_hamiltonian(bath, max_sites); });
}

EigenSystem total_eigensystem(const EigenCache& cache, const SystemParams& sys, const SpinChainParams& bath,
                              const CouplingSpec& coupling, int max_sites) {
    return cache.get_or_compute(total_spec_text(sys, bath, coupling),
                                [&] { return build_total_hamiltonian(sys, bath, coupling, max_sites); });
}

BathThermo bath_thermo(const Eigen::VectorXd& energies, const EthSpec& eth, const StateSpec& state) {
    const bool user_width = eth.dos_bin_width.has_value();
    const double width = user_width ? *eth.dos_bin_width : default_dos_bin_width(energies);
    BathThermo t;
    t.fit = entropy_fit(density_of_states(energies, width, user_width), eth.entropy_degree);
    t.E0 = state.E ? *state.E : energy_at_inverse_temperature(t.fit, state.beta.value_or(0.0));
    t.beta = t.fit.beta(t.E0);
    t.capacity = heat_capacity(t.fit, t.E0);
    return t;
}

EthRateModel eth_rate_model(const EigenSystem& eig, const DenseMatrix& B_eig, const BathThermo& thermo,
                            const EthSpec& eth, double freq_bin, double kappa, bool finite_size) {
    auto options_at = [&](double E) {
        SpectralOptions o;
        o.min_states = eth.min_states;
        if (thermo.fit.contains(E)) o.log_density = thermo.fit.entropy(E);
        return o;
    };
    EthRateModel m;
    m.thermo = thermo;
    m.raw = spectral_function(B_eig, eig, thermo.E0, eth.window, freq_bin, options_at(thermo.E0));
    m.reference_state = nearest_eigenstate(eig.values, thermo.E0);
    m.varB = eigenstate_variance(B_eig, m.reference_state);
    m.table = normalize_spectral_function(symmetrize(m.raw), m.varB, thermo.beta);
    m.gamma = make_rate_function(m.table, kappa, thermo.beta);
    if (finite_size) {
        const double d = eth.window;
        auto side = [&](double E) {
            SpectralFunctionTable s = symmetrize(spectral_function(B_eig, eig, E, eth.window, freq_bin, options_at(E)));
            s.values *= m.table.normalization;
            s.normalization = m.table.normalization;
            s.normalized = true;
            return s;
        };
        m.dtable_dE = energy_derivative(side(thermo.E0 - d), side(thermo.E0 + d), d);
        // a vanishing or unphysical capacity switches the Gaussian factor off
        const double C = (thermo.capacity > 0.0 && std::isfinite(thermo.capacity))
                             ? thermo.capacity
                             : std::numeric_limits<double>::infinity();
        m.gamma_fs = make_finite_size_rate_function(m.table, *m.dtable_dE, kappa, thermo.beta, C);
    }
    return m;
}

BathPreparation prepare_bath_state(const EigenSystem& eig, const SpinChainParams& bath, const DenseMatrix& B_eig,
                                   const StateSpec& state, double E0) {
    BathPreparation p;
    switch (state.kind) {
    case StateKind::eigenstate:
        p.energy_basis = eigenstate_preparation(eig, E0);
        break;
    case StateKind::typical_mc:
        p.energy_basis = typical_microcanonical_state(eig, E0, state.deltaE, state.seed, state.complex_amplitudes);
        break;
    case StateKind::product:
        p.energy_basis = to_energy_basis(product_state_with_energy(bath, E0, 1e-10).state, eig);
        break;
    }
    p.computational = to_computational_basis(p.energy_basis, eig);
    p.B_expect = expectation(B_eig, p.energy_basis);
    p.energy = p.energy_basis.amplitudes.cwiseAbs2().dot(eig.values);
    return p;
}

DynamicsResult run_dynamics(const EigenSystem& total, const BathPreparation& bath_state, const RateFunction& rates,
                            const DynamicsInputs& in) {
    DynamicsResult r;
    const Matrix2c S = pauli(in.term.system_axis);
    r.hs = mean_field_shift(in.system, in.kappa, bath_state.B_expect, S);
    LindbladOptions lo;
    lo.include_zero_frequency = in.include_zero_frequency;
    r.model = build_lindblad(r.hs, lowering_operators(r.hs.H, S), [&](double w) { return rates(w); }, lo);
    // the Hamiltonian coupling carries kappa; the rate function already includes kappa^2
    r.gamma_pop = r.model.population_rate();
    r.stationary = lindblad_stationary_state(r.model);

    const PureState sys0 = system_initial_state(in.system_state);
    const PureState psi0 = tensor_product(sys0, bath_state.computational);
    r.exact = exact_evolve(total, psi0, in.grid);
    r.lindblad = lindblad_evolve(r.model, density_matrix(sys0), in.grid);

    if (in.fit_rates) {
        const bool pol = in.system_state == SystemState::polarized;
        const double asym = pol ? r.stationary(0, 0).real() : std::abs(r.stationary(0, 1));
        auto series = [&](const ReducedTrajectory& t) { return pol ? t.population(0) : t.coherence(); };
        std::optional<double> expected;
        if (r.gamma_pop > 0.0) expected = pol ? r.gamma_pop : 0.5 * r.gamma_pop;
        try {
            r.fit_exact = fit_exponential_rate(r.exact.times, series(r.exact), asym, expected);
        } catch (const std::invalid_argument&) {
        }
        try {
            r.fit_lindblad = fit_exponential_rate(r.lindblad.times, series(r.lindblad), asym, expected);
        } catch (const std::invalid_argument&) {
        }
    }

    r.t_final = in.t_final > 0.0 ? in.t_final : in.grid.t_max;
    r.trace_distance = trace_distance_series(r.exact, r.lindblad);
    r.avg_trace_distance = time_averaged_trace_distance(r.exact, r.lindblad, r.t_final);

    r.beta_total = std::numeric_limits<double>::quiet_NaN();
    if (in.mean_force) {
        const PureState c = to_energy_basis(psi0, total);
        r.total_energy = c.amplitudes.cwiseAbs2().dot(total.values);
        r.beta_total = canonical_inverse_temperature(total.values, r.total_energy);
        r.mean_force = mean_force_state(total, r.beta_total);
        r.gibbs = gibbs_state(system_hamiltonian(in.system), r.beta_total);
        r.p0_long_time = time_average(r.exact.times, r.exact.population(0), 0.5 * in.grid.t_max, in.grid.t_max);
    }
    return r;
}

} // namespace ethbath
