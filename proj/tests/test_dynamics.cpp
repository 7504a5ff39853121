#include "ethbath/dynamics.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ethbath;

namespace {

const Complex I(0.0, 1.0);

Matrix2c diag(double a, double b) {
    Matrix2c m = Matrix2c::Zero();
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

Eigen::VectorXcd random_state(Eigen::Index d, std::mt19937_64& gen) {
    std::normal_distribution<double> nd;
    Eigen::VectorXcd v(d);
    for (auto& x : v) x = Complex(nd(gen), nd(gen));
    return v.normalized();
}

LindbladModel two_level(double w0, const std::function<double(double)>& rate) {
    const EffectiveSystem hs = mean_field_shift(SystemParams{w0}, 0.0, 0.0);
    return build_lindblad(hs, lowering_operators(hs.H, pauli(Axis::x)), rate);
}

} // namespace

TEST_CASE("partial trace") {
    std::mt19937_64 gen(1);
    const Eigen::VectorXcd phi = random_state(4, gen);
    PureState up;
    up.amplitudes = Eigen::VectorXcd::Unit(2, 0);
    PureState bath;
    bath.amplitudes = phi;
    const Matrix2c r = partial_trace_bath(tensor_product(up, bath).amplitudes);
    CHECK((r - diag(1, 0)).norm() < 1e-15);

    // (|0>|u> + |1>|v>)/sqrt 2 with <u|v> = 0
    Eigen::VectorXcd bell = Eigen::VectorXcd::Zero(8);
    bell(1) = bell(4 + 2) = 1.0 / std::sqrt(2.0);
    CHECK((partial_trace_bath(bell) - diag(0.5, 0.5)).norm() < 1e-15);

    const Eigen::VectorXcd psi = random_state(8, gen);
    CHECK((partial_trace_bath(psi) - oracle::ptrace(psi)).norm() < 1e-14);
    CHECK((partial_trace_bath(ComplexMatrix(psi * psi.adjoint())) - oracle::ptrace(psi)).norm() < 1e-14);
}

TEST_CASE("exact evolution and mean force against dense exponentials") {
    const SpinChainParams p = SpinChainParams::chaotic(2);
    const SystemParams sys{1.525};
    const CouplingSpec cpl{0.15, {CouplingTerm{}}};
    const EigenSystem total = diagonalize(build_total_hamiltonian(sys, p, cpl));
    const oracle::Mat H = oracle::total(1.525, 2, p.J, p.hz, p.hx, p.h1, p.hL, 0.15);

    std::mt19937_64 gen(2);
    PureState psi0;
    psi0.amplitudes = random_state(8, gen);
    const TimeGrid grid = TimeGrid::uniform(10.0, 0.5);
    const ReducedTrajectory tr = exact_evolve(total, psi0, grid);
    REQUIRE(tr.size() == 21);
    // step-by-step propagation with a fixed one-step propagator
    const oracle::Mat U = (oracle::Mat(-I * 0.5 * H)).exp();
    Eigen::VectorXcd psi = psi0.amplitudes;
    double worst = 0.0;
    for (Eigen::Index k = 0; k < tr.size(); ++k) {
        worst = std::max(worst, (tr.rho[static_cast<std::size_t>(k)] - oracle::ptrace(psi)).cwiseAbs().maxCoeff());
        psi = U * psi;
    }
    CHECK(worst < 1e-10);
    CHECK(tr.checks.max_norm_error < 1e-10);

    const oracle::Mat G = (oracle::Mat(-0.25 * H)).exp();
    Matrix2c mf = Matrix2c::Zero();
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int k = 0; k < 4; ++k) mf(a, b) += G(a * 4 + k, b * 4 + k);
    mf /= mf.trace();
    CHECK((mean_force_state(total, 0.25) - mf).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((mean_force_state(total, 0.0) - diag(0.5, 0.5)).cwiseAbs().maxCoeff() < 1e-12);

    // decoupled probe keeps its populations
    const EigenSystem free = diagonalize(build_total_hamiltonian(sys, p, CouplingSpec{0.0, {CouplingTerm{}}}));
    PureState prod = tensor_product(system_initial_state(SystemState::polarized), PureState{random_state(4, gen)});
    const auto ft = exact_evolve(free, prod, grid);
    CHECK((ft.population(0).array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("gibbs and trace distance") {
    const Matrix2c Hs = system_hamiltonian(SystemParams{1.525});
    const Matrix2c g = gibbs_state(Hs, 0.25);
    CHECK((g(0, 0) / g(1, 1)).real() == doctest::Approx(std::exp(-0.25 * 1.525)).epsilon(1e-14));
    CHECK((gibbs_state(Hs, 0.0) - diag(0.5, 0.5)).norm() < 1e-15);

    CHECK(trace_distance(g, g) == 0.0);
    CHECK(trace_distance(diag(1, 0), diag(0, 1)) == doctest::Approx(1.0));
    CHECK(trace_distance(diag(0.7, 0.3), diag(0.5, 0.5)) == doctest::Approx(0.2));

    ReducedTrajectory a, b;
    a.times = b.times = Eigen::VectorXd::LinSpaced(11, 0.0, 10.0);
    for (int k = 0; k < 11; ++k) {
        a.rho.push_back(diag(0.7, 0.3));
        b.rho.push_back(diag(0.5, 0.5));
    }
    CHECK(time_averaged_trace_distance(a, a, 10.0) == 0.0);
    CHECK(time_averaged_trace_distance(a, b, 10.0) == doctest::Approx(0.2));
    CHECK(time_averaged_trace_distance(a, b, 4.0) == doctest::Approx(0.2));
    CHECK_THROWS(time_averaged_trace_distance(a, b, 4.5));
}

TEST_CASE("mean-field shift and jump operators") {
    const SystemParams sys{1.525};
    CHECK(mean_field_shift(sys, 0.15, 0.0).bohr_frequency == doctest::Approx(1.525));
    CHECK(mean_field_shift(sys, 0.15, 0.2).bohr_frequency ==
          doctest::Approx(std::sqrt(1.525 * 1.525 + 4 * 0.03 * 0.03)).epsilon(1e-14));

    const Matrix2c H = system_hamiltonian(sys);
    const auto jx = lowering_operators(H, pauli(Axis::x));
    REQUIRE(jx.size() == 2);
    for (const auto& j : jx) {
        Matrix2c expect = Matrix2c::Zero();
        // |0> is excited: lowering maps |0> to |1>
        if (j.omega > 0) expect(1, 0) = 1.0;
        else expect(0, 1) = 1.0;
        CHECK(std::abs(std::abs(j.omega) - 1.525) < 1e-14);
        CHECK((j.op - expect).norm() < 1e-14);
    }
    const auto jz = lowering_operators(H, pauli(Axis::z));
    REQUIRE(jz.size() == 1);
    CHECK(jz[0].omega == 0.0);

    const EffectiveSystem shifted = mean_field_shift(sys, 0.15, 0.4);
    for (Axis ax : {Axis::x, Axis::y, Axis::z}) {
        Matrix2c sum = Matrix2c::Zero();
        for (const auto& j : lowering_operators(shifted.H, pauli(ax))) {
            sum += j.op;
            // [H, S(w)] = -w S(w)
            CHECK((shifted.H * j.op - j.op * shifted.H + j.omega * j.op).norm() < 1e-12);
        }
        CHECK((sum - pauli(ax)).norm() < 1e-12);
    }
}

TEST_CASE("two-level lindblad relaxation") {
    const double w0 = 1.525, g = 0.05;
    const LindbladModel m = two_level(w0, [&](double) { return g; });
    CHECK(m.population_rate() == doctest::Approx(2 * g));
    const TimeGrid grid = TimeGrid::uniform(60.0, 0.25);

    const auto pol = lindblad_evolve(m, diag(1, 0), grid);
    double err = 0.0;
    for (Eigen::Index k = 0; k < pol.size(); ++k)
        err = std::max(err, std::abs(pol.population(0)(k) - (0.5 + 0.5 * std::exp(-2 * g * pol.times(k)))));
    CHECK(err < 1e-6);

    Matrix2c sup = Matrix2c::Constant(0.5);
    const auto coh = lindblad_evolve(m, sup, grid);
    err = 0.0;
    for (Eigen::Index k = 0; k < coh.size(); ++k)
        err = std::max(err, std::abs(coh.coherence()(k) - 0.5 * std::exp(-g * coh.times(k))));
    CHECK(err < 1e-6);

    const auto fp = fit_exponential_rate(pol.times, pol.population(0), 0.5);
    CHECK(fp.rate == doctest::Approx(m.population_rate()).epsilon(0.01));
    const auto fc = fit_exponential_rate(coh.times, coh.coherence(), 0.0);
    CHECK(fc.rate == doctest::Approx(0.5 * m.population_rate()).epsilon(0.01));

    IntegratorOptions big;
    big.step = 0.25;
    CHECK_THROWS(lindblad_evolve(m, diag(1, 0), grid, big));
}

TEST_CASE("lindblad fixed point and unitary limit") {
    const double w0 = 1.525, beta = 0.25;
    const LindbladModel m = two_level(w0, [&](double w) { return 0.04 * std::exp(0.5 * beta * w); });
    const Matrix2c ss = lindblad_stationary_state(m);
    CHECK((ss(0, 0) / ss(1, 1)).real() == doctest::Approx(std::exp(-beta * w0)).epsilon(1e-12));
    CHECK(std::abs(ss.trace() - 1.0) < 1e-14);
    CHECK(lindblad_rhs(m, ss).norm() < 1e-14);

    const LindbladModel flat = two_level(w0, [](double) { return 0.03; });
    CHECK((lindblad_stationary_state(flat) - diag(0.5, 0.5)).norm() < 1e-14);

    const LindbladModel none = two_level(w0, [](double) { return 0.0; });
    const TimeGrid grid = TimeGrid::uniform(10.0, 0.5);
    const auto tr = lindblad_evolve(none, Matrix2c::Constant(0.5), grid);
    for (Eigen::Index k = 0; k < tr.size(); ++k) {
        const Matrix2c& r = tr.rho[static_cast<std::size_t>(k)];
        CHECK(std::abs(r(0, 0).real() - 0.5) < 1e-12);
        CHECK(std::abs(r(0, 1) - 0.5 * std::exp(-I * w0 * tr.times(k))) < 1e-6);
    }

    CHECK_THROWS_AS(two_level(w0, [](double) { return -1.0; }), NumericalError);
}

TEST_CASE("multi-channel lindblad with one operator matches the single model") {
    const double w0 = 1.525;
    auto rate = [](double w) { return 0.02 * std::exp(0.1 * w); };
    const EffectiveSystem hs = mean_field_shift(SystemParams{w0}, 0.0, 0.0);
    const LindbladModel a = build_lindblad(hs, lowering_operators(hs.H, pauli(Axis::x)), rate);
    const std::vector<Matrix2c> ops{pauli(Axis::x)};
    const LindbladModel b = build_lindblad_multi(hs, ops, [&](double w) {
        return ComplexMatrix::Constant(1, 1, rate(w));
    });
    const Matrix2c rho = Matrix2c::Constant(0.5);
    CHECK((lindblad_rhs(a, rho) - lindblad_rhs(b, rho)).norm() < 1e-14);
}

TEST_CASE("bath correlation functions") {
    // two-level bath: C = |B01|^2 exp(-i w21 t) from the ground state
    EigenSystem two;
    two.values = Eigen::Vector2d(-0.4, 0.9);
    two.vectors = RealMatrix(RealMatrix::Identity(2, 2));
    RealMatrix B(2, 2);
    B << 0.2, 0.6, 0.6, -0.1;
    PureState g;
    g.amplitudes = Eigen::VectorXcd::Unit(2, 0);
    g.basis = Basis::energy;
    const TimeGrid grid = TimeGrid::uniform(5.0, 0.1);
    const auto c = bath_correlation_function(two, B, g, grid);
    for (Eigen::Index k = 0; k < c.values.size(); ++k)
        CHECK(std::abs(c.values(k) - 0.36 * std::exp(-I * 1.3 * c.times(k))) < 1e-13);
    CHECK(c.variance == doctest::Approx(0.36));

    const auto d = bath_correlation_function(two, RealMatrix(RealMatrix(B.diagonal().asDiagonal())), g, grid);
    CHECK(d.values.cwiseAbs().maxCoeff() < 1e-15);

    const EigenSystem eig = diagonalize(build_bath_hamiltonian(SpinChainParams::chaotic(6)));
    const DenseMatrix Bx = to_eigenbasis(pauli_site_operator(6, 1, Axis::x), eig);
    std::mt19937_64 gen(9);
    PureState psi;
    psi.amplitudes = random_state(64, gen);
    psi.basis = Basis::energy;
    const auto full = bath_correlation_function(eig, Bx, psi, grid);
    CHECK(std::abs(full.values(0) - full.variance) < 1e-12);

    // brute force in the computational basis
    const oracle::Mat H = oracle::ising(6, 1.0, 0.3, 1.1, 0.25, -0.25);
    const oracle::Mat X = oracle::embed(oracle::sx(), 0, 6);
    const Eigen::VectorXcd phi = to_computational_basis(psi, eig).amplitudes;
    const Complex mean = (phi.adjoint() * X * phi)(0, 0);
    for (Eigen::Index k : {5, 17, 40}) {
        const oracle::Mat U = (oracle::Mat(-I * grid[k] * H)).exp();
        const Complex ref = (phi.adjoint() * U.adjoint() * X * U * X * phi)(0, 0) - mean * mean;
        CHECK(std::abs(full.values(k) - ref) < 1e-10);
    }

    // an eigenstate is stationary: C(t + s, s) does not depend on s
    const PureState e = eigenstate_preparation(eig, 0.0);
    const auto c0 = bath_correlation_function(eig, Bx, e, grid);
    for (double s : {1.0, 7.5, 30.0}) {
        const auto cs = bath_correlation_function(eig, Bx, e, grid, s);
        CHECK((cs.values - c0.values).cwiseAbs().maxCoeff() < 1e-12);
    }

    BathCorrelation ex;
    ex.times = Eigen::VectorXd::LinSpaced(2001, 0.0, 10.0);
    ex.values = (-ex.times.array()).exp().cast<Complex>();
    CHECK(half_width_half_max(ex) == doctest::Approx(std::log(2.0)).epsilon(1e-3));
}

TEST_CASE("correlation function from a spectral table") {
    const Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(401, -4.0, 4.0);
    auto t = symmetrize(SpectralFunctionTable::tabulated(w, (-w.array().square()).exp()));
    t = normalize_spectral_function(t, 0.8, 0.0);
    const auto c = bcf_from_spectral_function(t, 0.0, TimeGrid::uniform(3.0, 0.1));
    CHECK(c.values(0).real() == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(c.values.imag().cwiseAbs().maxCoeff() < 1e-12);
    // Gaussian |f|^2 transforms to a Gaussian
    CHECK(c.values(10).real() == doctest::Approx(0.8 * std::exp(-0.25)).epsilon(1e-6));
}

TEST_CASE("exponential fit") {
    const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(401, 0.0, 20.0);
    const Eigen::VectorXd y = 0.2 + 0.8 * (-0.3 * t.array()).exp();
    CHECK(fit_exponential_rate(t, y, 0.2).rate == doctest::Approx(0.3).epsilon(1e-6));
    CHECK_THROWS_AS(fit_exponential_rate(t.head(10), y.head(10), 0.2), std::invalid_argument);
}

TEST_CASE("typicality") {
    const EigenSystem eig = diagonalize(build_bath_hamiltonian(SpinChainParams::chaotic(6)));
    const DenseMatrix Bx = to_eigenbasis(pauli_site_operator(6, 1, Axis::x), eig);
    const TimeGrid grid = TimeGrid::uniform(10.0, 0.5);
    const auto one = typicality_spread(eig, Bx, eig.values(30), 1e-12, 5, 1, grid);
    CHECK(one.window_dim == 1);
    CHECK(one.max_dev_B.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(one.median_spread() < 1e-12);
    CHECK(levy_bound(100, 0.5, 1.0) == doctest::Approx(2 * std::exp(-100 * 0.25 / (18 * std::pow(M_PI, 3)))));

    const auto many = typicality_spread(eig, Bx, 0.0, 4.0, 10, 1, grid);
    CHECK(many.window_dim > 1);
    CHECK(many.max_dev_B.size() == 10);
    CHECK_FALSE(many.levy_violated);
    const auto again = typicality_spread(eig, Bx, 0.0, 4.0, 10, 1, grid);
    CHECK(again.max_dev_B == many.max_dev_B);
}

TEST_CASE("exponential fit window stops after three expected e-foldings") {
    const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(801, 0.0, 40.0);
    // decay onto a plateau above the asymptote
    const Eigen::VectorXd y = 0.5 + 0.45 * (-0.3 * t.array()).exp() + 0.05;
    const auto capped = fit_exponential_rate(t, y, 0.5, 0.3);
    CHECK(capped.t_end <= 10.0 + 1e-12);
    CHECK(capped.rate == doctest::Approx(0.3).epsilon(0.25));
    CHECK_THROWS_AS(fit_exponential_rate(t, y, 0.5, -1.0), std::invalid_argument);
}
