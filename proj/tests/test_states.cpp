#include "ethbath/rng.hpp"
#include "ethbath/states.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace ethbath;

TEST_CASE("counter rng is a pure function of key and index") {
    const CounterRng a(42), b(42), c(43);
    CHECK(a.normal(17) == b.normal(17));
    CHECK(a.normal(17) != c.normal(17));
    // SplitMix64 reference output for seed 0: first draw of the canonical generator
    CHECK(CounterRng::mix(0x9E3779B97F4A7C15ULL) == 0xE220A8397B1DCDAFULL);
    double m = 0.0, v = 0.0;
    const int n = 200000;
    for (int j = 0; j < n; ++j) {
        const double x = a.normal(static_cast<std::uint64_t>(j));
        m += x;
        v += x * x;
    }
    m /= n;
    v = v / n - m * m;
    CHECK(std::abs(m) < 0.01);
    CHECK(std::abs(v - 1.0) < 0.02);
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const double u = a.uniform(i);
        CHECK((u >= 0.0 && u < 1.0));
    }
}

TEST_CASE("eigenstate preparation and windows") {
    const EigenSystem eig = diagonalize(build_bath_hamiltonian(SpinChainParams::chaotic(6)));
    const PureState g = eigenstate_preparation(eig, eig.values(0) - 100.0);
    CHECK(g.basis == Basis::energy);
    CHECK(std::abs(g.amplitudes(0)) == 1.0);
    const PureState e5 = eigenstate_preparation(eig, eig.values(5));
    CHECK(std::abs(e5.amplitudes(5)) == 1.0);
    CHECK(nearest_eigenstate(eig.values, eig.values(9)) == 9);

    Eigen::VectorXd tie(3);
    tie << 0.0, 1.0, 2.0;
    CHECK(nearest_eigenstate(tie, 0.5) == 0);

    const auto w = microcanonical_window(eig.values, eig.values(20), 1e-12);
    REQUIRE(w.dim() == 1);
    const PureState one = typical_microcanonical_state(w, eig.dim(), 5);
    CHECK(std::abs(std::abs(one.amplitudes(20)) - 1.0) < 1e-12);

    const double E0 = 0.5 * (eig.values(0) + eig.values(eig.dim() - 1)) - 1.0;
    const double dE = 1.0;
    const auto win = microcanonical_window(eig.values, E0, dE);
    for (Eigen::Index n = 0; n < eig.dim(); ++n) {
        const bool in = std::abs(eig.values(n) - E0) <= dE / 2;
        CHECK(in == (std::find(win.members.begin(), win.members.end(), n) != win.members.end()));
    }

    for (bool cplx : {false, true}) {
        const PureState t = typical_microcanonical_state(eig, E0, dE, 11, cplx);
        const PureState u = typical_microcanonical_state(eig, E0, dE, 11, cplx);
        CHECK(t.amplitudes == u.amplitudes);
        CHECK(std::abs(t.norm() - 1.0) < 1e-12);
        CHECK((t.amplitudes.imag().norm() > 0.0) == cplx);
        const Eigen::ArrayXd p = t.amplitudes.cwiseAbs2().array();
        const double mean = (p * eig.values.array()).sum();
        const double var = (p * (eig.values.array() - mean).square()).sum();
        CHECK(std::abs(mean - E0) <= dE / 2);
        CHECK(var <= dE * dE / 4);
    }
    CHECK(typical_microcanonical_state(eig, E0, dE, 11).amplitudes !=
          typical_microcanonical_state(eig, E0, dE, 12).amplitudes);

    // basis round trip
    const PureState t = typical_microcanonical_state(eig, E0, dE, 3);
    const PureState back = to_energy_basis(to_computational_basis(t, eig), eig);
    CHECK((back.amplitudes - t.amplitudes).norm() < 1e-12);
}

TEST_CASE("product states") {
    const auto p = SpinChainParams::chaotic(6);
    CHECK(product_state_energy(p, 0.0) ==
          doctest::Approx(p.J * (p.L - 1) + p.L * p.hz + p.h1 + p.hL));

    const auto H = oracle::ising(6, p.J, p.hz, p.hx, p.h1, p.hL);
    const auto [lo, hi] = product_energy_range(p);
    CHECK(lo < hi);
    for (double target : {0.0, 0.5 * (lo + hi), lo + 0.1, hi - 0.1}) {
        const ProductState s = product_state_with_energy(p, target);
        CHECK(s.state.basis == Basis::computational);
        CHECK(std::abs(s.state.norm() - 1.0) < 1e-12);
        const double exact = (s.state.amplitudes.adjoint() * H * s.state.amplitudes)(0, 0).real();
        CHECK(std::abs(exact - target) < 1e-6);
        CHECK(s.energy == doctest::Approx(exact).epsilon(1e-9));
    }
    CHECK_THROWS_AS(product_state_with_energy(p, hi + 1.0), std::out_of_range);

    // the integrable family misses the bottom of its own spectrum
    const auto q = SpinChainParams::integrable(6);
    const EigenSystem eq = diagonalize(build_bath_hamiltonian(q));
    CHECK_THROWS_AS(product_state_with_energy(q, eq.values(0)), std::out_of_range);
}

TEST_CASE("probe states and tensor products") {
    const Matrix2c pol = density_matrix(system_initial_state(SystemState::polarized));
    CHECK(pol(0, 0).real() == 1.0);
    CHECK(std::abs(pol(1, 1)) == 0.0);
    const Matrix2c sup = density_matrix(system_initial_state(SystemState::superposition));
    CHECK(std::abs(sup(0, 1) - 0.5) < 1e-15);
    CHECK(std::abs((pol * pol).trace() - 1.0) < 1e-15);
    CHECK(std::abs((sup * sup).trace() - 1.0) < 1e-15);

    PureState bath;
    bath.amplitudes = Eigen::VectorXcd::Random(8).normalized();
    const PureState s = system_initial_state(SystemState::superposition);
    const PureState t = tensor_product(s, bath);
    const oracle::Mat ref = oracle::kron(oracle::Mat(s.amplitudes), oracle::Mat(bath.amplitudes));
    CHECK((t.amplitudes - ref.col(0)).norm() < 1e-15);
}
