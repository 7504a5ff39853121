#include "ethbath/eigen_cache.hpp"
#include "ethbath/spectra.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace ethbath;
namespace fs = std::filesystem;

TEST_CASE("eigensolver agrees with Eigen on random matrices") {
    std::mt19937_64 gen(7);
    const Eigen::MatrixXd a = oracle::goe(40, gen);
    const EigenSystem e = diagonalize(HermitianOperator(RealMatrix(a)));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(a);
    CHECK((e.values - ref.eigenvalues()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(orthonormality_error(e) < 1e-12);
    CHECK(residual_error(HermitianOperator(RealMatrix(a)), e) < 1e-11);
    for (Eigen::Index k = 0; k < e.dim(); ++k) {
        Eigen::Index i;
        e.real_vectors().col(k).cwiseAbs().maxCoeff(&i);
        CHECK(e.real_vectors()(i, k) > 0.0);
    }

    std::normal_distribution<double> nd;
    ComplexMatrix c(24, 24);
    for (Eigen::Index i = 0; i < 24; ++i)
        for (Eigen::Index j = 0; j < 24; ++j) c(i, j) = Complex(nd(gen), nd(gen));
    c = (0.5 * (c + c.adjoint())).eval();
    const EigenSystem ec = diagonalize(HermitianOperator(c));
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> refc(c);
    CHECK(!ec.is_real());
    CHECK((ec.values - refc.eigenvalues()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(orthonormality_error(ec) < 1e-12);
    CHECK(residual_error(HermitianOperator(c), ec) < 1e-11);
    CHECK((eigenvalues(a) - ref.eigenvalues()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pauli chain spectrum and eigenbasis transform") {
    // sigma^z on one of three sites: eigenvalues +-1, each fourfold
    const auto z = pauli_site_operator(3, 2, Axis::z);
    const EigenSystem e = diagonalize(z);
    for (Eigen::Index k = 0; k < 8; ++k) CHECK(std::abs(e.values(k)) == doctest::Approx(1.0));
    CHECK(e.bandwidth() == doctest::Approx(2.0));

    const auto H = build_bath_hamiltonian(SpinChainParams::chaotic(4));
    const EigenSystem eh = diagonalize(H);
    const DenseMatrix Heig = to_eigenbasis(H, eh);
    REQUIRE(is_real(Heig));
    const RealMatrix& D = std::get<RealMatrix>(Heig);
    CHECK((D - RealMatrix(eh.values.asDiagonal())).cwiseAbs().maxCoeff() < 1e-12);

    const auto y = pauli_site_operator(4, 1, Axis::y);
    const DenseMatrix Yeig = to_eigenbasis(y, eh);
    CHECK_FALSE(is_real(Yeig));
    const ComplexMatrix V = eh.real_vectors().cast<Complex>();
    CHECK((std::get<ComplexMatrix>(Yeig) - V.adjoint() * y.complex() * V).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gap ratio oracles") {
    std::mt19937_64 gen(11);
    std::vector<double> r;
    for (int s = 0; s < 40; ++s) {
        const auto g = gap_ratios(eigenvalues(oracle::goe(200, gen)));
        r.insert(r.end(), g.ratios.begin(), g.ratios.end());
    }
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    CHECK(std::abs(mean - 0.5307) < 0.01);

    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd poisson(40000);
    for (Eigen::Index i = 0; i < poisson.size(); ++i) poisson(i) = u(gen);
    const auto gp = gap_ratios(poisson, 0.9);
    CHECK(std::abs(gp.mean_ratio - (2.0 * std::log(2.0) - 1.0)) < 0.01);

    const auto gd = gap_ratios(Eigen::VectorXd::LinSpaced(10, 0.0, 9.0), 1.0);
    CHECK(gd.mean_ratio == doctest::Approx(1.0));
    Eigen::VectorXd deg(6);
    deg << 0.0, 1.0, 1.0, 2.0, 4.0, 7.0;
    const auto gg = gap_ratios(deg, 1.0);
    CHECK(gg.degenerate_gaps == 2); // one zero gap enters two ratios
    CHECK(gg.ratios[0] == 0.0);
    CHECK_THROWS(gap_ratios(Eigen::VectorXd::LinSpaced(2, 0.0, 1.0)));
}

TEST_CASE("eigensystem cache round trip and failure modes") {
    const fs::path dir = fs::temp_directory_path() / "ethbath-test-cache";
    fs::remove_all(dir);
    const auto H = build_bath_hamiltonian(SpinChainParams::chaotic(5));
    const EigenCache cache(dir);
    int builds = 0;
    auto build = [&] {
        ++builds;
        return H;
    };
    const EigenSystem a = cache.get_or_compute("spec-a", build);
    const EigenSystem b = cache.get_or_compute("spec-a", build);
    CHECK(builds == 1);
    CHECK(a.values == b.values);
    CHECK(a.real_vectors() == b.real_vectors());
    CHECK(fs::exists(cache.path_for("spec-a")));
    CHECK(cache.path_for("spec-a") != cache.path_for("spec-b"));

    // header layout
    std::ifstream is(cache.path_for("spec-a"), std::ios::binary);
    char magic[7];
    is.read(magic, 7);
    CHECK(std::string(magic, 7) == "ETHEIG1");
    std::uint64_t dim = 0;
    is.read(reinterpret_cast<char*>(&dim), 8);
    CHECK(dim == 32);
    CHECK(fs::file_size(cache.path_for("spec-a")) == 7 + 8 + 1 + 32 + 8 * 32 + 8 * 32 * 32);

    CHECK_THROWS_AS(read_eigensystem(cache.path_for("spec-a"), sha256("spec-b")), NumericalError);

    const EigenSystem c = diagonalize(HermitianOperator(pauli_slot_operator(3, 1, Axis::y).complex()));
    write_eigensystem(dir / "c.eig", c, sha256("c"));
    const EigenSystem c2 = read_eigensystem(dir / "c.eig", sha256("c"));
    CHECK(!c2.is_real());
    CHECK(c2.complex_vectors() == c.complex_vectors());

    {
        std::ofstream bad(dir / "bad.eig", std::ios::binary);
        bad << "NOTEIG1xxxxxxxx";
    }
    CHECK_THROWS_AS(read_eigensystem(dir / "bad.eig"), NumericalError);
    fs::resize_file(dir / "c.eig", fs::file_size(dir / "c.eig") - 5);
    CHECK_THROWS_AS(read_eigensystem(dir / "c.eig"), NumericalError);

    CHECK(to_hex(sha256("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    const EigenCache off;
    CHECK_FALSE(off.enabled());
    CHECK(off.get_or_compute("x", build).dim() == 32);
    fs::remove_all(dir);
}
