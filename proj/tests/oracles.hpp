// Independent reference implementations used only by the tests.

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <complex>
#include <random>
#include <vector>

namespace oracle {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline Mat sx() { Mat m(2, 2); m << 0, 1, 1, 0; return m; }
inline Mat sy() { Mat m(2, 2); m << 0, cd(0, -1), cd(0, 1), 0; return m; }
inline Mat sz() { Mat m(2, 2); m << 1, 0, 0, -1; return m; }
inline Mat id2() { return Mat::Identity(2, 2); }

// sigma on slot k (0 = leftmost kron factor) of n spins
inline Mat embed(const Mat& s, int k, int n) {
    Mat out = Mat::Identity(1, 1);
    for (int i = 0; i < n; ++i) out = kron(out, i == k ? s : id2());
    return out;
}

inline Mat ising(int L, double J, double hz, double hx, double h1, double hL, int offset = 0, int n = -1) {
    if (n < 0) n = L;
    const Eigen::Index d = Eigen::Index{1} << n;
    Mat H = Mat::Zero(d, d);
    for (int j = 0; j + 1 < L; ++j) H += J * embed(sz(), offset + j, n) * embed(sz(), offset + j + 1, n);
    for (int j = 0; j < L; ++j) H += hz * embed(sz(), offset + j, n) + hx * embed(sx(), offset + j, n);
    H += h1 * embed(sz(), offset, n) + hL * embed(sz(), offset + L - 1, n);
    return H;
}

inline Mat total(double w0, int L, double J, double hz, double hx, double h1, double hL, double kappa) {
    const int n = L + 1;
    Mat H = 0.5 * w0 * embed(sz(), 0, n) + ising(L, J, hz, hx, h1, hL, 1, n);
    H += kappa * embed(sx(), 0, n) * embed(sx(), 1, n);
    return H;
}

// rho_S[a][b] = sum_k psi[a, k] conj(psi[b, k]) by explicit loops
inline Eigen::Matrix2cd ptrace(const Eigen::VectorXcd& psi) {
    const Eigen::Index nb = psi.size() / 2;
    Eigen::Matrix2cd r = Eigen::Matrix2cd::Zero();
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (Eigen::Index k = 0; k < nb; ++k) r(a, b) += psi(a * nb + k) * std::conj(psi(b * nb + k));
    return r;
}

inline Eigen::MatrixXd goe(int n, std::mt19937_64& gen) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = nd(gen);
    return 0.5 * (a + a.transpose());
}

} // namespace oracle
