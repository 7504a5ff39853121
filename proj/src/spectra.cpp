// spectra.cpp: LAPACK divide-and-conquer eigensolver behind Eigen types

#include "ethbath/spectra.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ethbath {

namespace {

void fix_signs(RealMatrix& V) {
    for (Eigen::Index k = 0; k < V.cols(); ++k) {
        Eigen::Index idx = 0;
        V.col(k).cwiseAbs().maxCoeff(&idx);
        if (V(idx, k) < 0.0) V.col(k) = -V.col(k);
    }
}

void fix_signs(ComplexMatrix& V) {
    for (Eigen::Index k = 0; k < V.cols(); ++k) {
        Eigen::Index idx = 0;
        V.col(k).cwiseAbs2().maxCoeff(&idx);
        const Complex p = V(idx, k);
        const double a = std::abs(p);
        if (a > 0.0) V.col(k) *= std::conj(p) / a;
        V(idx, k) = Complex(a, 0.0);
    }
}

EigenSystem solve_in_place(RealMatrix&& A) {
    const auto n = static_cast<lapack_int>(A.rows());
    if (n < 1) throw std::invalid_argument("diagonalize: empty operator");
    EigenSystem out;
    out.values.resize(n);
    const lapack_int info =
        LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, A.data(), n, out.values.data());
    if (info != 0) {
        throw NumericalError("dsyevd failed to converge (info=" + std::to_string(info) + ")");
    }
    fix_signs(A);
    out.vectors = std::move(A);
    return out;
}

EigenSystem solve_in_place(ComplexMatrix&& A) {
    const auto n = static_cast<lapack_int>(A.rows());
    if (n < 1) throw std::invalid_argument("diagonalize: empty operator");
    EigenSystem out;
    out.values.resize(n);
    const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                           reinterpret_cast<lapack_complex_double*>(A.data()), n,
                                           out.values.data());
    if (info != 0) {
        throw NumericalError("zheevd failed to converge (info=" + std::to_string(info) + ")");
    }
    fix_signs(A);
    out.vectors = std::move(A);
    return out;
}

} // namespace

const RealMatrix& EigenSystem::real_vectors() const {
    if (const auto* r = std::get_if<RealMatrix>(&vectors)) return *r;
    throw std::logic_error("eigenvectors are complex");
}

const ComplexMatrix& EigenSystem::complex_vectors() const {
    if (const auto* c = std::get_if<ComplexMatrix>(&vectors)) return *c;
    throw std::logic_error("eigenvectors are real");
}

EigenSystem diagonalize(const HermitianOperator& H) {
    return std::visit([](const auto& m) { auto copy = m; return solve_in_place(std::move(copy)); },
                      H.matrix());
}

EigenSystem diagonalize(HermitianOperator&& H) {
    return std::visit([](auto&& m) { return solve_in_place(std::move(m)); },
                      std::move(H).release());
}

Eigen::VectorXd eigenvalues(const RealMatrix& H) {
    RealMatrix A = H;
    const auto n = static_cast<lapack_int>(A.rows());
    Eigen::VectorXd w(n);
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, A.data(), n, w.data());
    if (info != 0) throw NumericalError("dsyevd (values only) failed to converge");
    return w;
}

DenseMatrix to_eigenbasis(const HermitianOperator& op, const EigenSystem& eig) {
    if (op.dim() != eig.dim()) throw std::invalid_argument("to_eigenbasis: dimension mismatch");
    if (op.is_real() && eig.is_real()) {
        const RealMatrix& V = eig.real_vectors();
        RealMatrix OV = op.real() * V;
        RealMatrix out = V.transpose() * OV;
        return out;
    }
    const ComplexMatrix V = ethbath::to_complex(eig.vectors);
    ComplexMatrix OV = op.to_complex() * V;
    ComplexMatrix out = V.adjoint() * OV;
    return out;
}

double orthonormality_error(const EigenSystem& eig) {
    return std::visit(
        [](const auto& V) {
            using M = std::decay_t<decltype(V)>;
            M G = V.adjoint() * V;
            G.diagonal().array() -= 1.0;
            return G.cwiseAbs().maxCoeff();
        },
        eig.vectors);
}

double residual_error(const HermitianOperator& H, const EigenSystem& eig) {
    const ComplexMatrix V = ethbath::to_complex(eig.vectors);
    const ComplexMatrix R = H.to_complex() * V - V * eig.values.asDiagonal();
    return R.cwiseAbs().maxCoeff();
}

GapStatistics gap_ratios(const Eigen::VectorXd& eigenvalues, double central_fraction,
                         int histogram_bins) {
    if (!(central_fraction > 0.0 && central_fraction <= 1.0)) {
        throw std::invalid_argument("gap_ratios: central fraction must lie in (0, 1]");
    }
    if (histogram_bins < 1) throw std::invalid_argument("gap_ratios: need at least one bin");
    std::vector<double> e(eigenvalues.data(), eigenvalues.data() + eigenvalues.size());
    std::sort(e.begin(), e.end());
    const auto n = e.size();
    const auto keep = static_cast<std::size_t>(std::llround(central_fraction * static_cast<double>(n)));
    const std::size_t first = (n - keep) / 2;
    if (keep < 3) throw std::invalid_argument("gap_ratios: need at least 3 levels in the central window");

    GapStatistics out;
    out.ratios.reserve(keep - 2);
    for (std::size_t i = first; i + 2 < first + keep; ++i) {
        const double s0 = e[i + 1] - e[i];
        const double s1 = e[i + 2] - e[i + 1];
        const double hi = std::max(s0, s1);
        if (s0 == 0.0 || s1 == 0.0) ++out.degenerate_gaps;
        out.ratios.push_back(hi > 0.0 ? std::min(s0, s1) / hi : 0.0);
    }
    double sum = 0.0;
    for (double r : out.ratios) sum += r;
    out.mean_ratio = sum / static_cast<double>(out.ratios.size());

    out.bin_edges.resize(histogram_bins + 1);
    for (int b = 0; b <= histogram_bins; ++b) out.bin_edges[b] = static_cast<double>(b) / histogram_bins;
    out.counts.assign(histogram_bins, 0);
    for (double r : out.ratios) {
        auto b = static_cast<int>(r * histogram_bins);
        out.counts[std::min(b, histogram_bins - 1)]++;
    }
    return out;
}

std::string lapack_version() {
    lapack_int major = 0, minor = 0, patch = 0;
    LAPACKE_ilaver(&major, &minor, &patch);
    return std::to_string(major) + "." + std::to_string(minor) + "." + std::to_string(patch);
}

} // namespace ethbath
