// spectra.hpp: dense eigendecomposition, eigenbasis transforms and
// consecutive-gap-ratio statistics.

#pragma once

#include "ethbath/common.hpp"
#include "ethbath/hamiltonian.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace ethbath {

// Ascending eigenvalues and orthonormal eigenvectors (columns). Each column's
// largest-magnitude component is real and positive.
struct EigenSystem {
    Eigen::VectorXd values;
    DenseMatrix vectors{RealMatrix{}};

    Eigen::Index dim() const { return values.size(); }
    bool is_real() const { return ethbath::is_real(vectors); }
    const RealMatrix& real_vectors() const;
    const ComplexMatrix& complex_vectors() const;
    double bandwidth() const { return values.size() ? values(values.size() - 1) - values(0) : 0.0; }
};

EigenSystem diagonalize(const HermitianOperator& H);
EigenSystem diagonalize(HermitianOperator&& H);

// "major.minor.patch" of the linked LAPACK.
std::string lapack_version();

// Eigenvalues only (no vectors), for spectral statistics of large samples.
Eigen::VectorXd eigenvalues(const RealMatrix& H);

// V^dagger op V. Real when both the operator and the eigenvectors are real.
DenseMatrix to_eigenbasis(const HermitianOperator& op, const EigenSystem& eig);

// max |V^dagger V - I|
double orthonormality_error(const EigenSystem& eig);
// max |H V - V Lambda|
double residual_error(const HermitianOperator& H, const EigenSystem& eig);

struct GapStatistics {
    std::vector<double> ratios;
    double mean_ratio{0.0};
    std::vector<double> bin_edges;
    std::vector<std::size_t> counts;
    std::size_t degenerate_gaps{0};
};

// r_n = min(s_n, s_{n+1}) / max(s_n, s_{n+1}) over the central fraction of the
// sorted spectrum. Zero gaps yield r = 0 and are counted, not rejected.
GapStatistics gap_ratios(const Eigen::VectorXd& eigenvalues, double central_fraction = 0.5,
                         int histogram_bins = 20);

} // namespace ethbath
