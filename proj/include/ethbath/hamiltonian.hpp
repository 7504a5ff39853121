// hamiltonian.hpp: dense spin-1/2 chain operators: Pauli embeddings, the
// mixed-field Ising bath, the probe spin and their coupled Hamiltonian.
//
// Basis: computational sigma^z product basis. Slot 0 is the most significant
// bit. In a bath-only operator bath site 1 is the most significant bit; in a
// total operator the probe spin sits in slot 0 and bath site j in slot j.

#pragma once

#include "ethbath/common.hpp"

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ethbath {

enum class Axis { x, y, z };

Axis parse_axis(std::string_view name);
char axis_name(Axis a);

inline constexpr int kDefaultMaxSites = 16;

struct SpinChainParams {
    int L{1};
    double J{0.0};
    double hz{0.0};
    double hx{0.0};
    double h1{0.0};
    double hL{0.0};

    static SpinChainParams chaotic(int L) { return {L, 1.0, 0.3, 1.1, 0.25, -0.25}; }
    static SpinChainParams integrable(int L) { return {L, 1.0, 0.0, 1.1, 0.0, 0.0}; }
    static SpinChainParams preset(std::string_view name, int L);

    void validate() const;
};

struct SystemParams {
    double omega0{1.525};
    void validate() const;
};

// One term S^mu (x) B^mu of the interaction, both single Pauli matrices.
struct CouplingTerm {
    Axis system_axis{Axis::x};
    int site{1};
    Axis bath_axis{Axis::x};
};

struct CouplingSpec {
    double kappa{0.15};
    std::vector<CouplingTerm> terms{CouplingTerm{}};

    void validate(int L) const;
    bool is_real() const;
};

class HermitianOperator {
public:
    HermitianOperator() = default;
    explicit HermitianOperator(RealMatrix m);
    explicit HermitianOperator(ComplexMatrix m);

    Eigen::Index dim() const { return ethbath::rows(data_); }
    bool is_real() const { return ethbath::is_real(data_); }

    const RealMatrix& real() const;
    const ComplexMatrix& complex() const;
    ComplexMatrix to_complex() const { return ethbath::to_complex(data_); }
    const DenseMatrix& matrix() const { return data_; }
    DenseMatrix release() && { return std::move(data_); }

    // max |H - H^dagger|
    double hermiticity_error() const;

private:
    DenseMatrix data_{RealMatrix{}};
};

// 2x2 Pauli matrix.
ComplexMatrix pauli(Axis a);

// I (x) ... (x) sigma^axis (x) ... (x) I with sigma on site (1-based) of an
// L-site chain.
HermitianOperator pauli_site_operator(int L, int site, Axis axis);

// Same embedding for a chain of n_spins slots indexed from 0 (total operators).
HermitianOperator pauli_slot_operator(int n_spins, int slot, Axis axis);

HermitianOperator build_bath_hamiltonian(const SpinChainParams& params,
                                         int max_sites = kDefaultMaxSites);

// (omega0/2) sigma^z on the probe spin alone.
Matrix2c system_hamiltonian(const SystemParams& sys);

HermitianOperator build_total_hamiltonian(const SystemParams& sys, const SpinChainParams& bath,
                                          const CouplingSpec& coupling,
                                          int max_sites = kDefaultMaxSites);

// Bath operator B^mu of a coupling term, as a bath-only operator.
HermitianOperator coupling_bath_operator(int L, const CouplingTerm& term);

} // namespace ethbath
