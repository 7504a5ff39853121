// common.hpp: shared matrix aliases and error types

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <variant>

namespace ethbath {

using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Matrix2c = Eigen::Matrix2cd;

// A dense matrix stored real when possible, complex otherwise.
using DenseMatrix = std::variant<RealMatrix, ComplexMatrix>;

inline Eigen::Index rows(const DenseMatrix& m) {
    return std::visit([](const auto& a) { return a.rows(); }, m);
}

inline bool is_real(const DenseMatrix& m) {
    return std::holds_alternative<RealMatrix>(m);
}

inline ComplexMatrix to_complex(const DenseMatrix& m) {
    return std::visit([](const auto& a) -> ComplexMatrix { return a.template cast<Complex>(); }, m);
}

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Eigensolver failure, invariant breach, or similar numerical breakdown.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace ethbath
