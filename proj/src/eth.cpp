// eth.cpp

#include "ethbath/eth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ethbath {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double abs2(double v) { return v * v; }
double abs2(const Complex& v) { return std::norm(v); }

void check_aligned(const DenseMatrix& op, const EigenSystem& eig) {
    const auto n = rows(op);
    const bool square = std::visit([](const auto& m) { return m.rows() == m.cols(); }, op);
    if (!square || n != eig.dim()) {
        throw std::invalid_argument("eigenbasis operator does not match the eigensystem dimension");
    }
}

// Calls fn(n, m) for every ordered pair n != m with (E_n + E_m)/2 in the window.
template <typename Fn>
void for_each_window_pair(const Eigen::VectorXd& E, double E0, double window, Fn&& fn) {
    const double lo = E0 - 0.5 * window;
    const double hi = E0 + 0.5 * window;
    const double* begin = E.data();
    const double* end = E.data() + E.size();
    const double slack = 1e-12 * (1.0 + std::abs(E0) + window);
    for (Eigen::Index n = 0; n < E.size(); ++n) {
        const double* first = std::lower_bound(begin, end, 2.0 * lo - E(n) - slack);
        const double* last = std::upper_bound(begin, end, 2.0 * hi - E(n) + slack);
        for (const double* p = first; p < last; ++p) {
            const auto m = static_cast<Eigen::Index>(p - begin);
            if (m == n) continue;
            const double mid = 0.5 * (E(n) + E(m));
            if (mid < lo || mid > hi) continue;
            fn(n, m);
        }
    }
}

long bin_of(double w, double bin_width) { return std::lround(w / bin_width); }

Eigen::Index states_in_window(const Eigen::VectorXd& E, double E0, double window) {
    Eigen::Index c = 0;
    for (double e : E) {
        if (e >= E0 - 0.5 * window && e <= E0 + 0.5 * window) ++c;
    }
    return c;
}

double table_rate_factor(double kappa, double beta, double omega) {
    return kTwoPi * kappa * kappa * std::exp(0.5 * beta * omega);
}

template <typename Scalar>
SpectralFunctionTable bin_spectral(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& B,
                                   const EigenSystem& eig, double E0, double window, double freq_bin,
                                   const SpectralOptions& opts) {
    const Eigen::VectorXd& E = eig.values;
    long kmax = 0;
    std::vector<char> seen(static_cast<std::size_t>(E.size()), 0);
    std::size_t pairs = 0;
    for_each_window_pair(E, E0, window, [&](Eigen::Index n, Eigen::Index m) {
        kmax = std::max(kmax, std::abs(bin_of(E(m) - E(n), freq_bin)));
        seen[static_cast<std::size_t>(n)] = 1;
        seen[static_cast<std::size_t>(m)] = 1;
        ++pairs;
    });
    if (pairs == 0) throw std::invalid_argument("spectral_function: no eigenstate pairs in the energy window");
    const auto distinct = static_cast<std::size_t>(std::count(seen.begin(), seen.end(), 1));
    if (distinct < opts.min_states) {
        throw std::invalid_argument("spectral_function: window holds " + std::to_string(distinct) +
                                    " eigenstates, below the floor of " + std::to_string(opts.min_states));
    }

    SpectralFunctionTable t;
    t.center_energy = E0;
    t.window = window;
    t.bin_width = freq_bin;
    const Eigen::Index nb = 2 * kmax + 1;
    t.omega.resize(nb);
    for (Eigen::Index i = 0; i < nb; ++i) t.omega(i) = static_cast<double>(i - kmax) * freq_bin;
    Eigen::VectorXd sums = Eigen::VectorXd::Zero(nb);
    t.counts.assign(static_cast<std::size_t>(nb), 0);
    for_each_window_pair(E, E0, window, [&](Eigen::Index n, Eigen::Index m) {
        const auto i = static_cast<Eigen::Index>(bin_of(E(m) - E(n), freq_bin) + kmax);
        sums(i) += abs2(B(n, m));
        t.counts[static_cast<std::size_t>(i)]++;
    });

    t.log_density = opts.log_density ? *opts.log_density
                                     : std::log(static_cast<double>(std::max<Eigen::Index>(
                                           1, states_in_window(E, E0, window))));
    const double dos = std::exp(t.log_density);
    t.values = Eigen::VectorXd::Zero(nb);
    bool any = false;
    for (Eigen::Index i = 0; i < nb; ++i) {
        const auto c = t.counts[static_cast<std::size_t>(i)];
        if (c > 0) {
            t.values(i) = dos * sums(i) / static_cast<double>(c);
            any = true;
        }
    }
    if (!any) throw std::invalid_argument("spectral_function: all frequency bins are empty");
    double peak = t.values.maxCoeff();
    double asym = 0.0;
    for (Eigen::Index i = 0; i < nb; ++i) asym = std::max(asym, std::abs(t.values(i) - t.values(nb - 1 - i)));
    t.raw_asymmetry = peak > 0.0 ? asym / peak : 0.0;
    return t;
}

template <typename Scalar>
GoldenRuleRates bin_golden_rule(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& B,
                                const EigenSystem& eig, double E0, double window, double freq_bin,
                                double kappa) {
    const Eigen::VectorXd& E = eig.values;
    std::vector<Eigen::Index> members;
    for (Eigen::Index n = 0; n < E.size(); ++n) {
        if (E(n) >= E0 - 0.5 * window && E(n) <= E0 + 0.5 * window) members.push_back(n);
    }
    if (members.empty()) throw std::invalid_argument("golden_rule_rates: empty energy window");
    const double reach = E.maxCoeff() - E.minCoeff();
    const long kmax = bin_of(reach, freq_bin) + 1;
    const Eigen::Index nb = 2 * kmax + 1;
    GoldenRuleRates r;
    r.window_states = members.size();
    r.omega.resize(nb);
    for (Eigen::Index i = 0; i < nb; ++i) r.omega(i) = static_cast<double>(i - kmax) * freq_bin;
    r.gamma = Eigen::VectorXd::Zero(nb);
    r.counts.assign(static_cast<std::size_t>(nb), 0);
    for (Eigen::Index n : members) {
        for (Eigen::Index m = 0; m < E.size(); ++m) {
            if (m == n) continue;
            const auto i = static_cast<Eigen::Index>(bin_of(E(m) - E(n), freq_bin) + kmax);
            r.gamma(i) += abs2(B(n, m));
            r.counts[static_cast<std::size_t>(i)]++;
        }
    }
    r.gamma *= kTwoPi * kappa * kappa / (static_cast<double>(members.size()) * freq_bin);
    return r;
}

double interpolate_grid(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const std::vector<char>* valid, double w) {
    const Eigen::Index n = x.size();
    if (n == 0) throw std::out_of_range("interpolation on an empty grid");
    const double tol = 1e-12 * (1.0 + std::abs(w));
    if (w < x(0) - tol || w > x(n - 1) + tol) {
        throw std::out_of_range("frequency " + std::to_string(w) + " outside the tabulated support [" +
                                std::to_string(x(0)) + ", " + std::to_string(x(n - 1)) + "]");
    }
    auto ok = [valid](Eigen::Index i) { return !valid || (*valid)[static_cast<std::size_t>(i)]; };
    if (n == 1) {
        if (!ok(0)) throw std::domain_error("frequency falls on an empty bin");
        return y(0);
    }
    const double step = (x(n - 1) - x(0)) / static_cast<double>(n - 1);
    double pos = (w - x(0)) / step;
    if (std::abs(pos - std::round(pos)) < 1e-9) pos = std::round(pos);
    const auto i = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(pos)), 0, n - 2);
    const double t = std::clamp(pos - static_cast<double>(i), 0.0, 1.0);
    if ((t < 1.0 && !ok(i)) || (t > 0.0 && !ok(i + 1))) {
        throw std::domain_error("frequency " + std::to_string(w) + " falls next to an empty bin");
    }
    return (1.0 - t) * y(i) + t * y(i + 1);
}

} // namespace

DiagonalProfile diagonal_profile(const DenseMatrix& op_eig, const EigenSystem& eig,
                                 double central_fraction, int min_central_states) {
    check_aligned(op_eig, eig);
    const Eigen::Index n = eig.dim();
    DiagonalProfile p;
    p.energies = eig.values;
    p.diagonals = std::visit([](const auto& m) -> Eigen::VectorXd { return m.diagonal().real(); }, op_eig);
    Eigen::Index count = static_cast<Eigen::Index>(std::llround(central_fraction * static_cast<double>(n)));
    count = std::max<Eigen::Index>(count, min_central_states + 1);
    if (count > n) {
        throw std::invalid_argument("diagonal_profile: fewer than " + std::to_string(min_central_states) +
                                    " central states");
    }
    p.central_count = count;
    p.central_begin = (n - count) / 2;
    double acc = 0.0;
    for (Eigen::Index i = p.central_begin; i + 1 < p.central_begin + count; ++i) {
        acc += std::abs(p.diagonals(i + 1) - p.diagonals(i));
    }
    p.fluctuation = acc / static_cast<double>(count - 1);
    return p;
}

double SpectralFunctionTable::interpolate(double w) const {
    const double x = symmetrized ? std::abs(w) : w;
    const double tol = 1e-12 * (1.0 + std::abs(x));
    if (x < support_min() - tol || x > support_max() + tol) {
        throw std::out_of_range("frequency " + std::to_string(w) + " outside the spectral-function support");
    }
    double pos = (x - support_min()) / bin_width;
    if (std::abs(pos - std::round(pos)) < 1e-9) pos = std::round(pos);
    const auto i0 = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(pos)), 0, size() - 1);
    const auto i1 = std::min<Eigen::Index>(i0 + 1, size() - 1);
    const double t = std::clamp(pos - static_cast<double>(i0), 0.0, 1.0);
    if ((t < 1.0 && empty_bin(i0)) || (t > 0.0 && empty_bin(i1))) {
        throw std::domain_error("frequency " + std::to_string(w) + " falls next to an empty spectral bin");
    }
    return (1.0 - t) * values(i0) + t * values(i1);
}

SpectralFunctionTable SpectralFunctionTable::tabulated(Eigen::VectorXd omega, Eigen::VectorXd values,
                                                       double beta) {
    if (omega.size() != values.size() || omega.size() < 1) {
        throw std::invalid_argument("tabulated: grid and values must be nonempty and aligned");
    }
    SpectralFunctionTable t;
    t.bin_width = omega.size() > 1 ? (omega(omega.size() - 1) - omega(0)) / static_cast<double>(omega.size() - 1) : 1.0;
    t.omega = std::move(omega);
    t.values = std::move(values);
    t.counts.assign(static_cast<std::size_t>(t.omega.size()), 1);
    t.beta = beta;
    const Eigen::Index n = t.size();
    bool sym = true;
    for (Eigen::Index i = 0; i < n && sym; ++i) {
        sym = std::abs(t.omega(i) + t.omega(n - 1 - i)) <= 1e-9 * t.bin_width &&
              t.values(i) == t.values(n - 1 - i);
    }
    t.symmetrized = sym;
    return t;
}

SpectralFunctionTable spectral_function(const DenseMatrix& op_eig, const EigenSystem& eig, double E0,
                                        double window, double freq_bin, const SpectralOptions& opts) {
    check_aligned(op_eig, eig);
    if (!(freq_bin > 0.0)) throw std::invalid_argument("spectral_function: frequency bin must be positive");
    if (!(window > 0.0)) throw std::invalid_argument("spectral_function: energy window must be positive");
    return std::visit([&](const auto& B) { return bin_spectral(B, eig, E0, window, freq_bin, opts); }, op_eig);
}

SpectralFunctionTable symmetrize(const SpectralFunctionTable& table) {
    SpectralFunctionTable t = table;
    const Eigen::Index n = t.size();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(t.omega(i) + t.omega(n - 1 - i)) > 1e-9 * t.bin_width) {
            throw std::invalid_argument("symmetrize: frequency grid is not mirrored about zero");
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index j = n - 1 - i;
        if (j < i) break;
        const double mean = 0.5 * (table.values(i) + table.values(j));
        const std::size_t c = table.counts[static_cast<std::size_t>(i)] +
                              (i == j ? 0 : table.counts[static_cast<std::size_t>(j)]);
        t.values(i) = mean;
        t.values(j) = mean;
        t.counts[static_cast<std::size_t>(i)] = c;
        t.counts[static_cast<std::size_t>(j)] = c;
    }
    t.symmetrized = true;
    return t;
}

double spectral_integral(const SpectralFunctionTable& table, double beta) {
    const Eigen::Index n = table.size();
    if (n == 0) return 0.0;
    if (n == 1) return 0.0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        acc += w * std::exp(0.5 * beta * table.omega(i)) * table.values(i);
    }
    return acc * table.bin_width;
}

SpectralFunctionTable normalize_spectral_function(const SpectralFunctionTable& table, double varB,
                                                  double beta) {
    if (!(varB >= 0.0)) throw std::invalid_argument("normalize: variance must be nonnegative");
    if (table.size() == 0) throw std::invalid_argument("normalize: empty table");
    SpectralFunctionTable t = table;
    t.beta = beta;
    t.normalized = true;
    if (varB == 0.0) {
        t.values.setZero();
        t.normalization = 0.0;
        return t;
    }
    const double integral = spectral_integral(table, beta);
    if (!(integral > 0.0)) throw std::domain_error("normalize: zero spectral integral with nonzero variance");
    const double c = varB / integral;
    t.values *= c;
    t.normalization = table.normalization * c;
    return t;
}

double eigenstate_variance(const DenseMatrix& op_eig, Eigen::Index n) {
    return std::visit(
        [n](const auto& B) {
            if (n < 0 || n >= B.rows()) throw std::out_of_range("eigenstate index out of range");
            double acc = 0.0;
            for (Eigen::Index m = 0; m < B.rows(); ++m) {
                if (m != n) acc += abs2(B(m, n));
            }
            return acc;
        },
        op_eig);
}

double transition_rate(const SpectralFunctionTable& table, double kappa, double beta, double omega) {
    if (!(kappa >= 0.0)) throw std::invalid_argument("transition_rate: kappa must be nonnegative");
    if (!table.symmetrized) throw std::invalid_argument("transition_rate: table must be symmetrized");
    return table_rate_factor(kappa, beta, omega) * table.interpolate(omega);
}

FiniteSizeRate finite_size_transition_rate(const SpectralFunctionTable& table,
                                           const SpectralFunctionTable& dtable_dE, double kappa,
                                           double beta, double capacity, double omega) {
    if (!(kappa >= 0.0)) throw std::invalid_argument("finite_size_transition_rate: kappa must be nonnegative");
    if (!(capacity > 0.0)) throw std::invalid_argument("finite_size_transition_rate: heat capacity must be positive");
    if (!table.symmetrized) throw std::invalid_argument("finite_size_transition_rate: table must be symmetrized");
    const double gauss = (beta == 0.0 || std::isinf(capacity))
                             ? 0.0
                             : 3.0 * beta * beta * omega * omega / (8.0 * capacity);
    const double bracket = table.interpolate(omega) + 0.5 * omega * dtable_dE.interpolate(omega);
    FiniteSizeRate r;
    if (bracket < 0.0) {
        r.clipped = true;
        return r;
    }
    r.value = kTwoPi * kappa * kappa * std::exp(0.5 * beta * omega - gauss) * bracket;
    return r;
}

SpectralFunctionTable energy_derivative(const SpectralFunctionTable& lower,
                                        const SpectralFunctionTable& upper, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("energy_derivative: delta must be positive");
    if (lower.bin_width != upper.bin_width) {
        throw std::invalid_argument("energy_derivative: tables use different frequency bins");
    }
    const double wmax = std::min(-lower.support_min(), lower.support_max());
    const double umax = std::min(-upper.support_min(), upper.support_max());
    const long k = std::lround(std::min(wmax, umax) / lower.bin_width);
    const Eigen::Index n = 2 * k + 1;
    SpectralFunctionTable d;
    d.center_energy = 0.5 * (lower.center_energy + upper.center_energy);
    d.window = lower.window;
    d.bin_width = lower.bin_width;
    d.omega.resize(n);
    d.values.resize(n);
    d.counts.assign(static_cast<std::size_t>(n), 0);
    auto index_in = [](const SpectralFunctionTable& t, double w) {
        return static_cast<std::size_t>(std::lround((w - t.support_min()) / t.bin_width));
    };
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = static_cast<double>(i - k) * d.bin_width;
        const auto il = index_in(lower, w);
        const auto iu = index_in(upper, w);
        d.omega(i) = w;
        d.values(i) = (upper.values(static_cast<Eigen::Index>(iu)) - lower.values(static_cast<Eigen::Index>(il))) /
                      (2.0 * delta);
        d.counts[static_cast<std::size_t>(i)] = std::min(lower.counts[il], upper.counts[iu]);
    }
    d.symmetrized = lower.symmetrized && upper.symmetrized;
    d.normalized = lower.normalized && upper.normalized;
    return d;
}

double caldeira_leggett_density(const SpectralFunctionTable& table, double beta, double omega) {
    return kTwoPi * std::sinh(0.5 * beta * omega) * table.interpolate(omega);
}

double RateFunction::operator()(double w) const { return interpolate_grid(omega, gamma, valid.empty() ? nullptr : &valid, w); }

RateFunction make_rate_function(const SpectralFunctionTable& table, double kappa, double beta) {
    RateFunction r;
    r.kappa = kappa;
    r.beta = beta;
    r.order = RateOrder::leading;
    if (!table.symmetrized) throw std::invalid_argument("make_rate_function: table must be symmetrized");
    r.omega = table.omega;
    r.gamma.resize(table.size());
    r.valid.resize(static_cast<std::size_t>(table.size()));
    for (Eigen::Index i = 0; i < table.size(); ++i) {
        r.gamma(i) = table_rate_factor(kappa, beta, table.omega(i)) * table.values(i);
        r.valid[static_cast<std::size_t>(i)] = !table.empty_bin(i);
    }
    return r;
}

RateFunction make_finite_size_rate_function(const SpectralFunctionTable& table,
                                            const SpectralFunctionTable& dtable_dE, double kappa,
                                            double beta, double capacity) {
    RateFunction r;
    r.kappa = kappa;
    r.beta = beta;
    r.order = RateOrder::finite_size;
    const double wmax = std::min(table.support_max(), dtable_dE.support_max());
    const long k = std::lround(wmax / table.bin_width);
    r.omega.resize(2 * k + 1);
    r.gamma.resize(2 * k + 1);
    r.valid.assign(static_cast<std::size_t>(2 * k + 1), 0);
    for (long i = -k; i <= k; ++i) {
        const double w = static_cast<double>(i) * table.bin_width;
        const auto idx = static_cast<Eigen::Index>(i + k);
        r.omega(idx) = w;
        try {
            const auto fs = finite_size_transition_rate(table, dtable_dE, kappa, beta, capacity, w);
            r.gamma(idx) = fs.value;
            r.valid[static_cast<std::size_t>(idx)] = 1;
            if (fs.clipped) ++r.clipped_points;
        } catch (const std::domain_error&) {
            r.gamma(idx) = 0.0;
        }
    }
    return r;
}

std::vector<RateMatrix> rate_matrix_multi(std::span<const DenseMatrix> ops_eig, const EigenSystem& eig,
                                          double E0, double window, double freq_bin, double kappa,
                                          double beta, const MultiRateOptions& opts) {
    if (ops_eig.empty()) throw std::invalid_argument("rate_matrix_multi: no operators");
    if (!(freq_bin > 0.0)) throw std::invalid_argument("rate_matrix_multi: frequency bin must be positive");
    for (const auto& op : ops_eig) check_aligned(op, eig);
    const auto nops = static_cast<Eigen::Index>(ops_eig.size());
    std::vector<double> scale = opts.normalization;
    if (scale.empty()) scale.assign(ops_eig.size(), 1.0);
    if (scale.size() != ops_eig.size()) throw std::invalid_argument("rate_matrix_multi: one normalization per operator");

    std::vector<ComplexMatrix> ops;
    ops.reserve(ops_eig.size());
    for (const auto& op : ops_eig) ops.push_back(to_complex(op));

    const Eigen::VectorXd& E = eig.values;
    long kmax = 0;
    std::size_t pairs = 0;
    for_each_window_pair(E, E0, window, [&](Eigen::Index n, Eigen::Index m) {
        kmax = std::max(kmax, std::abs(bin_of(E(m) - E(n), freq_bin)));
        ++pairs;
    });
    if (pairs == 0) throw std::invalid_argument("rate_matrix_multi: empty energy window");
    const Eigen::Index nb = 2 * kmax + 1;
    std::vector<ComplexMatrix> sums(static_cast<std::size_t>(nb), ComplexMatrix::Zero(nops, nops));
    std::vector<std::size_t> counts(static_cast<std::size_t>(nb), 0);
    Eigen::VectorXcd v(nops);
    for_each_window_pair(E, E0, window, [&](Eigen::Index n, Eigen::Index m) {
        const auto i = static_cast<std::size_t>(bin_of(E(m) - E(n), freq_bin) + kmax);
        for (Eigen::Index mu = 0; mu < nops; ++mu) v(mu) = ops[static_cast<std::size_t>(mu)](n, m);
        // B^mu_nm B^nu_mn = B^mu_nm conj(B^nu_nm)
        sums[i].noalias() += v * v.adjoint();
        counts[i]++;
    });

    const double log_density = opts.log_density ? *opts.log_density
                                                : std::log(static_cast<double>(std::max<Eigen::Index>(
                                                      1, states_in_window(E, E0, window))));
    const double dos = std::exp(log_density);
    Eigen::VectorXd sq(nops);
    for (Eigen::Index mu = 0; mu < nops; ++mu) sq(mu) = std::sqrt(scale[static_cast<std::size_t>(mu)]);

    std::vector<RateMatrix> out;
    for (Eigen::Index i = 0; i < nb; ++i) {
        const auto c = counts[static_cast<std::size_t>(i)];
        if (c == 0) continue;
        RateMatrix rm;
        rm.omega = static_cast<double>(i - kmax) * freq_bin;
        rm.count = c;
        ComplexMatrix F = dos * sums[static_cast<std::size_t>(i)] / static_cast<double>(c);
        F = sq.asDiagonal() * F * sq.asDiagonal();
        ComplexMatrix G = table_rate_factor(kappa, beta, rm.omega) * F;
        rm.hermiticity_residual = (G - G.adjoint()).cwiseAbs().maxCoeff();
        rm.flagged = rm.hermiticity_residual > 1e-6;
        rm.gamma = 0.5 * (G + G.adjoint());
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rm.gamma);
        if (es.info() != Eigen::Success) throw NumericalError("rate_matrix_multi: eigensolver failed");
        rm.eigenvalues = es.eigenvalues();
        rm.unitary = es.eigenvectors();
        rm.min_eigenvalue = rm.eigenvalues.minCoeff();
        rm.clipped = rm.min_eigenvalue < 0.0 ? -rm.eigenvalues.cwiseMin(0.0).sum() : 0.0;
        out.push_back(std::move(rm));
    }
    return out;
}

double GoldenRuleRates::operator()(double w) const { return interpolate_grid(omega, gamma, nullptr, w); }

GoldenRuleRates golden_rule_rates(const DenseMatrix& op_eig, const EigenSystem& eig, double E0,
                                  double window, double freq_bin, double kappa) {
    check_aligned(op_eig, eig);
    if (!(freq_bin > 0.0)) throw std::invalid_argument("golden_rule_rates: frequency bin must be positive");
    return std::visit([&](const auto& B) { return bin_golden_rule(B, eig, E0, window, freq_bin, kappa); }, op_eig);
}

} // namespace ethbath
