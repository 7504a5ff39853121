// dynamics.cpp

#include "ethbath/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ethbath {

namespace {

constexpr Eigen::Index kTimeChunk = 128;
const Complex I(0.0, 1.0);

double min_eigenvalue(const Matrix2c& rho) {
    const Matrix2c h = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

void record_checks(TrajectoryChecks& c, const Matrix2c& rho) {
    c.max_trace_error = std::max(c.max_trace_error, std::abs(rho.trace() - 1.0));
    c.min_eigenvalue = std::min(c.min_eigenvalue, min_eigenvalue(rho));
    c.max_hermiticity_error = std::max(c.max_hermiticity_error, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
}

// Y = B.rows(rows) * W, done as two real products when B is real
template <typename Scalar>
ComplexMatrix rows_times(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& Bs, const ComplexMatrix& W) {
    if constexpr (std::is_same_v<Scalar, double>) {
        const RealMatrix re = Bs * W.real();
        const RealMatrix im = Bs * W.imag();
        ComplexMatrix Y(re.rows(), re.cols());
        Y.real() = re;
        Y.imag() = im;
        return Y;
    } else {
        return Bs * W;
    }
}

} // namespace

TimeGrid TimeGrid::uniform(double t_max, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("time grid: dt must be positive");
    if (!(t_max >= 0.0)) throw std::invalid_argument("time grid: t_max must be nonnegative");
    const double steps = t_max / dt;
    const double r = std::round(steps);
    if (std::abs(steps - r) > 1e-9 * std::max(1.0, steps)) {
        throw std::invalid_argument("time grid: t_max is not a multiple of dt");
    }
    TimeGrid g;
    g.t_max = t_max;
    g.dt = dt;
    g.count = static_cast<Eigen::Index>(r) + 1;
    return g;
}

Eigen::VectorXd TimeGrid::times() const {
    Eigen::VectorXd t(count);
    for (Eigen::Index i = 0; i < count; ++i) t(i) = (*this)[i];
    return t;
}

EffectiveSystem mean_field_shift(const SystemParams& sys, double kappa, double B_expect) {
    return mean_field_shift(sys, kappa, B_expect, pauli(Axis::x));
}

EffectiveSystem mean_field_shift(const SystemParams& sys, double kappa, double B_expect, const Matrix2c& S) {
    EffectiveSystem e;
    e.H = system_hamiltonian(sys) + kappa * B_expect * S;
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(e.H, Eigen::EigenvaluesOnly);
    e.bohr_frequency = es.eigenvalues()(1) - es.eigenvalues()(0);
    return e;
}

double expectation(const DenseMatrix& op_eig, const PureState& psi) {
    if (psi.basis != Basis::energy) throw std::invalid_argument("expectation: state must be in the energy basis");
    if (psi.dim() != rows(op_eig)) throw std::invalid_argument("expectation: dimension mismatch");
    return std::visit([&](const auto& B) { return psi.amplitudes.dot(B * psi.amplitudes).real(); }, op_eig);
}

BathCorrelation bath_correlation_function(const EigenSystem& eig, const DenseMatrix& B_eig,
                                          const PureState& psi, const TimeGrid& grid) {
    if (psi.basis != Basis::energy) {
        throw std::invalid_argument("bath_correlation_function: state must be in the energy basis");
    }
    const Eigen::Index N = eig.dim();
    if (psi.dim() != N || rows(B_eig) != N) throw std::invalid_argument("bath_correlation_function: dimension mismatch");
    const Eigen::VectorXd& E = eig.values;
    const Eigen::VectorXcd& c = psi.amplitudes;

    std::vector<Eigen::Index> support;
    for (Eigen::Index n = 0; n < N; ++n) {
        if (c(n) != 0.0) support.push_back(n);
    }
    const auto S = static_cast<Eigen::Index>(support.size());

    BathCorrelation out;
    out.times = grid.times();
    out.values.resize(grid.count);
    std::visit(
        [&](const auto& B) {
            using Mat = std::decay_t<decltype(B)>;
            Mat Bs(S, N);
            Eigen::VectorXcd cs(S);
            Eigen::VectorXd Es(S);
            for (Eigen::Index i = 0; i < S; ++i) {
                Bs.row(i) = B.row(support[static_cast<std::size_t>(i)]);
                cs(i) = c(support[static_cast<std::size_t>(i)]);
                Es(i) = E(support[static_cast<std::size_t>(i)]);
            }
            // v = B c, only the support columns of B contribute
            Eigen::VectorXcd v = Eigen::VectorXcd::Zero(N);
            for (Eigen::Index i = 0; i < S; ++i) v += B.col(support[static_cast<std::size_t>(i)]) * cs(i);
            const double mean = cs.dot(v(support)).real();
            const double second = v.squaredNorm();
            out.variance = second - mean * mean;

            for (Eigen::Index t0 = 0; t0 < grid.count; t0 += kTimeChunk) {
                const Eigen::Index nt = std::min(kTimeChunk, grid.count - t0);
                ComplexMatrix W(N, nt);
                for (Eigen::Index j = 0; j < nt; ++j) {
                    const double t = grid[t0 + j];
                    W.col(j) = (-I * t * E.array()).exp().matrix().cwiseProduct(v);
                }
                const ComplexMatrix Y = rows_times(Bs, W);
                for (Eigen::Index j = 0; j < nt; ++j) {
                    const double t = grid[t0 + j];
                    const Eigen::VectorXcd a = (-I * t * Es.array()).exp().matrix().cwiseProduct(cs);
                    out.values(t0 + j) = a.dot(Y.col(j)) - mean * mean;
                }
            }
        },
        B_eig);
    return out;
}

BathCorrelation bath_correlation_function(const EigenSystem& eig, const DenseMatrix& B_eig,
                                          const PureState& psi, const TimeGrid& grid, double s) {
    if (psi.basis != Basis::energy) {
        throw std::invalid_argument("bath_correlation_function: state must be in the energy basis");
    }
    PureState evolved = psi;
    evolved.amplitudes = (-I * s * eig.values.array()).exp().matrix().cwiseProduct(psi.amplitudes);
    return bath_correlation_function(eig, B_eig, evolved, grid);
}

BathCorrelation bcf_from_spectral_function(const SpectralFunctionTable& table, double beta, const TimeGrid& grid) {
    if (!table.normalized) throw std::invalid_argument("bcf_from_spectral_function: table is not normalized");
    const Eigen::Index nb = table.size();
    Eigen::VectorXd weights(nb);
    for (Eigen::Index k = 0; k < nb; ++k) {
        const double trap = (nb > 1 && (k == 0 || k == nb - 1)) ? 0.5 : 1.0;
        weights(k) = trap * table.bin_width * std::exp(0.5 * beta * table.omega(k)) * table.values(k);
    }
    BathCorrelation out;
    out.preparation = "spectral-function";
    out.times = grid.times();
    out.values.resize(grid.count);
    for (Eigen::Index j = 0; j < grid.count; ++j) {
        const double t = grid[j];
        out.values(j) = ((-I * t * table.omega.array()).exp() * weights.array()).sum();
    }
    out.variance = weights.sum();
    return out;
}

double half_width_half_max(const BathCorrelation& bcf) {
    if (bcf.values.size() == 0) throw std::invalid_argument("half_width_half_max: empty correlation");
    const double half = 0.5 * std::abs(bcf.values(0));
    for (Eigen::Index j = 1; j < bcf.values.size(); ++j) {
        const double a = std::abs(bcf.values(j - 1));
        const double b = std::abs(bcf.values(j));
        if (b <= half) {
            const double t0 = bcf.times(j - 1), t1 = bcf.times(j);
            return a == b ? t1 : t0 + (a - half) / (a - b) * (t1 - t0);
        }
    }
    return std::numeric_limits<double>::infinity();
}

std::vector<JumpOperator> lowering_operators(const Matrix2c& H, const Matrix2c& S) {
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(0.5 * (H + H.adjoint()));
    const double w = es.eigenvalues()(1) - es.eigenvalues()(0);
    if (!(w > 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))) {
        throw std::invalid_argument("lowering_operators: degenerate system Hamiltonian");
    }
    const Eigen::Vector2cd g = es.eigenvectors().col(0);
    const Eigen::Vector2cd e = es.eigenvectors().col(1);
    const Matrix2c Pg = g * g.adjoint();
    const Matrix2c Pe = e * e.adjoint();

    const double tiny = 1e-14 * std::max(1.0, S.cwiseAbs().maxCoeff());
    std::vector<JumpOperator> out;
    for (JumpOperator j : {JumpOperator{w, Pg * S * Pe}, JumpOperator{-w, Pe * S * Pg},
                           JumpOperator{0.0, Pg * S * Pg + Pe * S * Pe}}) {
        if (j.op.cwiseAbs().maxCoeff() > tiny) out.push_back(j);
    }

    Matrix2c sum = Matrix2c::Zero();
    for (const auto& j : out) sum += j.op;
    if ((sum - S).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, S.cwiseAbs().maxCoeff())) {
        throw NumericalError("lowering_operators: components do not sum to the coupling operator");
    }
    return out;
}

double LindbladModel::population_rate() const {
    double r = 0.0;
    for (const auto& c : channels) {
        if (c.omega != 0.0) r += c.rate * c.op.squaredNorm();
    }
    return r;
}

double LindbladModel::max_rate() const {
    double r = 0.0;
    for (const auto& c : channels) r += c.rate * c.op.squaredNorm();
    return r;
}

LindbladModel build_lindblad(const EffectiveSystem& hs, const std::vector<JumpOperator>& jumps,
                             const std::function<double(double)>& rate, const LindbladOptions& opts) {
    LindbladModel m;
    m.H = hs.H;
    m.bohr_frequency = hs.bohr_frequency;
    for (const auto& j : jumps) {
        if (j.omega == 0.0 && !opts.include_zero_frequency) continue;
        const double g = rate(j.omega);
        if (!(g >= 0.0)) {
            throw NumericalError("build_lindblad: negative rate " + std::to_string(g) + " at w = " +
                                 std::to_string(j.omega));
        }
        m.channels.push_back({j.omega, j.op, g});
    }
    return m;
}

LindbladModel build_lindblad_multi(const EffectiveSystem& hs, std::span<const Matrix2c> system_ops,
                                   const std::function<ComplexMatrix(double)>& rate_matrix,
                                   const LindbladOptions& opts, double* clipped) {
    if (system_ops.empty()) throw std::invalid_argument("build_lindblad_multi: no system operators");
    const auto n = static_cast<Eigen::Index>(system_ops.size());
    std::vector<std::vector<JumpOperator>> parts;
    for (const auto& S : system_ops) parts.push_back(lowering_operators(hs.H, S));

    LindbladModel m;
    m.H = hs.H;
    m.bohr_frequency = hs.bohr_frequency;
    double clip = 0.0;
    for (double w : {hs.bohr_frequency, -hs.bohr_frequency, 0.0}) {
        if (w == 0.0 && !opts.include_zero_frequency) continue;
        std::vector<Matrix2c> comp(system_ops.size(), Matrix2c::Zero());
        for (std::size_t mu = 0; mu < parts.size(); ++mu) {
            for (const auto& j : parts[mu]) {
                if (j.omega == w) comp[mu] = j.op;
            }
        }
        ComplexMatrix G = rate_matrix(w);
        if (G.rows() != n || G.cols() != n) throw std::invalid_argument("build_lindblad_multi: rate matrix shape");
        G = 0.5 * (G + G.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(G);
        for (Eigen::Index k = 0; k < n; ++k) {
            double lam = es.eigenvalues()(k);
            if (lam < 0.0) {
                clip += -lam;
                lam = 0.0;
            }
            Matrix2c A = Matrix2c::Zero();
            for (Eigen::Index nu = 0; nu < n; ++nu) {
                A += std::conj(es.eigenvectors()(nu, k)) * comp[static_cast<std::size_t>(nu)];
            }
            m.channels.push_back({w, A, lam});
        }
    }
    if (clipped) *clipped = clip;
    return m;
}

Matrix2c lindblad_rhs(const LindbladModel& model, const Matrix2c& rho) {
    Matrix2c d = -I * (model.H * rho - rho * model.H);
    for (const auto& c : model.channels) {
        const Matrix2c LdL = c.op.adjoint() * c.op;
        d += c.rate * (c.op * rho * c.op.adjoint() - 0.5 * (LdL * rho + rho * LdL));
    }
    return d;
}

Matrix2c lindblad_stationary_state(const LindbladModel& model) {
    Eigen::Matrix4cd M;
    for (int k = 0; k < 4; ++k) {
        Matrix2c E = Matrix2c::Zero();
        E(k % 2, k / 2) = 1.0;
        const Matrix2c r = lindblad_rhs(model, E);
        M.col(k) = Eigen::Map<const Eigen::Vector4cd>(r.data());
    }
    // replace one equation by the trace condition
    M.row(0) << 1.0, 0.0, 0.0, 1.0;
    Eigen::Vector4cd rhs = Eigen::Vector4cd::Zero();
    rhs(0) = 1.0;
    const Eigen::Vector4cd x = M.fullPivLu().solve(rhs);
    return Eigen::Map<const Matrix2c>(x.data());
}

Eigen::VectorXd ReducedTrajectory::population(int level) const {
    Eigen::VectorXd p(size());
    for (Eigen::Index i = 0; i < size(); ++i) p(i) = rho[static_cast<std::size_t>(i)](level, level).real();
    return p;
}

Eigen::VectorXd ReducedTrajectory::coherence() const {
    Eigen::VectorXd c(size());
    for (Eigen::Index i = 0; i < size(); ++i) c(i) = std::abs(rho[static_cast<std::size_t>(i)](0, 1));
    return c;
}

ReducedTrajectory lindblad_evolve(const LindbladModel& model, const Matrix2c& rho0, const TimeGrid& grid,
                                  const IntegratorOptions& opts) {
    if (std::abs(rho0.trace() - 1.0) > 1e-10 || (rho0 - rho0.adjoint()).cwiseAbs().maxCoeff() > 1e-10 ||
        min_eigenvalue(rho0) < -1e-10) {
        throw std::invalid_argument("lindblad_evolve: initial state is not a density matrix");
    }
    for (const auto& c : model.channels) {
        if (!(c.rate >= 0.0)) throw std::invalid_argument("lindblad_evolve: negative rate in model");
    }
    const double scale = std::max(model.bohr_frequency, model.population_rate());
    const double bound = scale > 0.0 ? 0.01 / scale : grid.dt;
    Eigen::Index nsub = 1;
    if (opts.step > 0.0) {
        if (opts.step > bound * (1.0 + 1e-12)) {
            throw std::invalid_argument("lindblad_evolve: step " + std::to_string(opts.step) +
                                        " exceeds the bound " + std::to_string(bound));
        }
        nsub = static_cast<Eigen::Index>(std::llround(grid.dt / opts.step));
        if (nsub < 1 || std::abs(static_cast<double>(nsub) * opts.step - grid.dt) > 1e-9 * grid.dt) {
            throw std::invalid_argument("lindblad_evolve: step does not divide the grid spacing");
        }
    } else {
        nsub = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(grid.dt / bound - 1e-12)));
    }
    const double h = grid.dt / static_cast<double>(nsub);

    ReducedTrajectory traj;
    traj.provenance = Provenance::lindblad;
    traj.times = grid.times();
    traj.rho.reserve(static_cast<std::size_t>(grid.count));
    Matrix2c rho = rho0;
    traj.rho.push_back(rho);
    record_checks(traj.checks, rho);
    for (Eigen::Index i = 1; i < grid.count; ++i) {
        for (Eigen::Index s = 0; s < nsub; ++s) {
            const Matrix2c k1 = lindblad_rhs(model, rho);
            const Matrix2c k2 = lindblad_rhs(model, rho + 0.5 * h * k1);
            const Matrix2c k3 = lindblad_rhs(model, rho + 0.5 * h * k2);
            const Matrix2c k4 = lindblad_rhs(model, rho + h * k3);
            rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        traj.rho.push_back(rho);
        record_checks(traj.checks, rho);
        const auto& c = traj.checks;
        if (c.max_trace_error > opts.invariant_tolerance || c.min_eigenvalue < -opts.invariant_tolerance ||
            c.max_hermiticity_error > opts.invariant_tolerance) {
            throw NumericalError("lindblad_evolve: density-matrix invariants violated at t = " +
                                 std::to_string(traj.times(i)));
        }
    }
    return traj;
}

Matrix2c partial_trace_bath(const Eigen::VectorXcd& psi) {
    if (psi.size() < 2 || psi.size() % 2 != 0) throw std::invalid_argument("partial_trace_bath: odd dimension");
    const Eigen::Index nb = psi.size() / 2;
    const auto top = psi.head(nb);
    const auto bot = psi.tail(nb);
    Matrix2c r;
    r(0, 0) = top.squaredNorm();
    r(1, 1) = bot.squaredNorm();
    r(0, 1) = bot.dot(top); // sum_k top_k conj(bot_k)
    r(1, 0) = std::conj(r(0, 1));
    return r;
}

Matrix2c partial_trace_bath(const ComplexMatrix& rho) {
    if (rho.rows() != rho.cols() || rho.rows() < 2 || rho.rows() % 2 != 0) {
        throw std::invalid_argument("partial_trace_bath: expected an even square matrix");
    }
    const Eigen::Index nb = rho.rows() / 2;
    Matrix2c r;
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) r(a, b) = rho.block(a * nb, b * nb, nb, nb).trace();
    }
    return r;
}

ReducedTrajectory exact_evolve(const EigenSystem& total, const PureState& psi0, const TimeGrid& grid) {
    if (psi0.basis != Basis::computational) throw std::invalid_argument("exact_evolve: state must be computational");
    const Eigen::Index N = total.dim();
    if (psi0.dim() != N) throw std::invalid_argument("exact_evolve: dimension mismatch");
    if (std::abs(psi0.norm() - 1.0) > 1e-10) throw std::invalid_argument("exact_evolve: state is not normalized");
    if (N % 2 != 0) throw std::invalid_argument("exact_evolve: dimension is not 2 * 2^L");
    const Eigen::VectorXd& E = total.values;
    const Eigen::VectorXcd c0 = to_energy_basis(psi0, total).amplitudes;

    ReducedTrajectory traj;
    traj.provenance = Provenance::exact;
    traj.times = grid.times();
    traj.rho.resize(static_cast<std::size_t>(grid.count));
    for (Eigen::Index t0 = 0; t0 < grid.count; t0 += kTimeChunk) {
        const Eigen::Index nt = std::min(kTimeChunk, grid.count - t0);
        ComplexMatrix Phi(N, nt);
        for (Eigen::Index j = 0; j < nt; ++j) {
            Phi.col(j) = (-I * grid[t0 + j] * E.array()).exp().matrix().cwiseProduct(c0);
        }
        const ComplexMatrix Psi = std::visit([&](const auto& V) { return rows_times(V, Phi); }, total.vectors);
        for (Eigen::Index j = 0; j < nt; ++j) {
            traj.checks.max_norm_error = std::max(traj.checks.max_norm_error, std::abs(Psi.col(j).norm() - 1.0));
            const Matrix2c r = partial_trace_bath(Eigen::VectorXcd(Psi.col(j)));
            traj.rho[static_cast<std::size_t>(t0 + j)] = r;
            record_checks(traj.checks, r);
        }
    }
    if (traj.checks.max_norm_error > 1e-8) {
        throw NumericalError("exact_evolve: norm drift " + std::to_string(traj.checks.max_norm_error));
    }
    return traj;
}

Matrix2c mean_force_state(const EigenSystem& total, double beta) {
    if (!std::isfinite(beta)) throw std::invalid_argument("mean_force_state: beta must be finite");
    const Eigen::Index N = total.dim();
    if (N < 2 || N % 2 != 0) throw std::invalid_argument("mean_force_state: dimension is not 2 * 2^L");
    const Eigen::ArrayXd e = total.values.array();
    const double shift = beta >= 0.0 ? e.minCoeff() : e.maxCoeff();
    const Eigen::VectorXd w = (-beta * (e - shift)).exp().matrix();
    const Eigen::Index nb = N / 2;
    Matrix2c r = std::visit(
        [&](const auto& V) {
            Matrix2c acc;
            acc(0, 0) = V.topRows(nb).colwise().squaredNorm().dot(w.transpose());
            acc(1, 1) = V.bottomRows(nb).colwise().squaredNorm().dot(w.transpose());
            const Eigen::RowVectorXcd cross =
                V.topRows(nb).template cast<Complex>().cwiseProduct(V.bottomRows(nb).template cast<Complex>().conjugate())
                    .colwise()
                    .sum();
            acc(0, 1) = (cross.array() * w.transpose().array()).sum();
            acc(1, 0) = std::conj(acc(0, 1));
            return acc;
        },
        total.vectors);
    return r / r.trace().real();
}

Matrix2c gibbs_state(const Matrix2c& H, double beta) {
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(0.5 * (H + H.adjoint()));
    const Eigen::Vector2d ev = es.eigenvalues();
    const Eigen::Vector2d w = (-beta * (ev.array() - (beta >= 0.0 ? ev(0) : ev(1)))).exp();
    const Matrix2c rho = es.eigenvectors() * w.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
    return rho / rho.trace().real();
}

double trace_distance(const Matrix2c& rho, const Matrix2c& sigma) {
    const Matrix2c d = rho - sigma;
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

Eigen::VectorXd trace_distance_series(const ReducedTrajectory& a, const ReducedTrajectory& b) {
    if (a.size() != b.size() || (a.times - b.times).cwiseAbs().maxCoeff() > 1e-9) {
        throw std::invalid_argument("trace distance: trajectories use different time grids");
    }
    Eigen::VectorXd T(a.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        T(i) = trace_distance(a.rho[static_cast<std::size_t>(i)], b.rho[static_cast<std::size_t>(i)]);
    }
    return T;
}

double time_average(const Eigen::VectorXd& times, const Eigen::VectorXd& y, double t_from, double t_to) {
    if (times.size() != y.size()) throw std::invalid_argument("time_average: misaligned series");
    const double tol = 1e-9 * std::max(1.0, std::abs(t_to));
    double acc = 0.0, span = 0.0;
    Eigen::Index prev = -1;
    for (Eigen::Index i = 0; i < times.size(); ++i) {
        if (times(i) < t_from - tol || times(i) > t_to + tol) continue;
        if (prev >= 0) {
            const double dt = times(i) - times(prev);
            acc += 0.5 * dt * (y(i) + y(prev));
            span += dt;
        }
        prev = i;
    }
    if (prev < 0) throw std::invalid_argument("time_average: no grid points in range");
    if (span == 0.0) return y(prev);
    return acc / span;
}

double time_averaged_trace_distance(const ReducedTrajectory& a, const ReducedTrajectory& b, double t_final) {
    const Eigen::VectorXd T = trace_distance_series(a, b);
    if (a.size() == 0 || t_final > a.times(a.size() - 1) + 1e-9 * std::max(1.0, t_final)) {
        throw std::invalid_argument("time-averaged trace distance: grid does not cover t_final");
    }
    const bool on_grid = ((a.times.array() - t_final).abs() < 1e-9 * std::max(1.0, t_final)).any();
    if (!on_grid) throw std::invalid_argument("time-averaged trace distance: t_final is not a grid point");
    return time_average(a.times, T, 0.0, t_final);
}

ExponentialFit fit_exponential_rate(const Eigen::VectorXd& times, const Eigen::VectorXd& y, double asymptote,
                                   std::optional<double> expected_rate) {
    if (times.size() != y.size() || times.size() == 0) throw std::invalid_argument("fit_exponential_rate: bad series");
    const double d0 = std::abs(y(0) - asymptote);
    if (!(d0 > 0.0)) throw std::invalid_argument("fit_exponential_rate: series starts at its asymptote");
    if (expected_rate && !(*expected_rate > 0.0)) {
        throw std::invalid_argument("fit_exponential_rate: expected rate must be positive");
    }
    const double t_stop = expected_rate ? times(0) + 3.0 / *expected_rate : std::numeric_limits<double>::infinity();
    Eigen::Index n = 0;
    while (n < y.size() && std::abs(y(n) - asymptote) > 0.05 * d0 && times(n) <= t_stop) ++n;
    if (n < 20) {
        throw std::invalid_argument("fit_exponential_rate: only " + std::to_string(n) +
                                    " points in the fit window, need 20");
    }
    RealMatrix A(n, 2);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        A(i, 0) = 1.0;
        A(i, 1) = times(i);
        z(i) = std::log(std::abs(y(i) - asymptote));
    }
    const Eigen::Vector2d p = A.colPivHouseholderQr().solve(z);
    ExponentialFit f;
    f.rate = -p(1);
    f.points = n;
    f.t_end = times(n - 1);
    f.residual = std::sqrt((A * p - z).squaredNorm() / static_cast<double>(n));
    return f;
}

} // namespace ethbath
