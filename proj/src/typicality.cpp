// typicality.cpp

#include "ethbath/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ethbath {

namespace {

const Complex I(0.0, 1.0);

double median(Eigen::VectorXd v) {
    if (v.size() == 0) return 0.0;
    std::sort(v.data(), v.data() + v.size());
    const Eigen::Index n = v.size();
    return n % 2 ? v(n / 2) : 0.5 * (v(n / 2 - 1) + v(n / 2));
}

} // namespace

double TypicalityReport::median_spread() const { return median(max_dev_B); }

double levy_bound(Eigen::Index d, double epsilon, double op_norm) {
    const double pi3 = std::pow(std::numbers::pi, 3);
    return 2.0 * std::exp(-static_cast<double>(d) * epsilon * epsilon / (18.0 * pi3 * op_norm * op_norm));
}

TypicalityReport typicality_spread(const EigenSystem& eig, const DenseMatrix& B_eig, double E0, double deltaE,
                                   int n_samples, std::uint64_t seed, const TimeGrid& grid, double op_norm) {
    if (n_samples < 2) throw std::invalid_argument("typicality_spread: need at least two samples");
    const MicrocanonicalWindow win = microcanonical_window(eig.values, E0, deltaE);
    if (win.members.empty()) throw std::invalid_argument("typicality_spread: empty microcanonical window");
    const Eigen::Index d = win.dim();
    const Eigen::Index N = eig.dim();
    const Eigen::VectorXd& E = eig.values;
    const ComplexMatrix B = to_complex(B_eig);

    ComplexMatrix Bw(d, d);
    RealMatrix P(d, N); // |B_nm|^2 for n in the window
    Eigen::VectorXd Ew(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        const Eigen::Index n = win.members[static_cast<std::size_t>(i)];
        Ew(i) = E(n);
        P.row(i) = B.row(n).cwiseAbs2();
        for (Eigen::Index j = 0; j < d; ++j) Bw(i, j) = B(n, win.members[static_cast<std::size_t>(j)]);
    }
    const Eigen::VectorXd diag = Bw.diagonal().real();

    TypicalityReport rep;
    rep.window_dim = d;
    rep.microcanonical_B = diag.mean();

    // window-averaged C(t) = (1/d) sum_n [sum_m |B_nm|^2 e^{i(E_n - E_m)t} - B_nn^2]
    const Eigen::Index T = grid.count;
    ComplexMatrix phaseN(N, T), phaseW(d, T);
    for (Eigen::Index j = 0; j < T; ++j) {
        phaseN.col(j) = (-I * grid[j] * E.array()).exp().matrix();
        phaseW.col(j) = (-I * grid[j] * Ew.array()).exp().matrix();
    }
    ComplexMatrix PN(d, T);
    PN.real() = P * phaseN.real();
    PN.imag() = P * phaseN.imag();
    Eigen::VectorXcd Cbar(T);
    for (Eigen::Index j = 0; j < T; ++j) {
        Cbar(j) = (phaseW.col(j).conjugate().cwiseProduct(PN.col(j))).sum() / static_cast<double>(d) -
                  diag.squaredNorm() / static_cast<double>(d);
    }

    rep.max_dev_B.resize(n_samples);
    rep.max_dev_C.resize(n_samples);
    rep.long_time_dev_B.resize(n_samples);
    std::vector<double> pooled;
    pooled.reserve(static_cast<std::size_t>(n_samples * T));
    const Eigen::VectorXd times = grid.times();
    for (int s = 0; s < n_samples; ++s) {
        const PureState psi = typical_microcanonical_state(win, N, seed + static_cast<std::uint64_t>(s));
        Eigen::VectorXcd cw(d);
        for (Eigen::Index i = 0; i < d; ++i) cw(i) = psi.amplitudes(win.members[static_cast<std::size_t>(i)]);
        // <B(t)> = a(t)^dagger Bw a(t), a(t) = e^{-iEt} c
        const ComplexMatrix A = phaseW.array().colwise() * cw.array();
        const ComplexMatrix BA = Bw * A;
        Eigen::VectorXd Bt(T);
        for (Eigen::Index j = 0; j < T; ++j) {
            Bt(j) = A.col(j).dot(BA.col(j)).real();
            const double dev = std::abs(Bt(j) - rep.microcanonical_B);
            pooled.push_back(dev);
        }
        rep.max_dev_B(s) = (Bt.array() - rep.microcanonical_B).abs().maxCoeff();
        rep.long_time_dev_B(s) =
            T > 1 ? std::abs(time_average(times, Bt, times(0), times(T - 1)) - rep.microcanonical_B)
                  : std::abs(Bt(0) - rep.microcanonical_B);
        const BathCorrelation C = bath_correlation_function(eig, B_eig, psi, grid);
        rep.max_dev_C(s) = (C.values - Cbar).cwiseAbs().maxCoeff();
    }

    double ss = 0.0;
    for (double v : pooled) ss += v * v;
    rep.deviation_std = std::sqrt(ss / static_cast<double>(pooled.size()));
    std::vector<double> eps;
    for (int k = 1; k <= 40; ++k) eps.push_back(0.25 * k * rep.deviation_std);
    eps.push_back(3.0 * rep.deviation_std);
    for (double e : eps) {
        if (!(e > 0.0)) continue;
        const auto over = std::count_if(pooled.begin(), pooled.end(), [e](double v) { return v > e; });
        LevyPoint lp;
        lp.epsilon = e;
        lp.exceedance = static_cast<double>(over) / static_cast<double>(pooled.size());
        lp.bound = levy_bound(d, e, op_norm);
        if (lp.exceedance > lp.bound) rep.levy_violated = true;
        rep.levy.push_back(lp);
    }
    return rep;
}

} // namespace ethbath
