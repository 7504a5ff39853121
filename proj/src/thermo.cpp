// thermo.cpp

#include "ethbath/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ethbath {

namespace {

void check_fit_domain(const EntropyFit& fit, double E) {
    if (!fit.contains(E)) {
        throw std::out_of_range("energy " + std::to_string(E) + " outside entropy-fit domain [" +
                                std::to_string(fit.e_lo) + ", " + std::to_string(fit.e_hi) + "]");
    }
}

// k-th derivative of sum c_i x^i
double poly_derivative(const Eigen::VectorXd& c, double x, int k) {
    double acc = 0.0;
    for (Eigen::Index i = c.size() - 1; i >= k; --i) {
        double fall = 1.0;
        for (int j = 0; j < k; ++j) fall *= static_cast<double>(i - j);
        acc = acc * x + fall * c(i);
    }
    return acc;
}

} // namespace

double default_dos_bin_width(const Eigen::VectorXd& energies) {
    if (energies.size() < 2) throw std::invalid_argument("need at least two levels");
    const double band = energies.maxCoeff() - energies.minCoeff();
    const double spacing = band / static_cast<double>(energies.size() - 1);
    return std::max(band / 100.0, 20.0 * spacing);
}

DensityOfStates density_of_states(const Eigen::VectorXd& energies, double bin_width, bool strict) {
    if (energies.size() == 0) throw std::invalid_argument("density_of_states: empty spectrum");
    if (!(bin_width > 0.0)) throw std::invalid_argument("density_of_states: bin width must be positive");
    const double lo = energies.minCoeff();
    const double hi = energies.maxCoeff();
    const double band = hi - lo;
    if (strict) {
        const double spacing = energies.size() > 1 ? band / static_cast<double>(energies.size() - 1) : 0.0;
        if (bin_width <= spacing) {
            throw std::invalid_argument("density_of_states: bin width below the mean level spacing");
        }
        if (bin_width >= 0.1 * band) {
            throw std::invalid_argument("density_of_states: bin width above 10% of the bandwidth");
        }
    }
    const auto nbins = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(band / bin_width)));
    DensityOfStates dos;
    dos.bin_width = bin_width;
    dos.centers.resize(nbins);
    dos.counts = Eigen::VectorXd::Zero(nbins);
    for (Eigen::Index b = 0; b < nbins; ++b) dos.centers(b) = lo + (static_cast<double>(b) + 0.5) * bin_width;
    for (double e : energies) {
        auto b = static_cast<Eigen::Index>(std::floor((e - lo) / bin_width));
        dos.counts(std::clamp<Eigen::Index>(b, 0, nbins - 1)) += 1.0;
    }
    return dos;
}

double EntropyFit::entropy(double E) const {
    check_fit_domain(*this, E);
    return poly_derivative(coeffs, (E - center) / scale, 0);
}

double EntropyFit::beta(double E) const {
    check_fit_domain(*this, E);
    return poly_derivative(coeffs, (E - center) / scale, 1) / scale;
}

double EntropyFit::dbeta_dE(double E) const {
    check_fit_domain(*this, E);
    return poly_derivative(coeffs, (E - center) / scale, 2) / (scale * scale);
}

EntropyFit entropy_fit(const DensityOfStates& dos, int degree) {
    if (degree < 2) throw std::invalid_argument("entropy_fit: degree must be >= 2");
    std::vector<Eigen::Index> used;
    for (Eigen::Index b = 0; b < dos.counts.size(); ++b) {
        if (dos.counts(b) > 0.0) used.push_back(b);
    }
    if (static_cast<int>(used.size()) < degree + 2) {
        throw std::invalid_argument("entropy_fit: underdetermined (too few nonempty bins)");
    }
    EntropyFit fit;
    fit.degree = degree;
    fit.e_lo = dos.centers(used.front());
    fit.e_hi = dos.centers(used.back());
    fit.center = 0.5 * (fit.e_lo + fit.e_hi);
    fit.scale = std::max(0.5 * (fit.e_hi - fit.e_lo), std::numeric_limits<double>::min());

    const auto m = static_cast<Eigen::Index>(used.size());
    RealMatrix A(m, degree + 1);
    Eigen::VectorXd y(m), w(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index b = used[static_cast<std::size_t>(r)];
        const double x = (dos.centers(b) - fit.center) / fit.scale;
        double p = 1.0;
        for (int k = 0; k <= degree; ++k, p *= x) A(r, k) = p;
        y(r) = std::log(dos.counts(b));
        w(r) = std::sqrt(dos.counts(b));
    }
    fit.coeffs = (w.asDiagonal() * A).colPivHouseholderQr().solve(w.asDiagonal() * y);
    fit.max_residual = (A * fit.coeffs - y).cwiseAbs().maxCoeff();
    return fit;
}

double inverse_temperature(const EntropyFit& fit, double E) { return fit.beta(E); }

double heat_capacity(const EntropyFit& fit, double E) {
    const double b = fit.beta(E);
    const double db = fit.dbeta_dE(E);
    if (db == 0.0) return std::numeric_limits<double>::infinity();
    return -b * b / db;
}

double energy_at_inverse_temperature(const EntropyFit& fit, double beta) {
    double lo = fit.e_lo;
    double hi = fit.e_hi;
    double flo = fit.beta(lo) - beta;
    double fhi = fit.beta(hi) - beta;
    if (flo * fhi > 0.0) {
        throw std::out_of_range("inverse temperature " + std::to_string(beta) +
                                " not reached inside the entropy-fit domain");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = fit.beta(mid) - beta;
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double canonical_energy(const Eigen::VectorXd& energies, double beta) {
    const Eigen::ArrayXd e = energies.array();
    const double shift = beta >= 0.0 ? e.minCoeff() : e.maxCoeff();
    const Eigen::ArrayXd w = (-beta * (e - shift)).exp();
    return (w * e).sum() / w.sum();
}

double canonical_inverse_temperature(const Eigen::VectorXd& energies, double target, double beta_max) {
    if (energies.size() < 2) throw std::invalid_argument("canonical temperature needs >= 2 levels");
    const double emin = energies.minCoeff();
    const double emax = energies.maxCoeff();
    if (!(target > emin && target < emax)) {
        throw std::out_of_range("target energy outside the open spectral interval");
    }
    const double band = emax - emin;
    if (beta_max <= 0.0) beta_max = 50.0 / band;
    const double tol = 1e-8 * band;
    // <H>_beta decreases in beta
    double lo = -beta_max;
    double hi = beta_max;
    if (canonical_energy(energies, lo) < target || canonical_energy(energies, hi) > target) {
        throw std::out_of_range("target energy lies beyond the +-beta_max bracket");
    }
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double e = canonical_energy(energies, mid);
        if (std::abs(e - target) < tol && hi - lo < 1e-12) return mid;
        if (e > target) lo = mid;
        else hi = mid;
        if (hi - lo < 1e-15 * beta_max) break;
    }
    return 0.5 * (lo + hi);
}

} // namespace ethbath
