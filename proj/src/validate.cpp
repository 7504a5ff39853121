// validate.cpp

#include "ethbath/pipeline.hpp"
#include "ethbath/runner.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace ethbath {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

bool needs_total(ExperimentKind k) {
    return k == ExperimentKind::dynamics || k == ExperimentKind::scaling || k == ExperimentKind::levelstats;
}

// sqrt(2 pi) sigma / D with sigma^2 = tr(H^2) / D, the level spacing at the band centre
double central_level_spacing(const SpinChainParams& b) {
    double var = b.J * b.J * (b.L - 1);
    for (int j = 1; j <= b.L; ++j) {
        double hz = b.hz;
        if (j == 1) hz += b.h1;
        if (j == b.L) hz += b.hL;
        var += hz * hz + b.hx * b.hx;
    }
    return std::sqrt(2.0 * std::numbers::pi * var) / std::ldexp(1.0, b.L);
}

} // namespace

std::size_t available_memory() {
    const long pages = sysconf(_SC_PHYS_PAGES);
    const long size = sysconf(_SC_PAGE_SIZE);
    if (pages <= 0 || size <= 0) return 0;
    return static_cast<std::size_t>(pages) * static_cast<std::size_t>(size);
}

json Diagnostics::to_json() const {
    return {{"ok", ok()}, {"errors", errors}, {"warnings", warnings}, {"notes", notes}};
}

Diagnostics validate(const json& config, std::optional<ExperimentKind> kind, const std::filesystem::path& cache_dir) {
    Diagnostics d;
    ExperimentConfig cfg;
    try {
        cfg = parse_config(config, kind);
    } catch (const ConfigError& e) {
        d.errors.push_back(e.what());
        return d;
    }

    if (cfg.coupling.kappa == 0.0) d.warnings.push_back("kappa = 0: trivial dynamics, the probe never couples to the bath");

    int L = cfg.bath.L;
    if (cfg.kind == ExperimentKind::scaling) L = *std::max_element(cfg.sizes.begin(), cfg.sizes.end());
    const double dim = std::ldexp(1.0, needs_total(cfg.kind) ? L + 1 : L);
    const double bytes = 16.0 * dim * dim;
    const double mem = static_cast<double>(available_memory());
    d.notes.push_back("dense eigensystem memory estimate " + fmt(bytes / (1u << 30)) + " GiB for dimension " + fmt(dim));
    if (mem > 0.0 && bytes > mem) {
        d.warnings.push_back("memory estimate " + fmt(bytes / (1u << 30)) + " GiB exceeds physical memory " +
                             fmt(mem / (1u << 30)) + " GiB");
    }

    const double spacing = central_level_spacing(cfg.bath);
    if (cfg.coupling.kappa > 0.0 && cfg.coupling.kappa < spacing) {
        d.warnings.push_back("kappa " + fmt(cfg.coupling.kappa) + " is below the estimated mean level spacing " + fmt(spacing));
    }

    // spectral lints need the bath eigensystem: from the cache, or computed when small
    std::optional<EigenSystem> eig;
    const std::string key = bath_spec_text(cfg.bath);
    if (!cache_dir.empty()) {
        const EigenCache cache(cache_dir);
        if (std::filesystem::exists(cache.path_for(key))) {
            try {
                eig = read_eigensystem(cache.path_for(key), sha256(key));
            } catch (const NumericalError& e) {
                d.warnings.push_back(std::string("unreadable cache entry: ") + e.what());
            }
        }
    }
    if (!eig && cfg.bath.L <= 10) eig = diagonalize(build_bath_hamiltonian(cfg.bath, cfg.max_sites));
    if (!eig) {
        d.notes.push_back("bath spectrum not cached; temperature and Markov checks skipped");
        return d;
    }

    BathThermo t;
    try {
        t = bath_thermo(eig->values, cfg.eth, cfg.state);
    } catch (const std::out_of_range& e) {
        d.warnings.push_back(std::string("target outside the entropy-fit domain: ") + e.what());
        return d;
    } catch (const std::invalid_argument& e) {
        d.warnings.push_back(std::string("entropy fit unavailable: ") + e.what());
        return d;
    }
    if (cfg.kind == ExperimentKind::thermo || cfg.kind == ExperimentKind::levelstats) return d;

    try {
        const CouplingTerm& term = cfg.coupling.terms.front();
        const DenseMatrix B = to_eigenbasis(pauli_site_operator(cfg.bath.L, term.site, term.bath_axis), *eig);
        const EthRateModel m = eth_rate_model(*eig, B, t, cfg.eth, cfg.freq_bin(), cfg.coupling.kappa);
        const double w0 = cfg.system.omega0;
        const double gamma = m.gamma(w0) + m.gamma(-w0);
        const BathCorrelation C = bcf_from_spectral_function(m.table, t.beta, TimeGrid::uniform(50.0, 0.01));
        const double tauB = half_width_half_max(C);
        d.notes.push_back("gamma_pop " + fmt(gamma) + ", bath correlation time " + fmt(tauB));
        if (gamma * tauB > 0.1) {
            d.warnings.push_back("Markov criterion violated: gamma * tau_B = " + fmt(gamma * tauB) + " > 0.1");
        }
    } catch (const std::exception& e) {
        d.notes.push_back(std::string("Markov check skipped: ") + e.what());
    }
    return d;
}

} // namespace ethbath
