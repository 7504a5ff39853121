// runner.cpp

#include "ethbath/runner.hpp"

#include "ethbath/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <limits>

namespace ethbath {

namespace fs = std::filesystem;
using nlohmann::json;

#ifndef ETHBATH_VERSION
#define ETHBATH_VERSION "0.0.0"
#endif

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// null for non-finite values, which JSON cannot hold
json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double eval_or_nan(const RateFunction& f, double w) {
    try {
        return f(w);
    } catch (const std::logic_error&) {
        return kNaN;
    }
}

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(name + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(name + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(name + ": " + e.what());
    } catch (const std::out_of_range& e) {
        throw ConfigError(name + ": " + e.what());
    } catch (const std::exception& e) {
        throw NumericalError(name + ": " + e.what());
    }
}

// Files written by one run; removed again unless the run completes.
class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
    Outputs(const Outputs&) = delete;
    Outputs& operator=(const Outputs&) = delete;
    ~Outputs() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& n : names_) fs::remove(dir_ / n, ec);
    }

    void csv(const std::string& name, const std::string& header, const std::function<void(std::ostream&)>& body) {
        std::ofstream os = open(name);
        os << header << '\n';
        body(os);
        finish(os, name);
    }

    void write_json(const std::string& name, const json& j) {
        std::ofstream os = open(name);
        os << j.dump(2) << '\n';
        finish(os, name);
    }

    std::vector<ProducedFile> hashed() const {
        std::vector<ProducedFile> out;
        for (const auto& n : names_) out.push_back({n, to_hex(sha256_file(dir_ / n))});
        return out;
    }

    void commit() { committed_ = true; }
    const fs::path& dir() const { return dir_; }

private:
    std::ofstream open(const std::string& name) {
        names_.push_back(name);
        std::ofstream os(dir_ / name, std::ios::trunc);
        if (!os) throw ConfigError("cannot write " + (dir_ / name).string());
        return os;
    }
    void finish(std::ofstream& os, const std::string& name) {
        os.flush();
        if (!os) throw NumericalError("write failed for " + (dir_ / name).string());
    }

    fs::path dir_;
    std::vector<std::string> names_;
    bool committed_{false};
};

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json fit_json(const EntropyFit& f) {
    return {{"degree", f.degree}, {"coefficients", std::vector<double>(f.coeffs.data(), f.coeffs.data() + f.coeffs.size())},
            {"center", f.center}, {"scale", f.scale}, {"e_lo", f.e_lo}, {"e_hi", f.e_hi},
            {"max_residual", f.max_residual}};
}

json thermo_json(const BathThermo& t) {
    return {{"E0", t.E0}, {"beta", t.beta}, {"heat_capacity", jnum(t.capacity)}, {"entropy_fit", fit_json(t.fit)}};
}

json matrix_json(const Matrix2c& m) {
    return {{"p0", m(0, 0).real()}, {"p1", m(1, 1).real()}, {"re_rho01", m(0, 1).real()}, {"im_rho01", m(0, 1).imag()}};
}

const char* state_label(StateKind k) {
    switch (k) {
    case StateKind::eigenstate: return "eigenstate";
    case StateKind::typical_mc: return "typical_mc";
    case StateKind::product: return "product";
    }
    return "";
}

DenseMatrix bath_operator_eig(const EigenSystem& eig, int L, int site, Axis axis) {
    return to_eigenbasis(pauli_site_operator(L, site, axis), eig);
}

const CouplingTerm& single_term(const ExperimentConfig& cfg) {
    if (cfg.coupling.terms.size() != 1) {
        throw ConfigError("this experiment needs exactly one coupling term (use multi-op-rates for several)");
    }
    return cfg.coupling.terms.front();
}

SpinChainParams bath_for(const ExperimentConfig& cfg, const std::string& preset, int L) {
    if (preset == "custom") {
        SpinChainParams b = cfg.bath;
        b.L = L;
        return b;
    }
    return SpinChainParams::preset(preset, L);
}

TimeGrid grid_of(const ExperimentConfig& cfg) {
    return stage("grid", [&] { return TimeGrid::uniform(cfg.grid.t_max, cfg.grid.dt); });
}

// ---------------------------------------------------------------------------

json run_thermo(const ExperimentConfig& cfg, Outputs& out) {
    const Eigen::VectorXd E = stage("diagonalize", [&] { return eigenvalues(build_bath_hamiltonian(cfg.bath, cfg.max_sites).real()); });
    const BathThermo t = stage("thermo", [&] { return bath_thermo(E, cfg.eth, cfg.state); });
    const bool user_width = cfg.eth.dos_bin_width.has_value();
    const DensityOfStates dos = density_of_states(E, user_width ? *cfg.eth.dos_bin_width : default_dos_bin_width(E), user_width);
    out.csv("thermo.csv", "E,S,beta,C,beta_canonical", [&](std::ostream& os) {
        for (Eigen::Index b = 0; b < dos.centers.size(); ++b) {
            const double e = dos.centers(b);
            if (!t.fit.contains(e)) continue;
            double bc = kNaN;
            try {
                bc = canonical_inverse_temperature(E, e);
            } catch (const std::out_of_range&) {
            }
            os << num(e) << ',' << num(t.fit.entropy(e)) << ',' << num(t.fit.beta(e)) << ','
               << num(heat_capacity(t.fit, e)) << ',' << num(bc) << '\n';
        }
    });
    json s = thermo_json(t);
    s["dimension"] = E.size();
    s["bandwidth"] = E.maxCoeff() - E.minCoeff();
    s["beta_canonical_at_E0"] = jnum([&] {
        try {
            return canonical_inverse_temperature(E, t.E0);
        } catch (const std::out_of_range&) {
            return kNaN;
        }
    }());
    return s;
}

json run_eth_stats(const ExperimentConfig& cfg, const EigenCache& cache, Outputs& out) {
    const CouplingTerm& term = cfg.coupling.terms.front();
    const EigenSystem eig = stage("diagonalize", [&] { return bath_eigensystem(cache, cfg.bath, cfg.max_sites); });
    const DenseMatrix B = stage("eigenbasis", [&] { return bath_operator_eig(eig, cfg.bath.L, term.site, term.bath_axis); });
    const DiagonalProfile prof = stage("diagonal profile", [&] { return diagonal_profile(B, eig); });
    const BathThermo t = stage("thermo", [&] { return bath_thermo(eig.values, cfg.eth, cfg.state); });
    const EthRateModel m = stage("spectral function", [&] {
        return eth_rate_model(eig, B, t, cfg.eth, cfg.freq_bin(), cfg.coupling.kappa);
    });
    out.csv("diagonals.csv", "E,Bnn", [&](std::ostream& os) {
        for (Eigen::Index n = 0; n < prof.energies.size(); ++n) os << num(prof.energies(n)) << ',' << num(prof.diagonals(n)) << '\n';
    });
    out.csv("specfun.csv", "omega,f2,count", [&](std::ostream& os) {
        for (Eigen::Index k = 0; k < m.table.size(); ++k) {
            os << num(m.table.omega(k)) << ',' << num(m.table.values(k)) << ',' << m.table.counts[static_cast<std::size_t>(k)] << '\n';
        }
    });
    return {{"operator", {{"site", term.site}, {"axis", std::string(1, axis_name(term.bath_axis))}}},
            {"fluctuation", prof.fluctuation},
            {"central_states", prof.central_count},
            {"raw_asymmetry", m.raw.raw_asymmetry},
            {"normalization", m.table.normalization},
            {"varB", m.varB},
            {"thermo", thermo_json(t)}};
}

json run_rates(const ExperimentConfig& cfg, const EigenCache& cache, Outputs& out) {
    const CouplingTerm& term = single_term(cfg);
    const EigenSystem eig = stage("diagonalize", [&] { return bath_eigensystem(cache, cfg.bath, cfg.max_sites); });
    const DenseMatrix B = stage("eigenbasis", [&] { return bath_operator_eig(eig, cfg.bath.L, term.site, term.bath_axis); });
    const BathThermo t = stage("thermo", [&] { return bath_thermo(eig.values, cfg.eth, cfg.state); });
    std::string fs_note;
    EthRateModel m = stage("rates", [&] {
        try {
            return eth_rate_model(eig, B, t, cfg.eth, cfg.freq_bin(), cfg.coupling.kappa, true);
        } catch (const std::invalid_argument& e) {
            fs_note = e.what();
            return eth_rate_model(eig, B, t, cfg.eth, cfg.freq_bin(), cfg.coupling.kappa, false);
        }
    });
    const double w0 = cfg.system.omega0;
    out.csv("rates.csv", "omega,gamma,gamma_fs", [&](std::ostream& os) {
        for (Eigen::Index k = 0; k < m.gamma.omega.size(); ++k) {
            const double w = m.gamma.omega(k);
            double fs = kNaN;
            if (m.gamma_fs) fs = eval_or_nan(*m.gamma_fs, w);
            os << num(w) << ',' << num(m.gamma.valid[static_cast<std::size_t>(k)] ? m.gamma.gamma(k) : kNaN) << ','
               << num(fs) << '\n';
        }
    });
    json s = {{"thermo", thermo_json(t)}, {"varB", m.varB}, {"reference_state", m.reference_state}};
    const double gp = m.gamma(w0), gm = m.gamma(-w0);
    s["gamma_plus"] = gp;
    s["gamma_minus"] = gm;
    s["gamma_pop"] = gp + gm;
    s["detailed_balance_residual_symmetrized"] = std::abs(std::log(gp / gm) - t.beta * w0);
    s["caldeira_leggett_density"] = caldeira_leggett_density(m.table, t.beta, w0);
    s["raw_asymmetry"] = m.raw.raw_asymmetry;
    const GoldenRuleRates gr = stage("golden rule", [&] {
        return golden_rule_rates(B, eig, t.E0, cfg.eth.window, cfg.freq_bin(), cfg.coupling.kappa);
    });
    const double rp = gr(w0), rm = gr(-w0);
    s["detailed_balance_residual_raw"] = (rp > 0 && rm > 0) ? json(std::abs(std::log(rp / rm) - t.beta * w0)) : json(nullptr);
    if (m.gamma_fs) {
        s["gamma_fs_plus"] = jnum(eval_or_nan(*m.gamma_fs, w0));
        s["gamma_fs_minus"] = jnum(eval_or_nan(*m.gamma_fs, -w0));
        s["gamma_fs_clipped_points"] = m.gamma_fs->clipped_points;
    } else {
        s["finite_size_unavailable"] = fs_note;
    }
    return s;
}

json run_bcf(const ExperimentConfig& cfg, const EigenCache& cache, Outputs& out) {
    const CouplingTerm& term = cfg.coupling.terms.front();
    const TimeGrid grid = grid_of(cfg);
    const EigenSystem eig = stage("diagonalize", [&] { return bath_eigensystem(cache, cfg.bath, cfg.max_sites); });
    const DenseMatrix B = stage("eigenbasis", [&] { return bath_operator_eig(eig, cfg.bath.L, term.site, term.bath_axis); });
    const BathThermo t = stage("thermo", [&] { return bath_thermo(eig.values, cfg.eth, cfg.state); });
    const BathPreparation prep = stage("state", [&] { return prepare_bath_state(eig, cfg.bath, B, cfg.state, t.E0); });
    const BathCorrelation C = stage("bcf", [&] { return bath_correlation_function(eig, B, prep.energy_basis, grid); });
    out.csv("bcf.csv", "tau,re_C,im_C", [&](std::ostream& os) {
        for (Eigen::Index j = 0; j < C.times.size(); ++j) {
            os << num(C.times(j)) << ',' << num(C.values(j).real()) << ',' << num(C.values(j).imag()) << '\n';
        }
    });
    json s = {{"state", state_label(cfg.state.kind)}, {"C0", C.values(0).real()}, {"variance", C.variance},
              {"hwhm", jnum(half_width_half_max(C))}, {"B_expect", prep.B_expect}, {"energy", prep.energy},
              {"thermo", thermo_json(t)}};
    try {
        const EthRateModel m = eth_rate_model(eig, B, t, cfg.eth, cfg.freq_bin(), cfg.coupling.kappa);
        const BathCorrelation R = bcf_from_spectral_function(m.table, t.beta, grid);
        double dev = 0.0;
        for (Eigen::Index j = 0; j < grid.count && grid[j] <= 2.0 + 1e-12; ++j) dev = std::max(dev, std::abs(R.values(j) - C.values(j)));
        s["spectral_reconstruction_max_dev_tau_le_2"] = dev;
    } catch (const std::invalid_argument& e) {
        s["spectral_reconstruction_unavailable"] = e.what();
    }
    return s;
}

json run_dynamics_kind(const ExperimentConfig& cfg, const EigenCache& cache, Outputs& out) {
    const CouplingTerm& term = single_term(cfg);
    const TimeGrid grid = grid_of(cfg);
    DynamicsResult r;
    EthRateModel m;
    BathPreparation prep;
    {
        const EigenSystem eig = stage("diagonalize bath", [&] { return bath_eigensystem(cache, cfg.bath, cfg.max_sites); });
        const DenseMatrix B = stage("eigenbasis", [&] { return bath_operator_eig(eig, cfg.bath.L, term.site, term.bath_axis); });
        const BathThermo t = stage("thermo", [&] { return bath_thermo(eig.values, cfg.eth, cfg.state); });
        m = stage("rates", [&] { return eth_rate_model(eig, B, t, cfg.eth, cfg.freq_bin(), cfg.coupling.kappa); });
        prep = stage("state", [&] { return prepare_bath_state(eig, cfg.bath, B, cfg.state, t.E0); });
    }
    const EigenSystem total = stage("diagonalize total", [&] {
        return total_eigensystem(cache, cfg.system, cfg.bath, cfg.coupling, cfg.max_sites);
    });
    DynamicsInputs in;
    in.system = cfg.system;
    in.term = term;
    in.kappa = cfg.coupling.kappa;
    in.system_state = cfg.state.system == "superposition" ? SystemState::superposition : SystemState::polarized;
    in.grid = grid;
    in.t_final = cfg.grid.t_final.value_or(cfg.grid.t_max);
    in.include_zero_frequency = cfg.eth.include_zero_frequency;
    r = stage("dynamics", [&] { return run_dynamics(total, prep, m.gamma, in); });

    out.csv("trajectory.csv", "t,p0,p1,re_rho01,im_rho01,trace_dist_vs_lindblad", [&](std::ostream& os) {
        for (Eigen::Index i = 0; i < r.exact.size(); ++i) {
            const Matrix2c& rho = r.exact.rho[static_cast<std::size_t>(i)];
            os << num(r.exact.times(i)) << ',' << num(rho(0, 0).real()) << ',' << num(rho(1, 1).real()) << ','
               << num(rho(0, 1).real()) << ',' << num(rho(0, 1).imag()) << ',' << num(r.trace_distance(i)) << '\n';
        }
    });
    auto fit = [](const std::optional<ExponentialFit>& f) -> json {
        if (!f) return nullptr;
        return {{"rate", f->rate}, {"residual", f->residual}, {"points", f->points}, {"t_end", f->t_end}};
    };
    json s = {{"state", state_label(cfg.state.kind)}, {"system_state", cfg.state.system},
              {"B_expect", prep.B_expect}, {"bath_energy", prep.energy},
              {"omega0_shifted", r.hs.bohr_frequency}, {"gamma_pop_predicted", r.gamma_pop},
              {"gamma_coh_predicted", 0.5 * r.gamma_pop},
              {"fit_exact", fit(r.fit_exact)}, {"fit_lindblad", fit(r.fit_lindblad)},
              {"avg_trace_distance", r.avg_trace_distance}, {"t_final", r.t_final},
              {"stationary", matrix_json(r.stationary)}, {"thermo", thermo_json(m.thermo)},
              {"lindblad_checks", {{"max_trace_error", r.lindblad.checks.max_trace_error},
                                   {"min_eigenvalue", r.lindblad.checks.min_eigenvalue},
                                   {"max_hermiticity_error", r.lindblad.checks.max_hermiticity_error}}},
              {"exact_checks", {{"max_norm_error", r.exact.checks.max_norm_error},
                                {"min_eigenvalue", r.exact.checks.min_eigenvalue}}}};
    s["mean_force"] = {{"total_energy", r.total_energy}, {"beta_total", jnum(r.beta_total)},
                       {"p0_long_time", r.p0_long_time}, {"mean_force", matrix_json(r.mean_force)},
                       {"gibbs", matrix_json(r.gibbs)}};
    return s;
}

json run_scaling(const ExperimentConfig& cfg, const EigenCache& cache, Outputs& out) {
    const CouplingTerm& term = single_term(cfg);
    const TimeGrid grid = grid_of(cfg);
    const int Lmax = *std::max_element(cfg.sizes.begin(), cfg.sizes.end());
    struct Row {
        int L;
        double avg;
        std::string kind;
    };
    std::vector<Row> rows;
    json per = json::object();
    for (const auto& preset : cfg.presets) {
        const std::string tag = preset + "/" + state_label(cfg.state.kind);
        RateFunction rates;
        {
            const SpinChainParams bmax = bath_for(cfg, preset, Lmax);
            const EigenSystem eig = stage("diagonalize bath L=" + std::to_string(Lmax), [&] { return bath_eigensystem(cache, bmax, cfg.max_sites); });
            const DenseMatrix B = bath_operator_eig(eig, Lmax, term.site, term.bath_axis);
            const BathThermo t = stage("thermo", [&] { return bath_thermo(eig.values, cfg.eth, cfg.state); });
            rates = stage("rates", [&] { return eth_rate_model(eig, B, t, cfg.eth, cfg.freq_bin_for(preset), cfg.coupling.kappa).gamma; });
        }
        json list = json::array();
        for (int L : cfg.sizes) {
            const SpinChainParams b = bath_for(cfg, preset, L);
            BathPreparation prep;
            {
                const EigenSystem eig = stage("diagonalize bath L=" + std::to_string(L), [&] { return bath_eigensystem(cache, b, cfg.max_sites); });
                const DenseMatrix B = bath_operator_eig(eig, L, term.site, term.bath_axis);
                const BathThermo t = stage("thermo L=" + std::to_string(L), [&] { return bath_thermo(eig.values, cfg.eth, cfg.state); });
                prep = stage("state L=" + std::to_string(L), [&] { return prepare_bath_state(eig, b, B, cfg.state, t.E0); });
            }
            const EigenSystem total = stage("diagonalize total L=" + std::to_string(L), [&] {
                return total_eigensystem(cache, cfg.system, b, cfg.coupling, cfg.max_sites);
            });
            DynamicsInputs in;
            in.system = cfg.system;
            in.term = term;
            in.kappa = cfg.coupling.kappa;
            in.system_state = cfg.state.system == "superposition" ? SystemState::superposition : SystemState::polarized;
            in.grid = grid;
            in.t_final = cfg.grid.t_final.value_or(cfg.grid.t_max);
            in.include_zero_frequency = cfg.eth.include_zero_frequency;
            in.fit_rates = false;
            in.mean_force = false;
            const DynamicsResult r = stage("dynamics L=" + std::to_string(L), [&] { return run_dynamics(total, prep, rates, in); });
            rows.push_back({L, r.avg_trace_distance, tag});
            list.push_back({{"L", L}, {"avg_trace_distance", r.avg_trace_distance}});
        }
        bool decreasing = true;
        for (std::size_t i = 1; i < list.size(); ++i) {
            decreasing = decreasing && list[i]["avg_trace_distance"].get<double>() < list[i - 1]["avg_trace_distance"].get<double>();
        }
        per[preset] = {{"series", list}, {"monotone_decreasing", decreasing}, {"rates_from_L", Lmax}};
    }
    out.csv("scaling.csv", "L,avg_trace_distance,state_kind", [&](std::ostream& os) {
        for (const auto& r : rows) os << r.L << ',' << num(r.avg) << ',' << r.kind << '\n';
    });
    return {{"presets", per}, {"t_final", cfg.grid.t_final.value_or(cfg.grid.t_max)}};
}

json run_levelstats(const ExperimentConfig& cfg, Outputs&) {
    json per = json::object();
    for (const auto& preset : cfg.presets) {
        const SpinChainParams b = bath_for(cfg, preset, cfg.bath.L);
        const Eigen::VectorXd E = stage("diagonalize total " + preset, [&] {
            const HermitianOperator H = build_total_hamiltonian(cfg.system, b, cfg.coupling, cfg.max_sites);
            return H.is_real() ? eigenvalues(H.real()) : diagonalize(H).values;
        });
        const GapStatistics g = stage("gap ratios", [&] { return gap_ratios(E); });
        per[preset] = {{"mean_r", g.mean_ratio}, {"ratios", g.ratios.size()}, {"degenerate_gaps", g.degenerate_gaps},
                       {"histogram", {{"edges", g.bin_edges}, {"counts", g.counts}}}};
    }
    return {{"bath_L", cfg.bath.L}, {"total_dimension", 1LL << (cfg.bath.L + 1)}, {"presets", per},
            {"reference", {{"goe", 0.5307}, {"poisson", 2.0 * std::log(2.0) - 1.0}}}};
}

json run_typicality(const ExperimentConfig& cfg, const EigenCache& cache, Outputs& out) {
    const CouplingTerm& term = cfg.coupling.terms.front();
    const TimeGrid grid = grid_of(cfg);
    const EigenSystem eig = stage("diagonalize", [&] { return bath_eigensystem(cache, cfg.bath, cfg.max_sites); });
    const DenseMatrix B = stage("eigenbasis", [&] { return bath_operator_eig(eig, cfg.bath.L, term.site, term.bath_axis); });
    const BathThermo t = stage("thermo", [&] { return bath_thermo(eig.values, cfg.eth, cfg.state); });
    const TypicalityReport rep = stage("typicality", [&] {
        return typicality_spread(eig, B, t.E0, cfg.state.deltaE, cfg.samples, cfg.state.seed, grid);
    });
    out.csv("typicality.csv", "sample,max_dev_B,max_dev_C", [&](std::ostream& os) {
        for (Eigen::Index s = 0; s < rep.max_dev_B.size(); ++s) {
            os << s << ',' << num(rep.max_dev_B(s)) << ',' << num(rep.max_dev_C(s)) << '\n';
        }
    });
    json levy = json::array();
    for (const auto& p : rep.levy) levy.push_back({{"epsilon", p.epsilon}, {"exceedance", p.exceedance}, {"bound", p.bound}});
    return {{"window_dim", rep.window_dim}, {"microcanonical_B", rep.microcanonical_B},
            {"median_spread", rep.median_spread()}, {"deviation_std", rep.deviation_std},
            {"levy", levy}, {"levy_violated", rep.levy_violated},
            {"max_long_time_dev_B", rep.long_time_dev_B.maxCoeff()}, {"thermo", thermo_json(t)}};
}

json run_multi(const ExperimentConfig& cfg, const EigenCache& cache, Outputs& out) {
    const EigenSystem eig = stage("diagonalize", [&] { return bath_eigensystem(cache, cfg.bath, cfg.max_sites); });
    const BathThermo t = stage("thermo", [&] { return bath_thermo(eig.values, cfg.eth, cfg.state); });
    std::vector<DenseMatrix> ops;
    MultiRateOptions mo;
    if (t.fit.contains(t.E0)) mo.log_density = t.fit.entropy(t.E0);
    for (const auto& o : cfg.operators) {
        ops.push_back(stage("eigenbasis", [&] { return bath_operator_eig(eig, cfg.bath.L, o.site, o.axis); }));
        const EthRateModel m = stage("spectral function", [&] {
            return eth_rate_model(eig, ops.back(), t, cfg.eth, cfg.freq_bin(), cfg.coupling.kappa);
        });
        mo.normalization.push_back(m.table.normalization);
    }
    const std::vector<RateMatrix> mats = stage("rate matrices", [&] {
        return rate_matrix_multi(ops, eig, t.E0, cfg.eth.window, cfg.freq_bin(), cfg.coupling.kappa, t.beta, mo);
    });
    double worst = 0.0, global_max = 0.0, clipped = 0.0, herm = 0.0;
    for (const auto& r : mats) {
        global_max = std::max(global_max, r.eigenvalues.maxCoeff());
        clipped += r.clipped;
        herm = std::max(herm, r.hermiticity_residual);
    }
    for (const auto& r : mats) {
        const double mx = r.eigenvalues.maxCoeff();
        if (mx > 0.0) worst = std::min(worst, r.min_eigenvalue / mx);
    }
    out.csv("multi_rates.csv", "omega,count,min_eigenvalue,max_eigenvalue,clipped,hermiticity_residual", [&](std::ostream& os) {
        for (const auto& r : mats) {
            os << num(r.omega) << ',' << r.count << ',' << num(r.min_eigenvalue) << ',' << num(r.eigenvalues.maxCoeff())
               << ',' << num(r.clipped) << ',' << num(r.hermiticity_residual) << '\n';
        }
    });
    return {{"operators", cfg.operators.size()}, {"bins", mats.size()}, {"worst_min_over_max", worst},
            {"max_eigenvalue", global_max}, {"total_clipped", clipped}, {"max_hermiticity_residual", herm},
            {"thermo", thermo_json(t)}};
}

} // namespace

json RunManifest::to_json() const {
    json files_j = json::array();
    for (const auto& f : files) files_j.push_back({{"name", f.name}, {"sha256", f.sha256}});
    return {{"kind", kind}, {"config_hash", config_hash}, {"versions", versions}, {"started_at", started_at},
            {"wall_clock_seconds", wall_clock_seconds}, {"files", files_j}};
}

RunManifest run(const ExperimentConfig& cfg, const RunOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    RunManifest man;
    man.kind = kind_name(cfg.kind);
    man.started_at = utc_now();
    man.config_hash = to_hex(sha256(canonical_json(cfg).dump()));
    man.versions = {{"ethbath", ETHBATH_VERSION},
                    {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
                    {"lapack", lapack_version()},
                    {"compiler", __VERSION__}};

    std::error_code ec;
    fs::create_directories(opts.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + opts.out_dir.string() + ": " + ec.message());
    const EigenCache cache(opts.cache_dir);
    Outputs out(opts.out_dir);

    json summary;
    switch (cfg.kind) {
    case ExperimentKind::thermo: summary = run_thermo(cfg, out); break;
    case ExperimentKind::eth_stats: summary = run_eth_stats(cfg, cache, out); break;
    case ExperimentKind::rates: summary = run_rates(cfg, cache, out); break;
    case ExperimentKind::bcf: summary = run_bcf(cfg, cache, out); break;
    case ExperimentKind::dynamics: summary = run_dynamics_kind(cfg, cache, out); break;
    case ExperimentKind::scaling: summary = run_scaling(cfg, cache, out); break;
    case ExperimentKind::levelstats: summary = run_levelstats(cfg, out); break;
    case ExperimentKind::typicality: summary = run_typicality(cfg, cache, out); break;
    case ExperimentKind::multi_op_rates: summary = run_multi(cfg, cache, out); break;
    }
    summary["kind"] = man.kind;
    summary["bath"] = {{"L", cfg.bath.L}, {"preset", cfg.preset}};
    summary["kappa"] = cfg.coupling.kappa;
    out.write_json("summary.json", summary);

    man.files = out.hashed();
    man.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    {
        std::ofstream os(opts.out_dir / "manifest.json", std::ios::trunc);
        os << man.to_json().dump(2) << '\n';
        if (!os) throw NumericalError("write failed for manifest.json");
    }
    out.commit();
    return man;
}

} // namespace ethbath
