// config.cpp

#include "ethbath/config.hpp"
#include "ethbath/dynamics.hpp"

#include "ethbath/common.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace ethbath {

using nlohmann::json;

namespace {

const std::vector<std::pair<ExperimentKind, std::string>> kKinds = {
    {ExperimentKind::eth_stats, "eth-stats"},   {ExperimentKind::thermo, "thermo"},
    {ExperimentKind::rates, "rates"},           {ExperimentKind::bcf, "bcf"},
    {ExperimentKind::dynamics, "dynamics"},     {ExperimentKind::scaling, "scaling"},
    {ExperimentKind::levelstats, "levelstats"}, {ExperimentKind::typicality, "typicality"},
    {ExperimentKind::multi_op_rates, "multi-op-rates"},
};

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj.items()) {
        if (!ok.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
    }
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

template <typename T>
void maybe(const json& obj, const char* key, const std::string& where, T& out) {
    if (obj.contains(key)) out = get<T>(obj, key, where);
}

template <typename T>
void maybe(const json& obj, const char* key, const std::string& where, std::optional<T>& out) {
    if (obj.contains(key)) out = get<T>(obj, key, where);
}

Axis axis_at(const json& obj, const char* key, const std::string& where) {
    try {
        return parse_axis(get<std::string>(obj, key, where));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

std::vector<std::string> string_list(const json& obj, const char* key, const std::string& where) {
    auto v = get<std::vector<std::string>>(obj, key, where);
    for (const auto& p : v) {
        if (p != "chaotic" && p != "integrable") throw ConfigError(where + "." + key + ": unknown preset '" + p + "'");
    }
    return v;
}

StateKind parse_state_kind(const std::string& s) {
    if (s == "eigenstate") return StateKind::eigenstate;
    if (s == "typical_mc") return StateKind::typical_mc;
    if (s == "product") return StateKind::product;
    throw ConfigError("state.kind: unknown state kind '" + s + "'");
}

std::string state_kind_name(StateKind k) {
    switch (k) {
    case StateKind::eigenstate: return "eigenstate";
    case StateKind::typical_mc: return "typical_mc";
    case StateKind::product: return "product";
    }
    return "";
}

void parse_bath(const json& b, ExperimentConfig& cfg) {
    check_keys(b, "bath", {"L", "J", "hz", "hx", "h1", "hL", "preset"});
    int L = get<int>(b, "L", "bath");
    if (b.contains("preset")) {
        cfg.preset = get<std::string>(b, "preset", "bath");
        if (cfg.preset != "chaotic" && cfg.preset != "integrable") {
            throw ConfigError("bath.preset: unknown preset '" + cfg.preset + "'");
        }
        cfg.bath = SpinChainParams::preset(cfg.preset, L);
        return;
    }
    const bool explicit_couplings = b.contains("J") || b.contains("hz") || b.contains("hx") || b.contains("h1") ||
                                    b.contains("hL");
    if (!explicit_couplings) {
        cfg.preset = "chaotic";
        cfg.bath = SpinChainParams::chaotic(L);
        return;
    }
    cfg.bath = SpinChainParams{L, 0.0, 0.0, 0.0, 0.0, 0.0};
    maybe(b, "J", "bath", cfg.bath.J);
    maybe(b, "hz", "bath", cfg.bath.hz);
    maybe(b, "hx", "bath", cfg.bath.hx);
    maybe(b, "h1", "bath", cfg.bath.h1);
    maybe(b, "hL", "bath", cfg.bath.hL);
}

json number(double v) { return json(v); }

} // namespace

ExperimentKind parse_kind(const std::string& name) {
    for (const auto& [k, n] : kKinds) {
        if (n == name) return k;
    }
    throw ConfigError("unknown experiment kind '" + name + "'");
}

std::string kind_name(ExperimentKind k) {
    for (const auto& [kk, n] : kKinds) {
        if (kk == k) return n;
    }
    return "";
}

double ExperimentConfig::freq_bin() const { return freq_bin_for(preset); }

double ExperimentConfig::freq_bin_for(const std::string& preset_name) const {
    if (eth.freq_bin) return *eth.freq_bin;
    return preset_name == "integrable" ? 0.4 : 0.05;
}

ExperimentConfig parse_config(const json& j, std::optional<ExperimentKind> kind) {
    check_keys(j, "config", {"kind", "system", "bath", "coupling", "state", "grid", "eth", "scaling", "levelstats",
                             "typicality", "multi", "max_sites", "seed"});
    ExperimentConfig cfg;
    if (j.contains("kind")) {
        cfg.kind = parse_kind(get<std::string>(j, "kind", "config"));
        if (kind && *kind != cfg.kind) {
            throw ConfigError("config kind '" + kind_name(cfg.kind) + "' does not match the requested '" +
                              kind_name(*kind) + "'");
        }
    } else if (kind) {
        cfg.kind = *kind;
    } else {
        throw ConfigError("config: experiment kind missing");
    }

    maybe(j, "max_sites", "config", cfg.max_sites);
    maybe(j, "seed", "config", cfg.seed);

    if (j.contains("system")) {
        const auto& s = j["system"];
        check_keys(s, "system", {"omega0"});
        maybe(s, "omega0", "system", cfg.system.omega0);
    }
    if (!j.contains("bath")) throw ConfigError("bath: section missing (bath.L is required)");
    parse_bath(j["bath"], cfg);

    if (j.contains("coupling")) {
        const auto& c = j["coupling"];
        check_keys(c, "coupling", {"kappa", "terms"});
        maybe(c, "kappa", "coupling", cfg.coupling.kappa);
        if (c.contains("terms")) {
            if (!c["terms"].is_array()) throw ConfigError("coupling.terms: expected an array");
            cfg.coupling.terms.clear();
            for (const auto& t : c["terms"]) {
                check_keys(t, "coupling.terms[]", {"system", "site", "bath"});
                CouplingTerm term;
                if (t.contains("system")) term.system_axis = axis_at(t, "system", "coupling.terms[]");
                maybe(t, "site", "coupling.terms[]", term.site);
                if (t.contains("bath")) term.bath_axis = axis_at(t, "bath", "coupling.terms[]");
                cfg.coupling.terms.push_back(term);
            }
        }
    }

    cfg.state.seed = cfg.seed;
    if (j.contains("state")) {
        const auto& s = j["state"];
        check_keys(s, "state", {"kind", "beta", "E", "deltaE", "seed", "complex", "system"});
        if (s.contains("kind")) cfg.state.kind = parse_state_kind(get<std::string>(s, "kind", "state"));
        maybe(s, "beta", "state", cfg.state.beta);
        maybe(s, "E", "state", cfg.state.E);
        if (cfg.state.beta && cfg.state.E) throw ConfigError("state: give either beta or E, not both");
        maybe(s, "deltaE", "state", cfg.state.deltaE);
        maybe(s, "seed", "state", cfg.state.seed);
        maybe(s, "complex", "state", cfg.state.complex_amplitudes);
        maybe(s, "system", "state", cfg.state.system);
        if (cfg.state.system != "polarized" && cfg.state.system != "superposition") {
            throw ConfigError("state.system: expected 'polarized' or 'superposition'");
        }
        if (!(cfg.state.deltaE > 0.0)) throw ConfigError("state.deltaE: must be positive");
    }

    if (j.contains("grid")) {
        const auto& g = j["grid"];
        check_keys(g, "grid", {"t_max", "dt", "t_final"});
        maybe(g, "t_max", "grid", cfg.grid.t_max);
        maybe(g, "dt", "grid", cfg.grid.dt);
        maybe(g, "t_final", "grid", cfg.grid.t_final);
        if (!(cfg.grid.dt > 0.0) || !(cfg.grid.t_max > 0.0)) throw ConfigError("grid: t_max and dt must be positive");
        if (cfg.grid.t_final && (*cfg.grid.t_final <= 0.0 || *cfg.grid.t_final > cfg.grid.t_max)) {
            throw ConfigError("grid.t_final: must lie in (0, t_max]");
        }
        try {
            TimeGrid::uniform(cfg.grid.t_max, cfg.grid.dt);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("grid: ") + e.what());
        }
    }

    if (j.contains("eth")) {
        const auto& e = j["eth"];
        check_keys(e, "eth", {"window", "freq_bin", "min_states", "entropy_degree", "dos_bin_width",
                              "include_zero_frequency"});
        maybe(e, "window", "eth", cfg.eth.window);
        maybe(e, "freq_bin", "eth", cfg.eth.freq_bin);
        maybe(e, "min_states", "eth", cfg.eth.min_states);
        maybe(e, "entropy_degree", "eth", cfg.eth.entropy_degree);
        maybe(e, "dos_bin_width", "eth", cfg.eth.dos_bin_width);
        maybe(e, "include_zero_frequency", "eth", cfg.eth.include_zero_frequency);
        if (!(cfg.eth.window > 0.0)) throw ConfigError("eth.window: must be positive");
        if (cfg.eth.freq_bin && !(*cfg.eth.freq_bin > 0.0)) throw ConfigError("eth.freq_bin: must be positive");
        if (cfg.eth.entropy_degree < 2) throw ConfigError("eth.entropy_degree: must be >= 2");
    }

    if (j.contains("scaling")) {
        const auto& s = j["scaling"];
        check_keys(s, "scaling", {"L", "presets"});
        maybe(s, "L", "scaling", cfg.sizes);
        if (s.contains("presets")) cfg.presets = string_list(s, "presets", "scaling");
        if (cfg.sizes.empty()) throw ConfigError("scaling.L: empty list");
        for (int L : cfg.sizes) {
            if (L < 2 || L + 1 > cfg.max_sites) throw ConfigError("scaling.L: size " + std::to_string(L) + " out of range");
        }
    }
    if (j.contains("levelstats")) {
        const auto& s = j["levelstats"];
        check_keys(s, "levelstats", {"presets"});
        if (s.contains("presets")) cfg.presets = string_list(s, "presets", "levelstats");
    }
    if (j.contains("typicality")) {
        const auto& s = j["typicality"];
        check_keys(s, "typicality", {"samples"});
        maybe(s, "samples", "typicality", cfg.samples);
        if (cfg.samples < 2) throw ConfigError("typicality.samples: need at least 2");
    }
    if (j.contains("multi")) {
        const auto& m = j["multi"];
        check_keys(m, "multi", {"operators"});
        if (m.contains("operators")) {
            if (!m["operators"].is_array()) throw ConfigError("multi.operators: expected an array");
            cfg.operators.clear();
            for (const auto& o : m["operators"]) {
                check_keys(o, "multi.operators[]", {"site", "axis"});
                OperatorSpec op;
                maybe(o, "site", "multi.operators[]", op.site);
                if (o.contains("axis")) op.axis = axis_at(o, "axis", "multi.operators[]");
                if (op.site < 1 || op.site > cfg.bath.L) throw ConfigError("multi.operators[].site: out of range");
                cfg.operators.push_back(op);
            }
            if (cfg.operators.empty()) throw ConfigError("multi.operators: empty list");
        }
    }
    if (cfg.presets.empty()) {
        if (cfg.kind == ExperimentKind::scaling) cfg.presets = {"chaotic", "integrable"};
        else cfg.presets = {cfg.preset.empty() ? std::string("custom") : cfg.preset};
    }
    if ((cfg.kind == ExperimentKind::scaling) && std::count(cfg.presets.begin(), cfg.presets.end(), "custom")) {
        throw ConfigError("scaling: presets must be named");
    }

    try {
        cfg.system.validate();
        cfg.bath.validate();
        cfg.coupling.validate(cfg.bath.L);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (cfg.bath.L + 1 > cfg.max_sites && cfg.kind != ExperimentKind::thermo) {
        throw ConfigError("bath.L: total chain of " + std::to_string(cfg.bath.L + 1) + " spins exceeds max_sites " +
                          std::to_string(cfg.max_sites));
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::optional<ExperimentKind> kind) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return parse_config(j, kind);
}

json canonical_json(const ExperimentConfig& cfg) {
    json j;
    j["kind"] = kind_name(cfg.kind);
    j["system"] = {{"omega0", number(cfg.system.omega0)}};
    j["bath"] = {{"L", cfg.bath.L}, {"J", cfg.bath.J}, {"hz", cfg.bath.hz}, {"hx", cfg.bath.hx},
                 {"h1", cfg.bath.h1}, {"hL", cfg.bath.hL}, {"preset", cfg.preset}};
    json terms = json::array();
    for (const auto& t : cfg.coupling.terms) {
        terms.push_back({{"system", std::string(1, axis_name(t.system_axis))},
                         {"site", t.site},
                         {"bath", std::string(1, axis_name(t.bath_axis))}});
    }
    j["coupling"] = {{"kappa", cfg.coupling.kappa}, {"terms", terms}};
    json st = {{"kind", state_kind_name(cfg.state.kind)}, {"deltaE", cfg.state.deltaE}, {"seed", cfg.state.seed},
               {"complex", cfg.state.complex_amplitudes}, {"system", cfg.state.system}};
    if (cfg.state.beta) st["beta"] = *cfg.state.beta;
    if (cfg.state.E) st["E"] = *cfg.state.E;
    j["state"] = st;
    j["grid"] = {{"t_max", cfg.grid.t_max}, {"dt", cfg.grid.dt}, {"t_final", cfg.grid.t_final.value_or(cfg.grid.t_max)}};
    j["eth"] = {{"window", cfg.eth.window},
                {"freq_bin", cfg.freq_bin()},
                {"min_states", cfg.eth.min_states},
                {"entropy_degree", cfg.eth.entropy_degree},
                {"dos_bin_width", cfg.eth.dos_bin_width ? json(*cfg.eth.dos_bin_width) : json(nullptr)},
                {"include_zero_frequency", cfg.eth.include_zero_frequency}};
    j["sizes"] = cfg.sizes;
    j["presets"] = cfg.presets;
    j["samples"] = cfg.samples;
    json ops = json::array();
    for (const auto& o : cfg.operators) ops.push_back({{"site", o.site}, {"axis", std::string(1, axis_name(o.axis))}});
    j["operators"] = ops;
    j["max_sites"] = cfg.max_sites;
    j["seed"] = cfg.seed;
    return j;
}

std::string bath_spec_text(const SpinChainParams& b) {
    const json j = {{"model", "ethbath-bath-v1"}, {"L", b.L}, {"J", b.J}, {"hz", b.hz},
                    {"hx", b.hx}, {"h1", b.h1}, {"hL", b.hL}};
    return j.dump();
}

std::string total_spec_text(const SystemParams& sys, const SpinChainParams& b, const CouplingSpec& coupling) {
    json terms = json::array();
    for (const auto& t : coupling.terms) {
        terms.push_back({std::string(1, axis_name(t.system_axis)), t.site, std::string(1, axis_name(t.bath_axis))});
    }
    const json j = {{"model", "ethbath-total-v1"}, {"omega0", sys.omega0}, {"L", b.L}, {"J", b.J}, {"hz", b.hz},
                    {"hx", b.hx}, {"h1", b.h1}, {"hL", b.hL}, {"kappa", coupling.kappa}, {"terms", terms}};
    return j.dump();
}

} // namespace ethbath
