#include "ethbath/eigen_cache.hpp"
#include "ethbath/runner.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ethbath;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ethbath-test-" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("config parsing") {
    const auto cfg = parse_config(json::parse(R"({"bath": {"L": 8}})"), ExperimentKind::dynamics);
    CHECK(cfg.bath.L == 8);
    CHECK(cfg.bath.hz == 0.3);
    CHECK(cfg.coupling.kappa == 0.15);
    CHECK(cfg.system.omega0 == 1.525);
    CHECK(cfg.freq_bin() == 0.05);
    CHECK(cfg.eth.window == 0.3);

    const auto integ = parse_config(json::parse(R"({"kind": "rates", "bath": {"L": 6, "preset": "integrable"}})"));
    CHECK(integ.kind == ExperimentKind::rates);
    CHECK(integ.bath.hz == 0.0);
    CHECK(integ.freq_bin() == 0.4);

    const auto custom = parse_config(
        json::parse(R"({"bath": {"L": 5, "J": 0.8, "hx": 0.9}, "coupling": {"kappa": 0.1,
                       "terms": [{"system": "z", "site": 2, "bath": "y"}]}})"),
        ExperimentKind::rates);
    CHECK(custom.bath.J == 0.8);
    CHECK(custom.bath.hz == 0.0);
    CHECK(custom.coupling.terms.at(0).site == 2);
    CHECK(custom.coupling.terms.at(0).bath_axis == Axis::y);

    CHECK_THROWS_AS(parse_config(json::parse(R"({"bath": {"L": 8}, "colour": 1})"), ExperimentKind::thermo), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"bath": {"L": "8"}})"), ExperimentKind::thermo), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"bath": {"L": 8}})")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"kind": "bcf", "bath": {"L": 8}})"), ExperimentKind::rates),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"bath": {"L": 16}})"), ExperimentKind::dynamics), ConfigError);
    CHECK_NOTHROW(parse_config(json::parse(R"({"bath": {"L": 15}})"), ExperimentKind::thermo));
    CHECK_THROWS_AS(parse_config(json::parse(R"({"bath": {"L": 8}, "grid": {"t_max": 10, "dt": 0.3}})"),
                                 ExperimentKind::dynamics),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse(R"({"bath": {"L": 8}, "state": {"beta": 0.1, "E": 0}})"),
                                 ExperimentKind::dynamics),
                    ConfigError);
    CHECK_THROWS_AS(parse_kind("nope"), ConfigError);
    for (auto k : {ExperimentKind::eth_stats, ExperimentKind::multi_op_rates, ExperimentKind::levelstats})
        CHECK(parse_kind(kind_name(k)) == k);

    // key order does not change the canonical form
    const auto a = parse_config(json::parse(R"({"bath": {"L": 8, "preset": "chaotic"}, "seed": 3})"), ExperimentKind::bcf);
    const auto b = parse_config(json::parse(R"({"seed": 3, "bath": {"preset": "chaotic", "L": 8}})"), ExperimentKind::bcf);
    CHECK(canonical_json(a).dump() == canonical_json(b).dump());
    CHECK(bath_spec_text(a.bath) != bath_spec_text(integ.bath));
}

TEST_CASE("thermo run writes hashed outputs deterministically") {
    const auto cfg = parse_config(json::parse(R"({"bath": {"L": 6}})"), ExperimentKind::thermo);
    const fs::path a = scratch("run-a"), b = scratch("run-b");
    const RunManifest m = run(cfg, {a, {}});
    run(cfg, {b, {}});
    CHECK(m.kind == "thermo");
    REQUIRE(m.files.size() == 2);
    for (const auto& f : m.files) {
        CHECK(to_hex(sha256_file(a / f.name)) == f.sha256);
        CHECK(slurp(a / f.name) == slurp(b / f.name));
    }
    const json man = json::parse(slurp(a / "manifest.json"));
    CHECK(man["config_hash"] == m.config_hash);
    CHECK(man["files"].size() == 2);
    const json summary = json::parse(slurp(a / "summary.json"));
    CHECK(summary["dimension"] == 64);
    CHECK(std::abs(summary["beta"].get<double>()) < 1e-9);
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("failed runs leave no partial outputs") {
    const auto cfg = parse_config(json::parse(R"({"bath": {"L": 6}})"), ExperimentKind::thermo);
    const fs::path d = scratch("run-fail");
    fs::create_directories(d / "summary.json"); // blocks the summary write
    CHECK_THROWS_AS(run(cfg, {d, {}}), Error);
    CHECK_FALSE(fs::exists(d / "thermo.csv"));
    CHECK_FALSE(fs::exists(d / "manifest.json"));
    fs::remove_all(d);

    auto bad = parse_config(json::parse(R"({"bath": {"L": 6}, "state": {"kind": "product", "E": -100}})"),
                            ExperimentKind::dynamics);
    const fs::path e = scratch("run-config-fail");
    CHECK_THROWS_AS(run(bad, {e, {}}), ConfigError);
    CHECK(fs::is_empty(e));
    fs::remove_all(e);
}

TEST_CASE("small end-to-end runs") {
    const fs::path cache = scratch("cache");
    const fs::path out = scratch("e2e");
    for (const char* kind : {"eth-stats", "rates", "bcf", "dynamics", "typicality", "multi-op-rates", "levelstats"}) {
        CAPTURE(kind);
        json j = json::parse(R"({"bath": {"L": 8}, "grid": {"t_max": 20, "dt": 0.25},
                                 "eth": {"window": 2.0, "min_states": 10, "freq_bin": 0.1},
                                 "typicality": {"samples": 4}})");
        if (std::string(kind) == "bcf") j["eth"]["min_states"] = 10;
        const auto cfg = parse_config(j, parse_kind(kind));
        const RunManifest m = run(cfg, {out / kind, cache});
        CHECK(fs::exists(out / kind / "summary.json"));
        for (const auto& f : m.files) CHECK(fs::exists(out / kind / f.name));
    }
    const json dyn = json::parse(slurp(out / "dynamics" / "summary.json"));
    CHECK(dyn["lindblad_checks"]["max_trace_error"].get<double>() < 1e-6);
    CHECK(dyn["exact_checks"]["max_norm_error"].get<double>() < 1e-8);
    // a second run reads the cache
    CHECK(!fs::is_empty(cache));
    fs::remove_all(cache);
    fs::remove_all(out);
}

TEST_CASE("validate") {
    const auto ok = validate(json::parse(R"({"bath": {"L": 6}})"), ExperimentKind::thermo);
    CHECK(ok.ok());
    const auto k0 = validate(json::parse(R"({"bath": {"L": 6}, "coupling": {"kappa": 0}})"), ExperimentKind::dynamics);
    CHECK(k0.ok());
    CHECK_FALSE(k0.warnings.empty());
    const auto bad = validate(json::parse(R"({"bath": {"L": 6}, "nope": 1})"), ExperimentKind::thermo);
    CHECK_FALSE(bad.ok());
}
