// ethbath: command-line experiment runner.

#include "ethbath/runner.hpp"

#include <CLI11.hpp>

#include <dlfcn.h>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace {

void set_threads(int n) {
    if (n <= 0) return;
    Eigen::setNbThreads(n);
    // present only when LAPACK is OpenBLAS
    using SetThreads = void (*)(int);
    if (auto* f = reinterpret_cast<SetThreads>(dlsym(RTLD_DEFAULT, "openblas_set_num_threads"))) f(n);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ETH-derived Lindblad dynamics of a probe spin coupled to a spin-chain bath"};
    std::string kind;
    std::string config;
    std::string out = ".";
    std::string cache_dir;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::string validate_kind;
    app.add_option("kind", kind, "eth-stats | thermo | rates | bcf | dynamics | scaling | levelstats | typicality | "
                                 "multi-op-rates | validate")
        ->required();
    app.add_option("--config", config, "experiment config (JSON)")->required();
    app.add_option("--out", out, "output directory");
    app.add_option("--cache-dir", cache_dir, "eigensystem cache directory (default: $ETHBATH_CACHE)");
    app.add_option("--seed", seed, "seed, overrides the config");
    app.add_option("--threads", threads, "worker threads for the linear algebra");
    app.add_option("--as", validate_kind, "experiment kind checked by validate when the config omits it");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    if (cache_dir.empty()) {
        if (const char* env = std::getenv("ETHBATH_CACHE")) cache_dir = env;
    }
    set_threads(threads);

    try {
        if (kind == "validate") {
            std::ifstream is(config);
            if (!is) throw ethbath::ConfigError("cannot open config file " + config);
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(is);
            } catch (const nlohmann::json::parse_error& e) {
                throw ethbath::ConfigError(e.what());
            }
            std::optional<ethbath::ExperimentKind> k;
            if (!validate_kind.empty()) k = ethbath::parse_kind(validate_kind);
            const auto d = ethbath::validate(j, k, cache_dir);
            std::cout << d.to_json().dump(2) << '\n';
            return d.ok() ? 0 : 2;
        }
        auto cfg = ethbath::load_config(config, ethbath::parse_kind(kind));
        if (seed) {
            cfg.seed = *seed;
            cfg.state.seed = *seed;
        }
        const auto man = ethbath::run(cfg, {out, cache_dir});
        std::cout << man.to_json().dump(2) << '\n';
        return 0;
    } catch (const ethbath::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
}
