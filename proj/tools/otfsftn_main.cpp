#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>

#include "otfsftn/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"OTFS-FTN link-level experiment driver"};
    app.footer("Experiments: nmse ber rate psd sense equalize-bench modeling-error");

    std::string experiment;
    std::string config_path;
    std::string out_dir;
    long long seed = -1;
    int workers = 0;

    app.add_option("experiment", experiment, "experiment to run")->required();
    app.add_option("--config", config_path, "path to the key = value config file")->required();
    app.add_option("--seed", seed, "override the config seed");
    app.add_option("--out", out_dir, "output directory (default from config)");
    app.add_option("--workers", workers, "worker threads (default from config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        otfsftn::ExperimentConfig cfg =
            otfsftn::parse_config(otfsftn::read_text_file(config_path), experiment);
        if (seed >= 0) {
            cfg.seed = static_cast<std::uint64_t>(seed);
        }
        if (!out_dir.empty()) {
            cfg.out_dir = out_dir;
        }
        if (workers > 0) {
            cfg.workers = workers;
        }
        if (const char* env = std::getenv("OTFSFTN_WORKERS")) {
            const int w = std::atoi(env);
            if (w > 0) {
                cfg.workers = w;
            }
        }
        otfsftn::run_experiment(cfg);
    } catch (const otfsftn::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
