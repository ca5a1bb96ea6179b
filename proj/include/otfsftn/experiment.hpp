#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "otfsftn/analysis.hpp"

namespace otfsftn {

// Raised for malformed or out-of-range configuration input; the CLI maps
// it to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ExperimentConfig {
    std::string experiment;  // nmse | ber | rate | psd | sense | equalize-bench | modeling-error

    // system
    int M = 32;
    int N = 8;
    double delta_f_hz = 0.0;  // 0 keeps T0 = 1
    int c = 8;
    double alpha = 1.0;
    double beta = 0.25;
    double sigma_x_sq = 1.0;
    int oversample = 16;

    // channel
    int P = 1;
    int l_max = 0;
    double nu_max_hz = 0.0;
    std::string profile_path;

    // estimator / pilot
    double p_fa = 0.01;
    double kappa_step = 0.01;
    double ep_db = 30.0;  // pilot power above sigma_x_sq
    int k0 = -1;          // -1 selects floor(N/2)
    int l0 = 0;
    int Ng = -1;          // -1 selects 2*k_max
    int k_max = 0;

    // sweeps
    std::vector<double> snr_db;
    std::vector<double> alpha_list;
    std::vector<int> c_list;
    std::vector<int> n_list;

    // run control
    long trials = 100;
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out_dir = ".";

    // ber / rate extras
    std::string constellation = "qpsk";
    double code_rate = 1.0;
    bool whitening = true;
    std::string est_mode = "perfect-csi";  // or ftnp-estimated

    // sensing extras
    double fc_hz = 5e9;
    double theta_rad = 0.0;

    // psd extras
    int psd_frames = 200;
    int psd_segment = 1024;

    SystemConfig system() const;
    PilotLayout layout(const SystemConfig& cfg) const;
    EstimatorConfig estimator() const;
};

// Parses a flat key = value document ('#' comments, one pair per line).
// Unknown keys, type mismatches and invariant violations raise ConfigError
// naming the key. `experiment` must be present either in the document or
// the override.
ExperimentConfig parse_config(const std::string& text, const std::string& experiment_override = "");

// Runs the experiment, writing one CSV per metric plus manifest.txt into
// cfg.out_dir. Identical config and seed produce byte-identical output.
void run_experiment(const ExperimentConfig& cfg);

std::string read_text_file(const std::string& path);

extern const char* kVersion;

}  // namespace otfsftn
