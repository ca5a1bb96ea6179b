#include "otfsftn/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

namespace otfsftn {

const char* kVersion = "otfsftn 1.0.0";

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

long parse_long(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument("trailing");
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an integer, got '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) {
            throw std::invalid_argument("trailing");
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "on" || value == "1") return true;
    if (value == "false" || value == "off" || value == "0") return false;
    throw ConfigError(key + ": expected true/false, got '" + value + "'");
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(parse_double(key, item));
        }
    }
    if (out.empty()) {
        throw ConfigError(key + ": list must not be empty");
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    for (double v : parse_double_list(key, value)) {
        out.push_back(static_cast<int>(v));
    }
    return out;
}

const std::vector<std::string> kExperiments = {
    "nmse", "ber", "rate", "psd", "sense", "equalize-bench", "modeling-error"};

class Csv {
public:
    Csv(const std::string& path, const std::string& header) : out_(path, std::ios::binary) {
        if (!out_) {
            throw std::runtime_error("cannot open output file: " + path);
        }
        out_ << header << "\n";
    }

    void row(const std::string& line) { out_ << line << "\n"; }

    static std::string num(double v) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "%.12g", v);
        return buf;
    }

private:
    std::ofstream out_;
};

}  // namespace

SystemConfig ExperimentConfig::system() const {
    SystemConfig cfg;
    cfg.M = M;
    cfg.N = N;
    cfg.delta_f = delta_f_hz;
    cfg.c = c;
    cfg.alpha = alpha;
    cfg.beta = beta;
    cfg.sigma_x_sq = sigma_x_sq;
    cfg.oversample = oversample;
    return cfg;
}

PilotLayout ExperimentConfig::layout(const SystemConfig& cfg) const {
    PilotLayout lay;
    lay.k0 = k0 >= 0 ? k0 : cfg.N / 2;
    lay.l0 = l0;
    lay.k_max = k_max;
    lay.Ng = Ng >= 0 ? Ng : 2 * k_max;
    lay.l_max = l_max;
    lay.Ep = sigma_x_sq * std::pow(10.0, ep_db / 10.0);
    return lay;
}

EstimatorConfig ExperimentConfig::estimator() const {
    EstimatorConfig est;
    est.p_fa = p_fa;
    est.kappa_step = kappa_step;
    return est;
}

ExperimentConfig parse_config(const std::string& text, const std::string& experiment_override) {
    ExperimentConfig cfg;
    std::map<std::string, std::string> kv;

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");
        }
        if (kv.count(key)) {
            throw ConfigError(key + ": duplicate key");
        }
        kv[key] = value;
    }

    auto take = [&](const char* key) -> std::string {
        auto it = kv.find(key);
        if (it == kv.end()) {
            return "";
        }
        const std::string v = it->second;
        kv.erase(it);
        return v;
    };

    if (auto v = take("experiment"); !v.empty()) cfg.experiment = v;
    if (!experiment_override.empty()) {
        if (!cfg.experiment.empty() && cfg.experiment != experiment_override) {
            throw ConfigError("experiment: config says '" + cfg.experiment +
                              "' but the command line says '" + experiment_override + "'");
        }
        cfg.experiment = experiment_override;
    }
    if (cfg.experiment.empty()) {
        throw ConfigError("experiment: missing key");
    }
    if (std::find(kExperiments.begin(), kExperiments.end(), cfg.experiment) == kExperiments.end()) {
        throw ConfigError("experiment: unknown experiment '" + cfg.experiment + "'");
    }

    if (auto v = take("M"); !v.empty()) cfg.M = static_cast<int>(parse_long("M", v));
    if (auto v = take("N"); !v.empty()) cfg.N = static_cast<int>(parse_long("N", v));
    if (auto v = take("delta_f_hz"); !v.empty()) cfg.delta_f_hz = parse_double("delta_f_hz", v);
    if (auto v = take("c"); !v.empty()) cfg.c = static_cast<int>(parse_long("c", v));
    if (auto v = take("alpha"); !v.empty()) cfg.alpha = parse_double("alpha", v);
    if (auto v = take("beta"); !v.empty()) cfg.beta = parse_double("beta", v);
    if (auto v = take("sigma_x_sq"); !v.empty()) cfg.sigma_x_sq = parse_double("sigma_x_sq", v);
    if (auto v = take("oversample"); !v.empty()) cfg.oversample = static_cast<int>(parse_long("oversample", v));

    if (auto v = take("P"); !v.empty()) cfg.P = static_cast<int>(parse_long("P", v));
    if (auto v = take("l_max"); !v.empty()) cfg.l_max = static_cast<int>(parse_long("l_max", v));
    if (auto v = take("nu_max_hz"); !v.empty()) cfg.nu_max_hz = parse_double("nu_max_hz", v);
    if (auto v = take("profile"); !v.empty()) cfg.profile_path = v;

    if (auto v = take("p_fa"); !v.empty()) cfg.p_fa = parse_double("p_fa", v);
    if (auto v = take("kappa_step"); !v.empty()) cfg.kappa_step = parse_double("kappa_step", v);
    if (auto v = take("ep_db"); !v.empty()) cfg.ep_db = parse_double("ep_db", v);
    if (auto v = take("k0"); !v.empty()) cfg.k0 = static_cast<int>(parse_long("k0", v));
    if (auto v = take("l0"); !v.empty()) cfg.l0 = static_cast<int>(parse_long("l0", v));
    if (auto v = take("Ng"); !v.empty()) cfg.Ng = static_cast<int>(parse_long("Ng", v));
    if (auto v = take("k_max"); !v.empty()) cfg.k_max = static_cast<int>(parse_long("k_max", v));

    if (auto v = take("snr_db"); !v.empty()) cfg.snr_db = parse_double_list("snr_db", v);
    if (auto v = take("alpha_list"); !v.empty()) cfg.alpha_list = parse_double_list("alpha_list", v);
    if (auto v = take("c_list"); !v.empty()) cfg.c_list = parse_int_list("c_list", v);
    if (auto v = take("n_list"); !v.empty()) cfg.n_list = parse_int_list("n_list", v);

    if (auto v = take("trials"); !v.empty()) cfg.trials = parse_long("trials", v);
    if (auto v = take("seed"); !v.empty()) cfg.seed = static_cast<std::uint64_t>(parse_long("seed", v));
    if (auto v = take("workers"); !v.empty()) cfg.workers = static_cast<int>(parse_long("workers", v));
    if (auto v = take("out_dir"); !v.empty()) cfg.out_dir = v;

    if (auto v = take("constellation"); !v.empty()) cfg.constellation = v;
    if (auto v = take("code_rate"); !v.empty()) cfg.code_rate = parse_double("code_rate", v);
    if (auto v = take("whitening"); !v.empty()) cfg.whitening = parse_bool("whitening", v);
    if (auto v = take("est_mode"); !v.empty()) cfg.est_mode = v;

    if (auto v = take("fc_hz"); !v.empty()) cfg.fc_hz = parse_double("fc_hz", v);
    if (auto v = take("theta_rad"); !v.empty()) cfg.theta_rad = parse_double("theta_rad", v);
    if (auto v = take("psd_frames"); !v.empty()) cfg.psd_frames = static_cast<int>(parse_long("psd_frames", v));
    if (auto v = take("psd_segment"); !v.empty()) cfg.psd_segment = static_cast<int>(parse_long("psd_segment", v));

    if (!kv.empty()) {
        throw ConfigError(kv.begin()->first + ": unknown key");
    }

    // Range checks, each naming the offending key.
    if (cfg.M < 2) throw ConfigError("M: must be >= 2");
    if (cfg.N < 2) throw ConfigError("N: must be >= 2");
    if (cfg.c < 0) throw ConfigError("c: must be >= 0");
    if (static_cast<long>(cfg.M) * cfg.N <= 4L * cfg.c) throw ConfigError("c: M*N must exceed 4c");
    if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw ConfigError("alpha: must lie in (0, 1]");
    if (!(cfg.beta >= 0.0 && cfg.beta <= 1.0)) throw ConfigError("beta: must lie in [0, 1]");
    if (cfg.delta_f_hz < 0.0) throw ConfigError("delta_f_hz: must be >= 0");
    if (cfg.sigma_x_sq <= 0.0) throw ConfigError("sigma_x_sq: must be > 0");
    if (cfg.oversample < 4) throw ConfigError("oversample: must be >= 4");
    if (cfg.P < 1) throw ConfigError("P: must be >= 1");
    if (cfg.l_max < 0) throw ConfigError("l_max: must be >= 0");
    if (cfg.nu_max_hz < 0.0) throw ConfigError("nu_max_hz: must be >= 0");
    if (!(cfg.p_fa > 0.0 && cfg.p_fa < 0.5)) throw ConfigError("p_fa: must lie in (0, 0.5)");
    if (!(cfg.kappa_step > 0.0 && cfg.kappa_step <= 0.1)) throw ConfigError("kappa_step: must lie in (0, 0.1]");
    if (cfg.trials < 1) throw ConfigError("trials: must be >= 1");
    if (cfg.workers < 1) throw ConfigError("workers: must be >= 1");
    if (cfg.code_rate <= 0.0 || cfg.code_rate > 1.0) throw ConfigError("code_rate: must lie in (0, 1]");
    if (cfg.est_mode != "perfect-csi" && cfg.est_mode != "ftnp-estimated") {
        throw ConfigError("est_mode: must be perfect-csi or ftnp-estimated");
    }
    if (!cfg.profile_path.empty() && !std::filesystem::exists(cfg.profile_path)) {
        throw ConfigError("profile: file does not exist: " + cfg.profile_path);
    }
    try {
        constellation_from_string(cfg.constellation);
    } catch (const std::exception&) {
        throw ConfigError("constellation: unknown value '" + cfg.constellation + "'");
    }
    if (cfg.psd_frames < 1) throw ConfigError("psd_frames: must be >= 1");
    if (cfg.psd_segment < 8) throw ConfigError("psd_segment: must be >= 8");
    return cfg;
}

namespace {

void write_manifest(const ExperimentConfig& cfg) {
    std::ofstream out(cfg.out_dir + "/manifest.txt", std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write manifest in " + cfg.out_dir);
    }
    auto list_d = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            s += (i ? "," : "") + Csv::num(v[i]);
        }
        return s;
    };
    auto list_i = [](const std::vector<int>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            s += (i ? "," : "") + std::to_string(v[i]);
        }
        return s;
    };
    out << "version = " << kVersion << "\n";
    out << "experiment = " << cfg.experiment << "\n";
    out << "M = " << cfg.M << "\nN = " << cfg.N << "\n";
    out << "delta_f_hz = " << Csv::num(cfg.delta_f_hz) << "\n";
    out << "c = " << cfg.c << "\n";
    out << "alpha = " << Csv::num(cfg.alpha) << "\nbeta = " << Csv::num(cfg.beta) << "\n";
    out << "sigma_x_sq = " << Csv::num(cfg.sigma_x_sq) << "\n";
    out << "oversample = " << cfg.oversample << "\n";
    out << "P = " << cfg.P << "\nl_max = " << cfg.l_max << "\n";
    out << "nu_max_hz = " << Csv::num(cfg.nu_max_hz) << "\n";
    out << "profile = " << cfg.profile_path << "\n";
    out << "p_fa = " << Csv::num(cfg.p_fa) << "\n";
    out << "kappa_step = " << Csv::num(cfg.kappa_step) << "\n";
    out << "ep_db = " << Csv::num(cfg.ep_db) << "\n";
    out << "k0 = " << cfg.k0 << "\nl0 = " << cfg.l0 << "\nNg = " << cfg.Ng << "\n";
    out << "k_max = " << cfg.k_max << "\n";
    out << "snr_db = " << list_d(cfg.snr_db) << "\n";
    out << "alpha_list = " << list_d(cfg.alpha_list) << "\n";
    out << "c_list = " << list_i(cfg.c_list) << "\n";
    out << "n_list = " << list_i(cfg.n_list) << "\n";
    out << "trials = " << cfg.trials << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "workers = " << cfg.workers << "\n";
    out << "constellation = " << cfg.constellation << "\n";
    out << "code_rate = " << Csv::num(cfg.code_rate) << "\n";
    out << "whitening = " << (cfg.whitening ? "true" : "false") << "\n";
    out << "est_mode = " << cfg.est_mode << "\n";
    out << "fc_hz = " << Csv::num(cfg.fc_hz) << "\n";
    out << "theta_rad = " << Csv::num(cfg.theta_rad) << "\n";
    out << "psd_frames = " << cfg.psd_frames << "\n";
    out << "psd_segment = " << cfg.psd_segment << "\n";
}

std::vector<cplx> random_data_symbols(std::size_t count, Constellation con, double sigma_x,
                                      Rng& rng) {
    const int bps = bits_per_symbol(con);
    std::vector<std::uint8_t> bits(count * static_cast<std::size_t>(bps));
    for (auto& b : bits) {
        b = static_cast<std::uint8_t>(rng.next_u64() & 1u);
    }
    const CVec syms = map_bits(bits, con, sigma_x);
    return std::vector<cplx>(syms.data(), syms.data() + syms.size());
}

ChannelRealization draw_channel(const ExperimentConfig& ecfg, const SystemConfig& cfg,
                                const ChannelProfile* profile, Rng& rng) {
    if (profile != nullptr) {
        return realize_profile(*profile, cfg, rng);
    }
    return random_channel(ecfg.P, ecfg.l_max, ecfg.nu_max_hz, cfg, rng);
}

void warn_ifi(const SystemConfig& cfg) {
    if (cfg.pulse().below_ifi_bound()) {
        std::fprintf(stderr, "warning: alpha=%.3f is below the IFI bound 1/(1+beta)=%.3f\n",
                     cfg.alpha, 1.0 / (1.0 + cfg.beta));
    }
}

void run_nmse(const ExperimentConfig& ecfg) {
    if (ecfg.snr_db.empty()) {
        throw ConfigError("snr_db: required for the nmse experiment");
    }
    const std::vector<double> alphas =
        ecfg.alpha_list.empty() ? std::vector<double>{ecfg.alpha} : ecfg.alpha_list;
    std::unique_ptr<ChannelProfile> loaded;
    const ChannelProfile* prof = nullptr;
    if (!ecfg.profile_path.empty()) {
        loaded = std::make_unique<ChannelProfile>(load_channel_profile(ecfg.profile_path));
        prof = loaded.get();
    }

    Csv csv(ecfg.out_dir + "/nmse.csv", "alpha,snr_db,nmse_db,trials");
    const Constellation con = constellation_from_string(ecfg.constellation);
    for (std::size_t a_idx = 0; a_idx < alphas.size(); ++a_idx) {
        SystemConfig cfg = ecfg.system();
        cfg.alpha = alphas[a_idx];
        warn_ifi(cfg);
        const PilotLayout lay = ecfg.layout(cfg);
        const EstimatorConfig est_cfg = ecfg.estimator();
        const auto cells = pilot_data_cells(lay, cfg);

        for (std::size_t s_idx = 0; s_idx < ecfg.snr_db.size(); ++s_idx) {
            cfg.sigma0_sq = cfg.sigma_x_sq / std::pow(10.0, ecfg.snr_db[s_idx] / 10.0);
            const NoiseCorrelation noise =
                build_noise_correlation(cfg.pulse(), cfg.M, cfg.N, cfg.c, cfg.sigma0_sq);

            std::vector<double> ratio(static_cast<std::size_t>(ecfg.trials), 0.0);
            parallel_trials(ecfg.trials, ecfg.workers, [&](long t) {
                Rng rng(seed_stream(ecfg.seed, a_idx * 1000 + s_idx, static_cast<std::uint64_t>(t)));
                const ChannelRealization ch = draw_channel(ecfg, cfg, prof, rng);
                const auto data = random_data_symbols(cells.size(), con, std::sqrt(cfg.sigma_x_sq), rng);
                const DDFrame frame = build_pilot_frame(lay, data, cfg);
                const CVec z = propagate(modulate(frame, cfg), ch, noise, cfg, rng);
                const CMat Ydd = received_dd_grid(z, cfg);
                const EstimatedChannel est = estimate_channel(Ydd, noise, lay, est_cfg, cfg);
                const double db = nmse_db(est.taps, ch.taps, cfg);
                ratio[static_cast<std::size_t>(t)] = std::pow(10.0, db / 10.0);
            });
            double mean = 0.0;
            for (double r : ratio) mean += r;
            mean /= static_cast<double>(ecfg.trials);
            csv.row(Csv::num(cfg.alpha) + "," + Csv::num(ecfg.snr_db[s_idx]) + "," +
                    Csv::num(10.0 * std::log10(mean)) + "," + std::to_string(ecfg.trials));
        }
    }
}

void run_ber_experiment(const ExperimentConfig& ecfg) {
    if (ecfg.snr_db.empty()) {
        throw ConfigError("snr_db: required for the ber experiment");
    }
    SystemConfig cfg = ecfg.system();
    warn_ifi(cfg);

    BerOptions opt;
    opt.constellation = constellation_from_string(ecfg.constellation);
    opt.est_mode = ecfg.est_mode == "ftnp-estimated" ? CsiMode::FtnpEstimated : CsiMode::PerfectCsi;
    opt.whitening = ecfg.whitening;
    opt.P = ecfg.P;
    opt.l_max = ecfg.l_max;
    opt.nu_max_hz = ecfg.nu_max_hz;
    opt.workers = ecfg.workers;
    opt.est_cfg = ecfg.estimator();
    if (!ecfg.profile_path.empty()) {
        opt.profile = load_channel_profile(ecfg.profile_path);
    }
    if (opt.est_mode == CsiMode::FtnpEstimated || ecfg.k_max > 0 || ecfg.Ng > 0) {
        opt.layout = ecfg.layout(cfg);
    }

    const auto points = run_ber(cfg, opt, ecfg.snr_db, ecfg.trials, ecfg.seed);
    Csv csv(ecfg.out_dir + "/ber.csv", "snr_db,ber,ci_low,ci_high,trials");
    for (const BerPoint& p : points) {
        csv.row(Csv::num(p.snr_db) + "," + Csv::num(p.ber) + "," + Csv::num(p.ci_low) + "," +
                Csv::num(p.ci_high) + "," + std::to_string(p.trials));
    }
}

void run_rate(const ExperimentConfig& ecfg) {
    if (ecfg.snr_db.empty()) {
        throw ConfigError("snr_db: required for the rate experiment");
    }
    const std::vector<double> alphas =
        ecfg.alpha_list.empty() ? std::vector<double>{ecfg.alpha} : ecfg.alpha_list;
    Csv csv(ecfg.out_dir + "/rate.csv", "alpha,beta,snr_db,r_n,r_bits,trials");
    for (std::size_t a_idx = 0; a_idx < alphas.size(); ++a_idx) {
        SystemConfig cfg = ecfg.system();
        cfg.alpha = alphas[a_idx];
        warn_ifi(cfg);
        for (std::size_t s_idx = 0; s_idx < ecfg.snr_db.size(); ++s_idx) {
            cfg.sigma0_sq = cfg.sigma_x_sq / std::pow(10.0, ecfg.snr_db[s_idx] / 10.0);
            const NoiseCorrelation noise =
                build_noise_correlation(cfg.pulse(), cfg.M, cfg.N, cfg.c, cfg.sigma0_sq);
            std::vector<double> rn(static_cast<std::size_t>(ecfg.trials), 0.0);
            std::vector<double> rb(static_cast<std::size_t>(ecfg.trials), 0.0);
            parallel_trials(ecfg.trials, ecfg.workers, [&](long t) {
                Rng rng(seed_stream(ecfg.seed, a_idx * 1000 + s_idx, static_cast<std::uint64_t>(t)));
                const ChannelRealization ch =
                    random_channel(ecfg.P, ecfg.l_max, ecfg.nu_max_hz, cfg, rng);
                const InfoRateReport rep = info_rate(ch, noise, cfg);
                rn[static_cast<std::size_t>(t)] = rep.R_N;
                rb[static_cast<std::size_t>(t)] = rep.R_bits;
            });
            double mean_rn = 0.0;
            double mean_rb = 0.0;
            for (long t = 0; t < ecfg.trials; ++t) {
                mean_rn += rn[static_cast<std::size_t>(t)];
                mean_rb += rb[static_cast<std::size_t>(t)];
            }
            mean_rn /= static_cast<double>(ecfg.trials);
            mean_rb /= static_cast<double>(ecfg.trials);
            csv.row(Csv::num(cfg.alpha) + "," + Csv::num(cfg.beta) + "," +
                    Csv::num(ecfg.snr_db[s_idx]) + "," + Csv::num(mean_rn) + "," +
                    Csv::num(mean_rb) + "," + std::to_string(ecfg.trials));
        }
    }
}

void run_psd(const ExperimentConfig& ecfg) {
    const std::vector<double> alphas =
        ecfg.alpha_list.empty() ? std::vector<double>{ecfg.alpha} : ecfg.alpha_list;
    Csv csv(ecfg.out_dir + "/psd.csv", "alpha,freq_hz,psd_db");
    for (std::size_t a_idx = 0; a_idx < alphas.size(); ++a_idx) {
        SystemConfig cfg = ecfg.system();
        cfg.alpha = alphas[a_idx];
        warn_ifi(cfg);
        // Sample at 0.2 T0: requires 5*alpha samples per Tf to be integer.
        const double os = 5.0 * cfg.alpha;
        if (std::abs(os - std::lround(os)) > 1e-9) {
            throw ConfigError("alpha_list: alpha=" + Csv::num(cfg.alpha) +
                              " is incompatible with the 0.2 T0 sampling grid");
        }
        cfg.oversample = static_cast<int>(std::lround(os));

        std::vector<Waveform> frames(static_cast<std::size_t>(ecfg.psd_frames));
        parallel_trials(ecfg.psd_frames, ecfg.workers, [&](long t) {
            Rng rng(seed_stream(ecfg.seed, 7000 + a_idx, static_cast<std::uint64_t>(t)));
            DDFrame frame(cfg.M, cfg.N);
            for (int n = 0; n < cfg.N; ++n) {
                for (int m = 0; m < cfg.M; ++m) {
                    frame.grid(m, n) = (rng.next_u64() & 1u) ? -std::sqrt(cfg.sigma_x_sq)
                                                             : std::sqrt(cfg.sigma_x_sq);
                }
            }
            const CVec a = add_cp(modulate(frame, cfg), cfg.c);
            frames[static_cast<std::size_t>(t)] = synthesize_waveform(a, cfg, 100);
        });
        const PsdResult res = psd(frames, ecfg.psd_segment);
        for (Eigen::Index i = 0; i < res.freq_hz.size(); ++i) {
            csv.row(Csv::num(cfg.alpha) + "," + Csv::num(res.freq_hz(i)) + "," +
                    Csv::num(res.psd_db(i)));
        }
    }
}

void run_sense(const ExperimentConfig& ecfg) {
    if (ecfg.snr_db.empty()) {
        throw ConfigError("snr_db: required for the sense experiment");
    }
    SystemConfig cfg = ecfg.system();
    warn_ifi(cfg);
    const PilotLayout lay = ecfg.layout(cfg);
    const EstimatorConfig est_cfg = ecfg.estimator();
    const auto cells = pilot_data_cells(lay, cfg);
    const Constellation con = constellation_from_string(ecfg.constellation);
    constexpr double c_l = 299792458.0;
    const double cos_theta = std::cos(ecfg.theta_rad);
    if (std::abs(cos_theta) < 1e-12) {
        throw ConfigError("theta_rad: aspect angle too close to +-pi/2");
    }

    Csv csv(ecfg.out_dir + "/sense.csv", "snr_db,range_nmse_db,velocity_nmse_db,trials");
    for (std::size_t s_idx = 0; s_idx < ecfg.snr_db.size(); ++s_idx) {
        cfg.sigma0_sq = cfg.sigma_x_sq / std::pow(10.0, ecfg.snr_db[s_idx] / 10.0);
        const NoiseCorrelation noise =
            build_noise_correlation(cfg.pulse(), cfg.M, cfg.N, cfg.c, cfg.sigma0_sq);

        std::vector<double> r_err(static_cast<std::size_t>(ecfg.trials), 0.0);
        std::vector<double> r_ref(static_cast<std::size_t>(ecfg.trials), 0.0);
        std::vector<double> v_err(static_cast<std::size_t>(ecfg.trials), 0.0);
        std::vector<double> v_ref(static_cast<std::size_t>(ecfg.trials), 0.0);
        parallel_trials(ecfg.trials, ecfg.workers, [&](long t) {
            Rng rng(seed_stream(ecfg.seed, 9000 + s_idx, static_cast<std::uint64_t>(t)));
            const ChannelRealization ch =
                random_channel(ecfg.P, ecfg.l_max, ecfg.nu_max_hz, cfg, rng);
            const auto data = random_data_symbols(cells.size(), con, std::sqrt(cfg.sigma_x_sq), rng);
            const DDFrame frame = build_pilot_frame(lay, data, cfg);
            const CVec z = propagate(modulate(frame, cfg), ch, noise, cfg, rng);
            const CMat Ydd = received_dd_grid(z, cfg);
            const EstimatedChannel est = estimate_channel(Ydd, noise, lay, est_cfg, cfg);

            for (const ChannelTap& truth : ch.taps) {
                const double r_true = c_l * truth.delay_int * cfg.Tf() / 2.0;
                const double u_true =
                    c_l * (truth.doppler_total() / (cfg.N * cfg.T())) / (ecfg.fc_hz * cos_theta);
                double r_hat = 0.0;
                double u_hat = 0.0;
                double best = std::numeric_limits<double>::infinity();
                for (const ChannelTap& cand : est.taps) {
                    const double dl = cand.delay_int - truth.delay_int;
                    const double dk = cand.doppler_total() - truth.doppler_total();
                    const double d2 = dl * dl + dk * dk;
                    if (d2 < best) {
                        best = d2;
                        r_hat = c_l * cand.delay_int * cfg.Tf() / 2.0;
                        u_hat = c_l * (cand.doppler_total() / (cfg.N * cfg.T())) /
                                (ecfg.fc_hz * cos_theta);
                    }
                }
                r_err[static_cast<std::size_t>(t)] += (r_hat - r_true) * (r_hat - r_true);
                r_ref[static_cast<std::size_t>(t)] += r_true * r_true;
                v_err[static_cast<std::size_t>(t)] += (u_hat - u_true) * (u_hat - u_true);
                v_ref[static_cast<std::size_t>(t)] += u_true * u_true;
            }
        });
        double re = 0.0, rr = 0.0, ve = 0.0, vr = 0.0;
        for (long t = 0; t < ecfg.trials; ++t) {
            re += r_err[static_cast<std::size_t>(t)];
            rr += r_ref[static_cast<std::size_t>(t)];
            ve += v_err[static_cast<std::size_t>(t)];
            vr += v_ref[static_cast<std::size_t>(t)];
        }
        const double r_nmse = 10.0 * std::log10(std::max(re / std::max(rr, 1e-300), 1e-12));
        const double v_nmse = 10.0 * std::log10(std::max(ve / std::max(vr, 1e-300), 1e-12));
        csv.row(Csv::num(ecfg.snr_db[s_idx]) + "," + Csv::num(r_nmse) + "," + Csv::num(v_nmse) +
                "," + std::to_string(ecfg.trials));
    }
}

void run_bench(const ExperimentConfig& ecfg) {
    const std::vector<int> n_list = ecfg.n_list.empty() ? std::vector<int>{8, 16, 32, 64} : ecfg.n_list;
    Csv csv(ecfg.out_dir + "/bench.csv", "n,mn,equalize_ms,full_lmmse_ms");
    for (std::size_t idx = 0; idx < n_list.size(); ++idx) {
        SystemConfig cfg = ecfg.system();
        cfg.N = n_list[idx];
        cfg.sigma0_sq = cfg.sigma_x_sq / std::pow(10.0, 15.0 / 10.0);
        const NoiseCorrelation noise =
            build_noise_correlation(cfg.pulse(), cfg.M, cfg.N, cfg.c, cfg.sigma0_sq);
        Rng rng(seed_stream(ecfg.seed, 11000 + idx, 0));
        const ChannelRealization ch = random_channel(ecfg.P, ecfg.l_max, ecfg.nu_max_hz, cfg, rng);
        const SparseChannelMatrix Hs = build_sparse_H(ch.taps, cfg);
        CVec z(cfg.frame_len());
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            z(i) = rng.cgaussian(1.0);
        }
        // warm-up covers FFT planning
        (void)equalize(z, Hs, noise, cfg);
        double best_ms = std::numeric_limits<double>::infinity();
        for (int rep = 0; rep < 5; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            const CVec x = equalize(z, Hs, noise, cfg);
            const auto t1 = std::chrono::steady_clock::now();
            best_ms = std::min(best_ms, std::chrono::duration<double, std::milli>(t1 - t0).count());
        }
        std::string full_ms = "";
        if (cfg.frame_len() <= 2048) {
            const CMat Ht = build_Ht(ch, cfg);
            (void)full_lmmse(z, Ht, noise.G, cfg.sigma0_sq, cfg);
            double best_full = std::numeric_limits<double>::infinity();
            for (int rep = 0; rep < 3; ++rep) {
                const auto t0 = std::chrono::steady_clock::now();
                const CVec x = full_lmmse(z, Ht, noise.G, cfg.sigma0_sq, cfg);
                const auto t1 = std::chrono::steady_clock::now();
                best_full =
                    std::min(best_full, std::chrono::duration<double, std::milli>(t1 - t0).count());
            }
            full_ms = Csv::num(best_full);
        }
        csv.row(std::to_string(cfg.N) + "," + std::to_string(cfg.frame_len()) + "," +
                Csv::num(best_ms) + "," + full_ms);
    }
}

void run_modeling_error(const ExperimentConfig& ecfg) {
    const std::vector<int> cs = ecfg.c_list.empty() ? std::vector<int>{ecfg.c} : ecfg.c_list;
    const std::vector<double> alphas =
        ecfg.alpha_list.empty() ? std::vector<double>{ecfg.alpha} : ecfg.alpha_list;
    const std::vector<double> snrs = ecfg.snr_db.empty() ? std::vector<double>{15.0} : ecfg.snr_db;

    Csv csv(ecfg.out_dir + "/modeling_error.csv", "c,alpha,snr_db,eps0,eps1,eps1_rel,trials");
    for (std::size_t c_idx = 0; c_idx < cs.size(); ++c_idx) {
        for (std::size_t a_idx = 0; a_idx < alphas.size(); ++a_idx) {
            SystemConfig cfg = ecfg.system();
            cfg.c = cs[c_idx];
            cfg.alpha = alphas[a_idx];
            warn_ifi(cfg);
            for (std::size_t s_idx = 0; s_idx < snrs.size(); ++s_idx) {
                cfg.sigma0_sq = cfg.sigma_x_sq / std::pow(10.0, snrs[s_idx] / 10.0);
                const NoiseCorrelation noise =
                    build_noise_correlation(cfg.pulse(), cfg.M, cfg.N, cfg.c, cfg.sigma0_sq);
                std::vector<double> e0(static_cast<std::size_t>(ecfg.trials), 0.0);
                std::vector<double> e1(static_cast<std::size_t>(ecfg.trials), 0.0);
                std::vector<double> e1r(static_cast<std::size_t>(ecfg.trials), 0.0);
                parallel_trials(ecfg.trials, ecfg.workers, [&](long t) {
                    Rng rng(seed_stream(ecfg.seed, (c_idx * 100 + a_idx) * 100 + s_idx,
                                        static_cast<std::uint64_t>(t)));
                    const ChannelRealization ch =
                        random_channel(ecfg.P, ecfg.l_max, ecfg.nu_max_hz, cfg, rng);
                    const ModelingErrors me = modeling_errors(ch, noise, cfg);
                    e0[static_cast<std::size_t>(t)] = me.eps0;
                    e1[static_cast<std::size_t>(t)] = me.eps1;
                    e1r[static_cast<std::size_t>(t)] = me.eps1_rel;
                });
                double m0 = 0.0, m1 = 0.0, m1r = 0.0;
                for (long t = 0; t < ecfg.trials; ++t) {
                    m0 += e0[static_cast<std::size_t>(t)];
                    m1 += e1[static_cast<std::size_t>(t)];
                    m1r += e1r[static_cast<std::size_t>(t)];
                }
                m0 /= static_cast<double>(ecfg.trials);
                m1 /= static_cast<double>(ecfg.trials);
                m1r /= static_cast<double>(ecfg.trials);
                csv.row(std::to_string(cfg.c) + "," + Csv::num(cfg.alpha) + "," +
                        Csv::num(snrs[s_idx]) + "," + Csv::num(m0) + "," + Csv::num(m1) + "," +
                        Csv::num(m1r) + "," + std::to_string(ecfg.trials));
            }
        }
    }
}

}  // namespace

void run_experiment(const ExperimentConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    cfg.system().validate();

    if (cfg.experiment == "nmse") {
        run_nmse(cfg);
    } else if (cfg.experiment == "ber") {
        run_ber_experiment(cfg);
    } else if (cfg.experiment == "rate") {
        run_rate(cfg);
    } else if (cfg.experiment == "psd") {
        run_psd(cfg);
    } else if (cfg.experiment == "sense") {
        run_sense(cfg);
    } else if (cfg.experiment == "equalize-bench") {
        run_bench(cfg);
    } else if (cfg.experiment == "modeling-error") {
        run_modeling_error(cfg);
    } else {
        throw ConfigError("experiment: unknown experiment '" + cfg.experiment + "'");
    }
    write_manifest(cfg);
}

}  // namespace otfsftn
