#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "otfsftn/equalizer.hpp"
#include "otfsftn/estimator.hpp"

namespace otfsftn {

// 10 log10(|est - truth|_F^2 / |truth|_F^2) over reconstructed effective
// channel matrices, floored at -120 dB.
double nmse_db(const CMat& estimate, const CMat& truth);
double nmse_db(const std::vector<ChannelTap>& estimate, const std::vector<ChannelTap>& truth,
               const SystemConfig& cfg);

struct InfoRateReport {
    RVec xi;               // eigenvalues, descending
    double R_bits = 0.0;   // bits per frame
    double R_N = 0.0;      // bits/s/Hz
    double bandwidth_term = 0.0;  // 2W(1+beta)
    double duration_term = 0.0;   // M N alpha T0
};

// Achievable information rate under the reduced LMMSE receiver weight:
// builds W = Q^H Hs^H W1^{-1}, H_eff = W Ht Q, Gz = W G W^H, then
// R = sum log2(1 + sigma_x^2 xi_i / sigma0^2) from the whitened spectrum.
InfoRateReport info_rate(const ChannelRealization& ch, const NoiseCorrelation& noise,
                         const SystemConfig& cfg);

// R_t = code_rate * sum(b_n) / ((1+beta) M N alpha); bits_per_symbol has
// one entry per frame symbol.
double transmission_rate(const std::vector<int>& bits_per_symbol, const SystemConfig& cfg,
                         double code_rate);

enum class CsiMode { PerfectCsi, FtnpEstimated };

struct BerOptions {
    Constellation constellation = Constellation::QPSK;
    CsiMode est_mode = CsiMode::PerfectCsi;
    bool whitening = true;           // Gc in W1 when true, identity when false
    int P = 1;
    int l_max = 0;
    double nu_max_hz = 0.0;
    std::optional<PilotLayout> layout;  // required for FtnpEstimated
    EstimatorConfig est_cfg;
    std::optional<ChannelProfile> profile;  // overrides the random channel
    int workers = 1;
};

struct BerPoint {
    double snr_db = 0.0;
    double ber = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    long bit_errors = 0;
    long bits = 0;
    long trials = 0;
};

// Monte Carlo frame -> channel -> equalize -> demap loop. Pilot and guard
// cells never count towards the BER. Per-trial streams are derived from
// (seed, snr index, trial) so results do not depend on scheduling.
std::vector<BerPoint> run_ber(const SystemConfig& cfg, const BerOptions& opt,
                              const std::vector<double>& snr_db, long trials,
                              std::uint64_t seed);

struct PsdResult {
    RVec freq_hz;
    RVec psd_db;  // normalized to 0 dB peak
};

// Welch periodogram averaged over the supplied frames: Hann window, 50%
// overlap. All frames must share the sample spacing.
PsdResult psd(const std::vector<Waveform>& frames, int segment_len);

struct SensingTarget {
    double range_m = 0.0;
    double velocity_mps = 0.0;
};

struct SensingReport {
    std::vector<SensingTarget> targets;
    double f_c_hz = 0.0;
    double theta_rad = 0.0;
};

// Maps estimated delay/Doppler bins to monostatic range and radial
// velocity: r = c_l tau / 2, u = c_l nu / (f_c cos theta).
SensingReport sense_targets(const EstimatedChannel& est, double f_c_hz, double theta_rad,
                            const SystemConfig& cfg);

struct ModelingErrors {
    double eps0 = 0.0;  // |Ht - Hs|_F^2
    double eps1 = 0.0;  // |(Ht Ht^H + sigma0^2 G) - W1|_F^2
    double eps1_rel = 0.0;  // eps1 / |Ht Ht^H + sigma0^2 G|_F^2
};

ModelingErrors modeling_errors(const ChannelRealization& ch, const NoiseCorrelation& noise,
                               const SystemConfig& cfg);

// Deterministic worker-pool map over trial indices; fn(i) runs exactly
// once per index and results merge by index order regardless of the
// worker count.
void parallel_trials(long count, int workers, const std::function<void(long)>& fn);

}  // namespace otfsftn
