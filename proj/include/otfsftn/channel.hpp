#pragma once

#include <string>
#include <vector>

#include "otfsftn/modem.hpp"

namespace otfsftn {

// One propagation path. The Doppler shift splits into an integer bin
// doppler_int and a fractional remainder doppler_frac in (-1/2, 1/2].
struct ChannelTap {
    cplx gain;
    int delay_int = 0;
    int doppler_int = 0;
    double doppler_frac = 0.0;

    double doppler_total() const { return doppler_int + doppler_frac; }
};

struct ChannelRealization {
    std::vector<ChannelTap> taps;

    int P() const { return static_cast<int>(taps.size()); }
};

// Jakes-style random channel: gains CN(0, 1/P), Doppler nu_max*cos(theta)
// with theta uniform, first tap at delay 0 and the rest drawn without
// replacement from {1..l_max} when possible.
ChannelRealization random_channel(int P, int l_max, double nu_max_hz,
                                  const SystemConfig& cfg, Rng& rng);

// Effective (MN+2c) x (MN+2c) channel matrix:
//   H[k,m] = sum_i h_i exp(j 2 pi (k_i+kappa_i)(k-l_i)/MN) g((k-m-l_i) Tf)
// with zero-based indices and g truncated to |k-m-l_i| <= 2c.
CMat build_effective_H(const ChannelRealization& ch, const SystemConfig& cfg);

// z = R_cp H A_cp s + eta. The channel action is evaluated tap-wise over
// the truncated g band, identical to multiplying by build_effective_H.
// Noise is drawn from noise.factor when sigma0_sq > 0.
CVec propagate(const CVec& s, const ChannelRealization& ch, const NoiseCorrelation& noise,
               const SystemConfig& cfg, Rng& rng);

// Noiseless continuous-time reference path, used for cross validation and
// PSD only: applies sum_i h_i exp(j 2 pi nu_i (t - tau_i)) s(t - tau_i)
// sample-exactly on the oversampled grid (tau_i = l_i Tf).
Waveform propagate_waveform_oracle(const Waveform& wave, const ChannelRealization& ch,
                                   const SystemConfig& cfg);

// Text channel profiles, one record per line:
//   <gain_db | rayleigh>, <delay_bin>, <doppler_hz>
// '#' starts a comment. rayleigh taps draw CN(0, 1/P) gains per frame;
// fixed-gain taps keep |h| = 10^(db/20) with a random phase.
struct ChannelProfileRecord {
    bool rayleigh = true;
    double gain_db = 0.0;
    int delay_bin = 0;
    double doppler_hz = 0.0;
};

struct ChannelProfile {
    std::vector<ChannelProfileRecord> records;
};

ChannelProfile load_channel_profile(const std::string& path);
ChannelRealization realize_profile(const ChannelProfile& profile, const SystemConfig& cfg,
                                   Rng& rng);

}  // namespace otfsftn
