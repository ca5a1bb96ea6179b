#include "otfsftn/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace otfsftn {

namespace {

// Splits nu (Hz) into integer bin and fractional remainder in (-1/2, 1/2].
void split_doppler(double nu_hz, const SystemConfig& cfg, int& k_int, double& k_frac) {
    const double bins = nu_hz * cfg.N * cfg.T();
    double k = std::floor(bins + 0.5);
    double frac = bins - k;
    if (frac <= -0.5) {  // keep the remainder in (-1/2, 1/2]
        k -= 1.0;
        frac += 1.0;
    }
    k_int = static_cast<int>(k);
    k_frac = frac;
}

}  // namespace

ChannelRealization random_channel(int P, int l_max, double nu_max_hz,
                                  const SystemConfig& cfg, Rng& rng) {
    if (P < 1) {
        throw std::invalid_argument("random_channel: P must be >= 1");
    }
    if (l_max > 2 * cfg.c - 1) {
        throw std::invalid_argument("random_channel: l_max must be <= 2c-1");
    }

    std::vector<int> delays;
    delays.reserve(P);
    delays.push_back(0);
    if (P - 1 <= l_max) {
        // Sample distinct delays from {1..l_max} by partial Fisher-Yates.
        std::vector<int> pool(l_max);
        for (int i = 0; i < l_max; ++i) pool[i] = i + 1;
        for (int i = 0; i < P - 1; ++i) {
            const int j = i + static_cast<int>(rng.next_u64() % (pool.size() - i));
            std::swap(pool[i], pool[j]);
            delays.push_back(pool[i]);
        }
    } else {
        for (int i = 0; i < P - 1; ++i) {
            delays.push_back(1 + static_cast<int>(rng.next_u64() % l_max));
        }
    }

    ChannelRealization ch;
    ch.taps.resize(P);
    for (int i = 0; i < P; ++i) {
        ChannelTap& tap = ch.taps[i];
        tap.gain = rng.cgaussian(1.0 / P);
        tap.delay_int = delays[static_cast<std::size_t>(i)];
        const double theta = rng.uniform(-kPi, kPi);
        split_doppler(nu_max_hz * std::cos(theta), cfg, tap.doppler_int, tap.doppler_frac);
    }
    return ch;
}

CMat build_effective_H(const ChannelRealization& ch, const SystemConfig& cfg) {
    const long n = cfg.frame_len() + 2 * cfg.c;
    const double MN = static_cast<double>(cfg.frame_len());
    const double Tf = cfg.Tf();
    const PulseConfig pulse = cfg.pulse();

    CMat H = CMat::Zero(n, n);
    for (const ChannelTap& tap : ch.taps) {
        const double nu_bins = tap.doppler_total();
        std::vector<double> g(static_cast<std::size_t>(4 * cfg.c) + 1);
        for (int d = -2 * cfg.c; d <= 2 * cfg.c; ++d) {
            g[static_cast<std::size_t>(d + 2 * cfg.c)] = rc_sample(d * Tf, pulse);
        }
        for (long k = 0; k < n; ++k) {
            const cplx phase = std::polar(1.0, kTwoPi * nu_bins * (k - tap.delay_int) / MN);
            const long m_lo = std::max<long>(0, k - tap.delay_int - 2 * cfg.c);
            const long m_hi = std::min<long>(n - 1, k - tap.delay_int + 2 * cfg.c);
            for (long m = m_lo; m <= m_hi; ++m) {
                const long d = k - m - tap.delay_int;
                H(k, m) += tap.gain * phase * g[static_cast<std::size_t>(d + 2 * cfg.c)];
            }
        }
    }
    return H;
}

CVec propagate(const CVec& s, const ChannelRealization& ch, const NoiseCorrelation& noise,
               const SystemConfig& cfg, Rng& rng) {
    const long MN = cfg.frame_len();
    if (s.size() != MN) {
        throw std::invalid_argument("propagate: s must have length M*N");
    }
    const int c = cfg.c;
    const long n = MN + 2 * c;
    const double Tf = cfg.Tf();
    const PulseConfig pulse = cfg.pulse();

    CVec a = add_cp(s, c);
    CVec full = CVec::Zero(n);
    for (const ChannelTap& tap : ch.taps) {
        const double nu_bins = tap.doppler_total();
        std::vector<double> g(static_cast<std::size_t>(4 * c) + 1);
        for (int d = -2 * c; d <= 2 * c; ++d) {
            g[static_cast<std::size_t>(d + 2 * c)] = rc_sample(d * Tf, pulse);
        }
        for (long k = 0; k < n; ++k) {
            cplx acc(0.0, 0.0);
            const long m_lo = std::max<long>(0, k - tap.delay_int - 2 * c);
            const long m_hi = std::min<long>(n - 1, k - tap.delay_int + 2 * c);
            for (long m = m_lo; m <= m_hi; ++m) {
                const long d = k - m - tap.delay_int;
                acc += a(m) * g[static_cast<std::size_t>(d + 2 * c)];
            }
            full(k) += tap.gain * std::polar(1.0, kTwoPi * nu_bins * (k - tap.delay_int) /
                                                      static_cast<double>(MN)) * acc;
        }
    }

    CVec z = full.segment(c, MN);
    if (noise.sigma0_sq > 0.0) {
        z += sample_colored_noise(noise.factor, rng);
    }
    return z;
}

Waveform propagate_waveform_oracle(const Waveform& wave, const ChannelRealization& ch,
                                   const SystemConfig& cfg) {
    const double Tf = cfg.Tf();
    Waveform out;
    out.start_time = wave.start_time;
    out.dt = wave.dt;
    out.samples = CVec::Zero(wave.samples.size());

    for (const ChannelTap& tap : ch.taps) {
        const double tau = tap.delay_int * Tf;
        const long shift = std::lround(tau / wave.dt);
        if (std::abs(shift * wave.dt - tau) > 1e-9 * Tf) {
            throw std::invalid_argument("waveform oracle: tap delay is off the sample grid");
        }
        const double nu = tap.doppler_total() / (cfg.N * cfg.T());
        for (Eigen::Index i = shift; i < out.samples.size(); ++i) {
            const double t = wave.start_time + i * wave.dt;
            out.samples(i) += tap.gain * std::polar(1.0, kTwoPi * nu * (t - tau)) *
                              wave.samples(i - shift);
        }
    }
    return out;
}

ChannelProfile load_channel_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("channel profile: cannot open " + path);
    }
    ChannelProfile profile;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) {
            continue;
        }
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        std::string gain_field;
        ChannelProfileRecord rec;
        if (!(ss >> gain_field >> rec.delay_bin >> rec.doppler_hz)) {
            throw std::runtime_error("channel profile: malformed record at " + path + ":" +
                                     std::to_string(line_no));
        }
        if (gain_field == "rayleigh") {
            rec.rayleigh = true;
        } else {
            rec.rayleigh = false;
            try {
                rec.gain_db = std::stod(gain_field);
            } catch (const std::exception&) {
                throw std::runtime_error("channel profile: bad gain field at " + path + ":" +
                                         std::to_string(line_no));
            }
        }
        if (rec.delay_bin < 0) {
            throw std::runtime_error("channel profile: negative delay at " + path + ":" +
                                     std::to_string(line_no));
        }
        profile.records.push_back(rec);
    }
    if (profile.records.empty()) {
        throw std::runtime_error("channel profile: no records in " + path);
    }
    return profile;
}

ChannelRealization realize_profile(const ChannelProfile& profile, const SystemConfig& cfg,
                                   Rng& rng) {
    ChannelRealization ch;
    const int P = static_cast<int>(profile.records.size());
    ch.taps.reserve(profile.records.size());
    for (const ChannelProfileRecord& rec : profile.records) {
        ChannelTap tap;
        if (rec.rayleigh) {
            tap.gain = rng.cgaussian(1.0 / P);
        } else {
            tap.gain = std::polar(std::pow(10.0, rec.gain_db / 20.0), rng.uniform(-kPi, kPi));
        }
        tap.delay_int = rec.delay_bin;
        split_doppler(rec.doppler_hz, cfg, tap.doppler_int, tap.doppler_frac);
        ch.taps.push_back(tap);
    }
    return ch;
}

}  // namespace otfsftn
