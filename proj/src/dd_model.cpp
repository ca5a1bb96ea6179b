#include "otfsftn/dd_model.hpp"

#include <cmath>
#include <stdexcept>

namespace otfsftn {

cplx rho(long q, double kappa, int N) {
    if (N < 1) {
        throw std::invalid_argument("rho: N must be >= 1");
    }
    const long q_mod = ((q % N) + N) % N;
    const cplx num = std::polar(1.0, kTwoPi * kappa) - 1.0;
    const cplx den = std::polar(1.0, kTwoPi * (q_mod + kappa) / N) - 1.0;
    if (std::abs(den) < 1e-12) {
        return cplx(static_cast<double>(N), 0.0);
    }
    return num / den;
}

cplx gamma_coeff(const ChannelTap& tap, int k, int l, int q, const SystemConfig& cfg) {
    if (l < 0 || l >= cfg.M) {
        throw std::invalid_argument("gamma: l out of range");
    }
    const PulseConfig pulse = cfg.pulse();
    const double Tf = cfg.Tf();
    const double inv_N = 1.0 / cfg.N;
    const cplx r = rho(q, tap.doppler_frac, cfg.N);
    // g is taken as zero beyond lag 2c, matching the channel band.
    auto g_trunc = [&](int lag) {
        return std::abs(lag) <= 2 * cfg.c ? rc_sample(lag * Tf, pulse) : 0.0;
    };

    if (l >= tap.delay_int) {
        return inv_N * g_trunc(l - tap.delay_int) * r;
    }
    const long shifted = ((static_cast<long>(k) - tap.doppler_int + q) % cfg.N + cfg.N) % cfg.N;
    const cplx wrap_phase = std::polar(1.0, -kTwoPi * static_cast<double>(shifted) / cfg.N);
    return inv_N * g_trunc(l - tap.delay_int + cfg.M) * (r - 1.0) * wrap_phase;
}

CMat predict_dd_output(const CMat& Xt, const ChannelRealization& ch, int Ni,
                       const SystemConfig& cfg) {
    if (Xt.rows() != cfg.N || Xt.cols() != cfg.M) {
        throw std::invalid_argument("predict_dd_output: Xt must be N x M");
    }
    if (Ni < 1) {
        throw std::invalid_argument("predict_dd_output: Ni must be >= 1");
    }
    const int M = cfg.M;
    const int N = cfg.N;
    const double MN = static_cast<double>(cfg.frame_len());

    CMat Yt = CMat::Zero(N, M);
    for (const ChannelTap& tap : ch.taps) {
        for (int l = 0; l < M; ++l) {
            const int l_src = ((l - tap.delay_int) % M + M) % M;
            const cplx delay_phase =
                std::polar(1.0, kTwoPi * (l - tap.delay_int) * tap.doppler_total() / MN);
            for (int k = 0; k < N; ++k) {
                cplx acc(0.0, 0.0);
                for (int q = -Ni; q <= Ni; ++q) {
                    const int k_src = ((k - tap.doppler_int + q) % N + N) % N;
                    const cplx x = Xt(k_src, l_src);
                    if (x == cplx(0.0, 0.0)) {
                        continue;
                    }
                    acc += gamma_coeff(tap, k, l, q, cfg) * x;
                }
                Yt(k, l) += tap.gain * delay_phase * acc;
            }
        }
    }
    return Yt;
}

cplx cross_ambiguity(double offset_t, double offset_f, const PulseConfig& cfg,
                     double support, double step) {
    if (!(step > 0.0) || !(support > 0.0)) {
        throw std::invalid_argument("cross_ambiguity: bad quadrature parameters");
    }
    // Integrand support: h_tx lives on [-support, support], the shifted
    // h_rx on [offset_t - support, offset_t + support].
    const double lo = std::min(-support, offset_t - support);
    const double hi = std::max(support, offset_t + support);
    cplx acc(0.0, 0.0);
    const long n = static_cast<long>(std::ceil((hi - lo) / step));
    for (long i = 0; i <= n; ++i) {
        const double t = lo + i * step;
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;  // trapezoid ends
        acc += w * rrc_sample(t - offset_t, cfg) * rrc_sample(t, cfg) *
               std::polar(1.0, -kTwoPi * offset_f * (t - offset_t));
    }
    return acc * step;
}

}  // namespace otfsftn
