#include "otfsftn/modem.hpp"

#include <cmath>
#include <stdexcept>

namespace otfsftn {

void SystemConfig::validate() const {
    if (M < 2 || N < 2) {
        throw std::invalid_argument("config: M and N must be >= 2");
    }
    if (frame_len() <= 4L * c) {
        throw std::invalid_argument("config: M*N must exceed 4c");
    }
    if (c < 0) {
        throw std::invalid_argument("config: c must be >= 0");
    }
    if (sigma_x_sq < 0.0 || sigma0_sq < 0.0) {
        throw std::invalid_argument("config: powers must be >= 0");
    }
    if (oversample < 4) {
        throw std::invalid_argument("config: oversample must be >= 4");
    }
    pulse().validate();
}

CMat dd_grid_from_vec(const CVec& y, int M, int N) {
    if (y.size() != static_cast<Eigen::Index>(M) * N) {
        throw std::invalid_argument("dd grid: vector length must equal M*N");
    }
    // y_(l + M k) = Yt[k][l]
    return Eigen::Map<const CMat>(y.data(), M, N).transpose();
}

CVec vec_from_dd_grid(const CMat& Yt) {
    CMat X = Yt.transpose();
    return Eigen::Map<const CVec>(X.data(), X.size());
}

CVec modulate(const DDFrame& frame, const SystemConfig& cfg) {
    if (frame.grid.rows() != cfg.M || frame.grid.cols() != cfg.N) {
        throw std::invalid_argument("modulate: frame dimensions do not match config");
    }
    return dd_to_td(frame.vec(), cfg.M, cfg.N);
}

CVec undo_cp_shift(const CVec& z, int c) {
    const Eigen::Index n = z.size();
    if (2L * c > n) {
        throw std::invalid_argument("undo_cp_shift: 2c exceeds frame length");
    }
    CVec out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out(i) = z((i - c + n) % n);
    }
    return out;
}

CMat received_dd_grid(const CVec& z, const SystemConfig& cfg) {
    return dd_grid_from_vec(td_to_dd(undo_cp_shift(z, cfg.c), cfg.M, cfg.N), cfg.M, cfg.N);
}

CVec add_cp(const CVec& s, int c) {
    if (2L * c > s.size()) {
        throw std::invalid_argument("add_cp: 2c exceeds frame length");
    }
    CVec a(s.size() + 2 * c);
    a.head(s.size()) = s;
    a.tail(2 * c) = s.head(2 * c);
    return a;
}

Waveform synthesize_waveform(const CVec& a, const SystemConfig& cfg, int pad_T0) {
    cfg.validate();
    const PulseConfig pulse = cfg.pulse();
    const double Tf = cfg.Tf();
    const double dt = Tf / cfg.oversample;
    const double T0 = cfg.T0();
    const double t_begin = -pad_T0 * T0;
    const double t_end = (static_cast<double>(a.size()) + pad_T0) * T0;
    const long n_samples = static_cast<long>(std::llround((t_end - t_begin) / dt)) + 1;

    Waveform w;
    w.start_time = t_begin;
    w.dt = dt;
    w.samples = CVec::Zero(n_samples);

    const double half_support = 2.0 * cfg.c * Tf;
    for (Eigen::Index n = 0; n < a.size(); ++n) {
        if (a(n) == cplx(0.0, 0.0)) {
            continue;
        }
        const double center = n * Tf;
        const long i_lo = std::max<long>(0, static_cast<long>(std::ceil((center - half_support - t_begin) / dt)));
        const long i_hi = std::min<long>(n_samples - 1,
                                         static_cast<long>(std::floor((center + half_support - t_begin) / dt)));
        for (long i = i_lo; i <= i_hi; ++i) {
            const double t = t_begin + i * dt;
            w.samples(i) += a(n) * rrc_sample(t - center, pulse);
        }
    }
    return w;
}

CVec receive_front_end(const Waveform& received, const SystemConfig& cfg) {
    cfg.validate();
    const PulseConfig pulse = cfg.pulse();
    const double Tf = cfg.Tf();
    const double dt = received.dt;
    if (!(dt > 0.0)) {
        throw std::invalid_argument("receive: waveform has no sample spacing");
    }
    const long MN = cfg.frame_len();
    const double half_support = 2.0 * cfg.c * Tf;
    const long n = received.samples.size();

    const double t_first = (0 + cfg.c) * Tf;
    const double t_last = (MN - 1 + cfg.c) * Tf;
    if (received.start_time > t_first - half_support + 1e-12 ||
        received.start_time + (n - 1) * dt < t_last + half_support - 1e-12) {
        throw std::invalid_argument("receive: waveform span does not cover the frame");
    }

    CVec z(MN);
    for (long k = 0; k < MN; ++k) {
        const double t_k = (k + cfg.c) * Tf;
        const long i_lo = std::max<long>(0, static_cast<long>(std::ceil((t_k - half_support - received.start_time) / dt)));
        const long i_hi = std::min<long>(n - 1, static_cast<long>(std::floor((t_k + half_support - received.start_time) / dt)));
        cplx acc(0.0, 0.0);
        for (long i = i_lo; i <= i_hi; ++i) {
            const double t = received.start_time + i * dt;
            acc += received.samples(i) * rrc_sample(t - t_k, pulse);
        }
        z(k) = acc * dt;
    }
    return z;
}

}  // namespace otfsftn
