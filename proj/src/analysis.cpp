#include "otfsftn/analysis.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace otfsftn {

double nmse_db(const CMat& estimate, const CMat& truth) {
    const double denom = truth.squaredNorm();
    if (!(denom > 0.0)) {
        throw std::invalid_argument("nmse: truth has zero norm");
    }
    const double ratio = (estimate - truth).squaredNorm() / denom;
    if (ratio <= 1e-12) {
        return -120.0;
    }
    return 10.0 * std::log10(ratio);
}

double nmse_db(const std::vector<ChannelTap>& estimate, const std::vector<ChannelTap>& truth,
               const SystemConfig& cfg) {
    ChannelRealization est_ch;
    est_ch.taps = estimate;
    ChannelRealization truth_ch;
    truth_ch.taps = truth;
    return nmse_db(build_effective_H(est_ch, cfg), build_effective_H(truth_ch, cfg));
}

InfoRateReport info_rate(const ChannelRealization& ch, const NoiseCorrelation& noise,
                         const SystemConfig& cfg) {
    cfg.validate();
    if (!(noise.sigma0_sq > 0.0)) {
        throw std::invalid_argument("info_rate: sigma0_sq must be positive");
    }
    const int M = cfg.M;
    const int N = cfg.N;
    const long MN = cfg.frame_len();

    const CMat Ht = build_Ht(ch, cfg);
    const SparseChannelMatrix Hs = build_sparse_H(ch.taps, cfg);
    const CMat W1 = build_W1(Hs, noise).dense();

    // W = Q^H Hs^H W1^{-1}; W1 is Hermitian positive definite.
    Eigen::LLT<CMat> llt(W1);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("info_rate: W1 factorization failed");
    }
    CMat Wmat = llt.solve(Hs.dense()).adjoint();  // Hs^H W1^{-1}
    td_to_dd_cols(Wmat, M, N);                    // left-multiply by Q^H

    // H_eff = W Ht Q: right-multiplication by Q via the adjoint identity.
    CMat H_eff = (Wmat * Ht).adjoint();
    td_to_dd_cols(H_eff, M, N);
    H_eff.adjointInPlace();

    const CMat Gz = Wmat * noise.G.cast<cplx>() * Wmat.adjoint();

    Eigen::SelfAdjointEigenSolver<CMat> eig_gz((Gz + Gz.adjoint()) * 0.5);
    if (eig_gz.info() != Eigen::Success) {
        throw std::runtime_error("info_rate: Gz eigendecomposition failed");
    }
    RVec lambda = eig_gz.eigenvalues();
    const double floor = 1e-12 * lambda.maxCoeff();
    if (!(floor > 0.0)) {
        throw std::runtime_error("info_rate: Gz has no positive spectrum");
    }
    RVec inv_sqrt(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        inv_sqrt(i) = 1.0 / std::sqrt(std::max(lambda(i), floor));
    }
    const CMat D0 = inv_sqrt.asDiagonal() * eig_gz.eigenvectors().adjoint() * H_eff;

    Eigen::SelfAdjointEigenSolver<CMat> eig_d(D0.adjoint() * D0);
    if (eig_d.info() != Eigen::Success) {
        throw std::runtime_error("info_rate: D0 eigendecomposition failed");
    }

    InfoRateReport rep;
    rep.xi = eig_d.eigenvalues().reverse();  // descending
    const double snr = cfg.sigma_x_sq / noise.sigma0_sq;
    double R = 0.0;
    for (Eigen::Index i = 0; i < rep.xi.size(); ++i) {
        if (!std::isfinite(rep.xi(i))) {
            throw std::runtime_error("info_rate: non-finite eigenvalue");
        }
        R += std::log2(1.0 + snr * std::max(rep.xi(i), 0.0));
    }
    rep.R_bits = R;
    rep.bandwidth_term = (1.0 + cfg.beta) / cfg.T0();
    rep.duration_term = static_cast<double>(MN) * cfg.alpha * cfg.T0();
    rep.R_N = R / (rep.bandwidth_term * rep.duration_term);
    return rep;
}

double transmission_rate(const std::vector<int>& bits_per_symbol, const SystemConfig& cfg,
                         double code_rate) {
    double sum = 0.0;
    for (int b : bits_per_symbol) {
        sum += b;
    }
    return code_rate * sum /
           ((1.0 + cfg.beta) * static_cast<double>(bits_per_symbol.size()) * cfg.alpha);
}

namespace {

// Wilson score interval for a binomial proportion, 95% coverage.
void wilson_interval(long errors, long total, double& lo, double& hi) {
    if (total <= 0) {
        lo = hi = 0.0;
        return;
    }
    const double z = 1.959963984540054;
    const double n = static_cast<double>(total);
    const double p = static_cast<double>(errors) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    lo = std::max(0.0, center - half);
    hi = std::min(1.0, center + half);
}

}  // namespace

void parallel_trials(long count, int workers, const std::function<void(long)>& fn) {
    if (count <= 0) {
        return;
    }
    workers = std::max(1, workers);
    if (workers == 1) {
        for (long i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<long> next(0);
    std::vector<std::thread> pool;
    std::exception_ptr error = nullptr;
    std::mutex error_mutex;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const long i = next.fetch_add(1);
                if (i >= count) {
                    return;
                }
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> guard(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                    return;
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

std::vector<BerPoint> run_ber(const SystemConfig& cfg, const BerOptions& opt,
                              const std::vector<double>& snr_db, long trials,
                              std::uint64_t seed) {
    cfg.validate();
    if (trials < 1) {
        throw std::invalid_argument("run_ber: trials must be >= 1");
    }
    if (opt.est_mode == CsiMode::FtnpEstimated && !opt.layout.has_value()) {
        throw std::invalid_argument("run_ber: FTNP estimation requires a pilot layout");
    }

    const int M = cfg.M;
    const int N = cfg.N;
    const int bps = bits_per_symbol(opt.constellation);
    const double sigma_x = std::sqrt(cfg.sigma_x_sq);

    // Data cells: everything outside the pilot guard when a layout is
    // present, the whole grid otherwise.
    std::vector<std::pair<int, int>> cells;
    if (opt.layout.has_value()) {
        opt.layout->validate(cfg);
        cells = pilot_data_cells(*opt.layout, cfg);
    } else {
        for (int k = 0; k < N; ++k) {
            for (int l = 0; l < M; ++l) {
                cells.emplace_back(k, l);
            }
        }
    }

    std::vector<BerPoint> points;
    for (std::size_t s_idx = 0; s_idx < snr_db.size(); ++s_idx) {
        SystemConfig point_cfg = cfg;
        point_cfg.sigma0_sq = cfg.sigma_x_sq / std::pow(10.0, snr_db[s_idx] / 10.0);
        const NoiseCorrelation noise =
            build_noise_correlation(point_cfg.pulse(), M, N, point_cfg.c, point_cfg.sigma0_sq);

        std::vector<long> errors(static_cast<std::size_t>(trials), 0);
        auto trial_fn = [&](long t) {
            Rng rng(seed_stream(seed, s_idx, static_cast<std::uint64_t>(t)));

            ChannelRealization ch;
            if (opt.profile.has_value()) {
                ch = realize_profile(*opt.profile, point_cfg, rng);
            } else {
                ch = random_channel(opt.P, opt.l_max, opt.nu_max_hz, point_cfg, rng);
            }

            std::vector<std::uint8_t> tx_bits(cells.size() * static_cast<std::size_t>(bps));
            for (auto& b : tx_bits) {
                b = static_cast<std::uint8_t>(rng.next_u64() & 1u);
            }
            const CVec data = map_bits(tx_bits, opt.constellation, sigma_x);

            DDFrame frame(M, N);
            if (opt.layout.has_value()) {
                std::vector<cplx> data_v(data.data(), data.data() + data.size());
                frame = build_pilot_frame(*opt.layout, data_v, point_cfg);
            } else {
                for (std::size_t i = 0; i < cells.size(); ++i) {
                    frame.grid(cells[i].second, cells[i].first) = data(static_cast<Eigen::Index>(i));
                }
            }

            const CVec s = modulate(frame, point_cfg);
            const CVec z = propagate(s, ch, noise, point_cfg, rng);

            // An empty estimate degrades gracefully: H_s = 0 makes the
            // equalizer output zero and the demapper guesses.
            std::vector<ChannelTap> taps;
            if (opt.est_mode == CsiMode::FtnpEstimated) {
                const CMat Ydd = received_dd_grid(z, point_cfg);
                taps = estimate_channel(Ydd, noise, *opt.layout, opt.est_cfg, point_cfg).taps;
            } else {
                taps = ch.taps;
            }

            const SparseChannelMatrix Hs = build_sparse_H(taps, point_cfg);
            const BandedHermitian W1 = opt.whitening
                                           ? build_W1(Hs, noise)
                                           : build_W1_unwhitened(Hs, point_cfg.sigma0_sq);
            const LuPartition part = lu_factorize(W1, point_cfg.c);
            const CVec x_hat = equalize(z, Hs, part, point_cfg);
            const CMat Yt = dd_grid_from_vec(x_hat, M, N);

            CVec data_hat(static_cast<Eigen::Index>(cells.size()));
            for (std::size_t i = 0; i < cells.size(); ++i) {
                data_hat(static_cast<Eigen::Index>(i)) = Yt(cells[i].first, cells[i].second);
            }
            const std::vector<std::uint8_t> rx_bits = demap(data_hat, opt.constellation, sigma_x);
            long err = 0;
            for (std::size_t i = 0; i < tx_bits.size(); ++i) {
                err += (tx_bits[i] != rx_bits[i]) ? 1 : 0;
            }
            errors[static_cast<std::size_t>(t)] = err;
        };
        parallel_trials(trials, opt.workers, trial_fn);

        BerPoint point;
        point.snr_db = snr_db[s_idx];
        point.trials = trials;
        point.bits = trials * static_cast<long>(cells.size()) * bps;
        for (long e : errors) {
            point.bit_errors += e;
        }
        point.ber = point.bits > 0 ? static_cast<double>(point.bit_errors) / point.bits : 0.0;
        wilson_interval(point.bit_errors, point.bits, point.ci_low, point.ci_high);
        points.push_back(point);
    }
    return points;
}

PsdResult psd(const std::vector<Waveform>& frames, int segment_len) {
    if (frames.empty()) {
        throw std::invalid_argument("psd: no frames");
    }
    if (segment_len < 8) {
        throw std::invalid_argument("psd: segment length too small");
    }
    const double dt = frames.front().dt;
    for (const Waveform& w : frames) {
        if (std::abs(w.dt - dt) > 1e-15) {
            throw std::invalid_argument("psd: frames must share the sample spacing");
        }
    }

    RVec window(segment_len);
    for (int i = 0; i < segment_len; ++i) {
        window(i) = 0.5 * (1.0 - std::cos(kTwoPi * i / (segment_len - 1)));
    }

    RVec acc = RVec::Zero(segment_len);
    long n_segments = 0;
    const int hop = segment_len / 2;
    CVec seg(segment_len);
    for (const Waveform& w : frames) {
        const long n = w.samples.size();
        for (long start = 0; start + segment_len <= n; start += hop) {
            for (int i = 0; i < segment_len; ++i) {
                seg(i) = w.samples(start + i) * window(i);
            }
            CVec spec = td_to_dd(seg, 1, segment_len);  // plain length-L FFT
            acc += spec.cwiseAbs2();
            ++n_segments;
        }
    }
    if (n_segments == 0) {
        throw std::invalid_argument("psd: frames shorter than one segment");
    }
    acc /= static_cast<double>(n_segments);

    // Shift to [-fs/2, fs/2) and normalize the peak to 0 dB.
    PsdResult out;
    out.freq_hz = RVec(segment_len);
    out.psd_db = RVec(segment_len);
    const double fs = 1.0 / dt;
    const double peak = acc.maxCoeff();
    for (int i = 0; i < segment_len; ++i) {
        const int src = (i + segment_len / 2) % segment_len;
        const double f = (static_cast<double>(i) - segment_len / 2) * fs / segment_len;
        out.freq_hz(i) = f;
        out.psd_db(i) = 10.0 * std::log10(std::max(acc(src) / peak, 1e-30));
    }
    return out;
}

SensingReport sense_targets(const EstimatedChannel& est, double f_c_hz, double theta_rad,
                            const SystemConfig& cfg) {
    const double cos_theta = std::cos(theta_rad);
    if (std::abs(cos_theta) < 1e-12) {
        throw std::invalid_argument("sense_targets: aspect angle too close to +-pi/2");
    }
    if (!(f_c_hz > 0.0)) {
        throw std::invalid_argument("sense_targets: carrier frequency must be positive");
    }
    constexpr double c_l = 299792458.0;

    SensingReport rep;
    rep.f_c_hz = f_c_hz;
    rep.theta_rad = theta_rad;
    for (const ChannelTap& tap : est.taps) {
        const double tau = tap.delay_int * cfg.Tf();
        const double nu = tap.doppler_total() / (cfg.N * cfg.T());
        SensingTarget t;
        t.range_m = c_l * tau / 2.0;
        t.velocity_mps = c_l * nu / (f_c_hz * cos_theta);
        rep.targets.push_back(t);
    }
    return rep;
}

ModelingErrors modeling_errors(const ChannelRealization& ch, const NoiseCorrelation& noise,
                               const SystemConfig& cfg) {
    const CMat Ht = build_Ht(ch, cfg);
    const SparseChannelMatrix Hs = build_sparse_H(ch.taps, cfg);

    ModelingErrors out;
    out.eps0 = (Ht - Hs.dense()).squaredNorm();

    const CMat Wt = Ht * Ht.adjoint() + noise.sigma0_sq * noise.G.cast<cplx>();
    const CMat W1 = build_W1(Hs, noise).dense();
    out.eps1 = (Wt - W1).squaredNorm();
    out.eps1_rel = out.eps1 / Wt.squaredNorm();
    return out;
}

}  // namespace otfsftn
