#include "otfsftn/estimator.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "otfsftn/dd_model.hpp"

namespace otfsftn {

void PilotLayout::validate(const SystemConfig& cfg) const {
    if (k0 < 0 || k0 >= cfg.N || l0 < 0 || l0 >= cfg.M) {
        throw std::invalid_argument("pilot layout: pilot position outside grid");
    }
    if (Ng < 0 || l_max < 0 || k_max < 0) {
        throw std::invalid_argument("pilot layout: negative guard sizes");
    }
    if (Ng < 2 * k_max) {
        throw std::invalid_argument("pilot layout: Ng must be >= 2*k_max");
    }
    if (2 * l_max + 1 > cfg.M) {
        throw std::invalid_argument("pilot layout: delay guard exceeds grid");
    }
    if (l0 + l_max >= cfg.M) {
        throw std::invalid_argument("pilot layout: detection window exceeds grid");
    }
    if (!(Ep > 0.0)) {
        throw std::invalid_argument("pilot layout: Ep must be positive");
    }
}

bool PilotLayout::in_guard(int k, int l, const SystemConfig& cfg) const {
    // Both guard spans are cyclic. Small grids (2 Ng + 1 >= N) zero the
    // whole Doppler axis of the guarded columns, which is what keeps data
    // leakage out of the detection window when N is only a few bins.
    const int dk = ((k - k0) % cfg.N + cfg.N) % cfg.N;
    if (dk > Ng && dk < cfg.N - Ng) {
        return false;
    }
    const int d = ((l - l0) % cfg.M + cfg.M) % cfg.M;
    return d <= l_max || d >= cfg.M - l_max;
}

void EstimatorConfig::validate() const {
    if (!(p_fa > 0.0 && p_fa < 0.5)) {
        throw std::invalid_argument("estimator: p_fa must lie in (0, 0.5)");
    }
    if (!(kappa_step > 0.0 && kappa_step <= 0.1)) {
        throw std::invalid_argument("estimator: kappa_step must lie in (0, 0.1]");
    }
}

std::vector<std::pair<int, int>> pilot_data_cells(const PilotLayout& layout,
                                                  const SystemConfig& cfg) {
    std::vector<std::pair<int, int>> cells;
    cells.reserve(static_cast<std::size_t>(cfg.frame_len()));
    for (int k = 0; k < cfg.N; ++k) {
        for (int l = 0; l < cfg.M; ++l) {
            if (!layout.in_guard(k, l, cfg)) {
                cells.emplace_back(k, l);
            }
        }
    }
    return cells;
}

DDFrame build_pilot_frame(const PilotLayout& layout, const std::vector<cplx>& data,
                          const SystemConfig& cfg) {
    layout.validate(cfg);
    const auto cells = pilot_data_cells(layout, cfg);
    if (data.size() < cells.size()) {
        throw std::invalid_argument("pilot frame: not enough data symbols for the frame");
    }
    DDFrame frame(cfg.M, cfg.N);
    // grid is X (M x N); Xt[k][l] = X(l, k)
    frame.grid(layout.l0, layout.k0) = std::sqrt(layout.Ep);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        frame.grid(cells[i].second, cells[i].first) = data[i];
    }
    return frame;
}

double detection_threshold(double p_fa) {
    if (!(p_fa > 0.0 && p_fa < 0.5)) {
        throw std::invalid_argument("detection_threshold: p_fa must lie in (0, 0.5)");
    }
    // Qinv(p) = sqrt(2) * erfc_inv(2p)
    return 1.0 + 2.0 * boost::math::erfc_inv(2.0 * p_fa);
}

namespace {

struct Candidate {
    int k;  // absolute Doppler row of the whitened peak
    int l;  // absolute delay column
    double stat;
};

}  // namespace

EstimatedChannel estimate_channel(const CMat& Ydd, const NoiseCorrelation& noise,
                                  const PilotLayout& layout, const EstimatorConfig& est_cfg,
                                  const SystemConfig& cfg) {
    layout.validate(cfg);
    est_cfg.validate();
    if (Ydd.rows() != cfg.N || Ydd.cols() != cfg.M) {
        throw std::invalid_argument("estimate_channel: Ydd must be N x M");
    }
    if (noise.whitener.rows() != cfg.frame_len()) {
        throw std::invalid_argument("estimate_channel: noise correlation size mismatch");
    }

    const int M = cfg.M;
    const int N = cfg.N;
    const double threshold =
        est_cfg.threshold > 0.0 ? est_cfg.threshold : detection_threshold(est_cfg.p_fa);

    // Step 1: threshold detection on the whitened grid, one candidate per
    // Doppler-axis local maximum.
    const CVec y_w = noise.whitener * vec_from_dd_grid(Ydd);
    const CMat Yw = dd_grid_from_vec(y_w, M, N);

    // Distinct window rows at cyclic Doppler distance <= Ng of k0; the
    // guard may cover the whole axis on small grids.
    std::vector<int> window_rows;
    for (int dk = -layout.Ng; dk <= layout.Ng; ++dk) {
        const int row = ((layout.k0 + dk) % N + N) % N;
        if (std::find(window_rows.begin(), window_rows.end(), row) == window_rows.end()) {
            window_rows.push_back(row);
        }
    }
    std::sort(window_rows.begin(), window_rows.end());

    std::vector<Candidate> candidates;
    for (int l = layout.l0; l <= layout.l0 + layout.l_max; ++l) {
        for (int k : window_rows) {
            const double stat = std::norm(Yw(k, l));
            if (stat <= threshold) {
                continue;
            }
            const double left = std::norm(Yw((k - 1 + N) % N, l));
            const double right = std::norm(Yw((k + 1) % N, l));
            if (stat > left && stat >= right) {
                candidates.push_back({k, l, stat});
            }
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.stat != b.stat) return a.stat > b.stat;
        if (a.l != b.l) return a.l < b.l;
        return a.k < b.k;
    });

    // Fractional-Doppler search grid over (-1/2, 1/2].
    const int n_kappa = std::max(1, static_cast<int>(std::lround(1.0 / est_cfg.kappa_step)));
    std::vector<double> kappa_grid(static_cast<std::size_t>(n_kappa));
    for (int j = 1; j <= n_kappa; ++j) {
        kappa_grid[static_cast<std::size_t>(j - 1)] = -0.5 + j * (1.0 / n_kappa);
    }

    const double g_l0 = rc_sample(layout.l0 * cfg.Tf(), cfg.pulse());
    const double pilot_amp = std::sqrt(layout.Ep);
    const double peak_floor = 1e-12 * Ydd.cwiseAbs().maxCoeff();

    EstimatedChannel est;
    std::vector<std::vector<int>> claimed(static_cast<std::size_t>(M));
    for (const Candidate& cand : candidates) {
        // Step 2: integer Doppler by per-column argmax over unclaimed bins.
        auto& col_claims = claimed[static_cast<std::size_t>(cand.l)];
        int k_hat = 0;
        double best = -1.0;
        bool found = false;
        for (int k = -layout.k_max; k <= layout.k_max; ++k) {
            const int row = ((layout.k0 + k) % N + N) % N;
            if (std::find(col_claims.begin(), col_claims.end(), row) != col_claims.end()) {
                continue;
            }
            const double mag = std::norm(Ydd(row, cand.l));
            if (mag > best) {
                best = mag;
                k_hat = k;
                found = true;
            }
        }
        if (!found) {
            continue;  // column exhausted by stronger candidates
        }
        const int peak_row = ((layout.k0 + k_hat) % N + N) % N;
        col_claims.push_back(peak_row);

        const cplx peak = Ydd(peak_row, cand.l);
        if (std::abs(peak) < peak_floor) {
            ++est.dropped;
            continue;
        }

        // Step 3: fractional Doppler from the leakage ratio of the two bins
        // below the peak. The ratio is evaluated peak-normalized so the
        // kappa = 0 case (zero side bin) stays well defined.
        const cplx side = Ydd((peak_row - 1 + N) % N, cand.l);
        const cplx measured = side / peak;
        auto kernel = [&](int q, double kappa) {
            cplx v = rho(q, kappa, N);
            if (est_cfg.cp_aware_kernel) {
                v += std::polar(1.0, kTwoPi * kappa) - 1.0;
            }
            return v;
        };
        double kappa_hat = 0.0;
        double best_err = std::numeric_limits<double>::infinity();
        for (double kappa : kappa_grid) {
            const cplx model = kernel(1, kappa) / kernel(0, kappa);
            const double err = std::norm(measured - model);
            if (err < best_err) {
                best_err = err;
                kappa_hat = kappa;
            }
        }

        // Step 4: gain from the pilot-referenced peak value.
        const cplx denom = pilot_amp * (1.0 / N) *
                           std::polar(1.0, kTwoPi * layout.l0 * (k_hat + kappa_hat) /
                                               static_cast<double>(cfg.frame_len())) *
                           g_l0 * kernel(0, kappa_hat);
        if (std::abs(denom) < 1e-300) {
            ++est.dropped;
            continue;
        }

        ChannelTap tap;
        tap.gain = peak / denom;
        tap.delay_int = cand.l - layout.l0;
        tap.doppler_int = k_hat;
        tap.doppler_frac = kappa_hat;
        est.taps.push_back(tap);
    }

    // Deterministic report order: by delay, then Doppler.
    std::stable_sort(est.taps.begin(), est.taps.end(), [](const ChannelTap& a, const ChannelTap& b) {
        if (a.delay_int != b.delay_int) return a.delay_int < b.delay_int;
        return a.doppler_int < b.doppler_int;
    });
    return est;
}

void write_tap_csv(const EstimatedChannel& est, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("tap csv: cannot open " + path);
    }
    out << "l_hat,k_hat,kappa_hat,re_h,im_h\n";
    char line[160];
    for (const ChannelTap& tap : est.taps) {
        std::snprintf(line, sizeof(line), "%d,%d,%.6f,%.12g,%.12g\n", tap.delay_int,
                      tap.doppler_int, tap.doppler_frac, tap.gain.real(), tap.gain.imag());
        out << line;
    }
}

}  // namespace otfsftn
