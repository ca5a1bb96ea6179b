#pragma once

#include <string>
#include <vector>

#include "otfsftn/channel.hpp"

namespace otfsftn {

// Embedded FTN pilot geometry on the Doppler-by-delay grid Xt. The pilot
// sits at (k0, l0) with amplitude sqrt(Ep); a zero guard covers
// [k0-Ng, k0+Ng] x [l0-l_max, l0+l_max]. The delay guard may wrap around
// column 0; the Doppler guard must fit without wrapping.
struct PilotLayout {
    int k0 = 0;
    int l0 = 0;
    int Ng = 0;      // Doppler guard half width, Ng >= 2*k_max
    int l_max = 0;   // delay guard width and detection span
    int k_max = 0;   // Doppler search half width
    double Ep = 1.0; // pilot power

    void validate(const SystemConfig& cfg) const;
    bool in_guard(int k, int l, const SystemConfig& cfg) const;
};

struct EstimatorConfig {
    double p_fa = 0.01;
    double kappa_step = 0.01;
    double threshold = 0.0;  // 0 selects detection_threshold(p_fa)

    // Steps 3 and 4 invert the pilot's Doppler leakage. The end-appended
    // CP delays the wrapped slot by one frame, which multiplies the slot-0
    // contribution of every window column (l < c) by exp(j 2 pi kappa);
    // the pipeline-consistent kernel is therefore rho(q,kappa) +
    // exp(j 2 pi kappa) - 1 rather than the ideal-cyclic rho alone.
    // Disabling this reverts to the ideal kernel, whose gain estimates are
    // biased by about |exp(j 2 pi kappa) - 1| / N.
    bool cp_aware_kernel = true;

    void validate() const;
};

// Estimated taps reuse the ChannelTap layout so the equalizer consumes
// them through the same build path as ground truth.
struct EstimatedChannel {
    std::vector<ChannelTap> taps;
    int dropped = 0;  // candidates discarded on degenerate ratio bins

    int P_hat() const { return static_cast<int>(taps.size()); }
};

// Places the pilot and guard, then fills the remaining cells with the
// supplied data symbols in scan order (k rows, then l columns of Xt).
DDFrame build_pilot_frame(const PilotLayout& layout, const std::vector<cplx>& data,
                          const SystemConfig& cfg);

// Deterministic list of data-cell coordinates (k, l) in placement order.
std::vector<std::pair<int, int>> pilot_data_cells(const PilotLayout& layout,
                                                  const SystemConfig& cfg);

// T = 1 + sqrt(2) Qinv(p_fa) for the whitened power statistic.
double detection_threshold(double p_fa);

// Four-step DD-domain estimator: threshold detection on the whitened grid
// (delay), per-column argmax (integer Doppler), leakage-ratio grid search
// (fractional Doppler), pilot-referenced division (gain). Ydd is the
// unwhitened N x M received grid.
EstimatedChannel estimate_channel(const CMat& Ydd, const NoiseCorrelation& noise,
                                  const PilotLayout& layout, const EstimatorConfig& est_cfg,
                                  const SystemConfig& cfg);

// One row per detected tap: l_hat, k_hat, kappa_hat, re_h, im_h.
void write_tap_csv(const EstimatedChannel& est, const std::string& path);

}  // namespace otfsftn
