#pragma once

#include "otfsftn/numeric.hpp"

namespace otfsftn {

// Root-raised-cosine pulse family. T0 is the Nyquist interval and alpha
// the FTN packing ratio, so successive symbols are spaced Tf = alpha*T0.
struct PulseConfig {
    double beta = 0.25;
    double T0 = 1.0;
    double alpha = 1.0;

    double Tf() const { return alpha * T0; }
    void validate() const;
    // Inter-frame interference stays negligible for alpha >= 1/(1+beta).
    bool below_ifi_bound() const { return alpha < 1.0 / (1.0 + beta) - 1e-12; }
};

// Unit-energy RRC impulse response at time t. The removable singularities
// at t = 0 and t = +-T0/(4 beta) are evaluated by their analytic limits.
double rrc_sample(double t, const PulseConfig& cfg);

// Raised-cosine autocorrelation g(t) = (h_tx * h_rx(-t))(t) with g(0) = 1.
// Singularity at t = +-T0/(2 beta) handled analytically.
double rc_sample(double t, const PulseConfig& cfg);

// Matched-filter noise statistics of the FTN receiver, sampled at Tf.
//   G        Toeplitz autocorrelation, unit noise density, lags beyond 2c
//            clamped to zero
//   gc_col   first column of the circulant approximation Gc
//   Gd       sigma0_sq * (F_N kron I_M) G (F_N^H kron I_M)
//   whitener Gd^(-1/2)
//   factor   Hermitian square root of sigma0_sq * G, for noise synthesis
struct NoiseCorrelation {
    RMat G;
    RVec gc_col;
    CMat Gd;
    CMat whitener;
    CMat factor;
    double sigma0_sq = 0.0;

    RMat dense_Gc() const;

    // Same pulse geometry at a different noise density; the whitener and
    // factor scale analytically, so no new eigendecomposition is needed.
    NoiseCorrelation rescaled(double new_sigma0_sq) const;
};

NoiseCorrelation build_noise_correlation(const PulseConfig& cfg, int M, int N, int c,
                                         double sigma0_sq);

}  // namespace otfsftn
