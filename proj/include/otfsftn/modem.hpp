#pragma once

#include "otfsftn/numeric.hpp"
#include "otfsftn/pulse.hpp"

namespace otfsftn {

// Full set of scalar system parameters. Frame time T = 1/delta_f is split
// into M FTN intervals Tf = T/M = alpha*T0, so the default delta_f pins
// T0 to one second.
struct SystemConfig {
    int M = 32;             // delay bins
    int N = 8;              // Doppler bins
    double delta_f = 0.0;   // subcarrier spacing (Hz); 0 selects T0 = 1
    int c = 8;              // half CP length in samples
    double alpha = 1.0;     // FTN packing ratio
    double beta = 0.25;     // RRC roll-off
    double sigma_x_sq = 1.0;
    double sigma0_sq = 0.0;
    int oversample = 16;    // waveform samples per Tf

    double T() const { return 1.0 / resolved_delta_f(); }
    double Tf() const { return T() / M; }
    double T0() const { return Tf() / alpha; }
    double resolved_delta_f() const {
        return delta_f > 0.0 ? delta_f : 1.0 / (static_cast<double>(M) * alpha);
    }
    long frame_len() const { return static_cast<long>(M) * N; }
    PulseConfig pulse() const { return PulseConfig{beta, T0(), alpha}; }
    void validate() const;
};

// M x N delay-Doppler symbol grid X. Storage is delay-major so that
// vec(X) interleaves the M delay bins of each Doppler slot. The Doppler
// by delay view Xt = X^T is what the pilot layout and estimator index.
struct DDFrame {
    CMat grid;  // M x N

    DDFrame() = default;
    explicit DDFrame(int M, int N) : grid(CMat::Zero(M, N)) {}

    CVec vec() const {
        return Eigen::Map<const CVec>(grid.data(), grid.size());
    }
    static DDFrame from_vec(const CVec& x, int M, int N) {
        DDFrame f;
        f.grid = Eigen::Map<const CMat>(x.data(), M, N);
        return f;
    }
    CMat transposed() const { return grid.transpose(); }  // N x M, [k][l]
};

// Reshape of a length-M*N vector into the N x M Doppler-by-delay grid.
CMat dd_grid_from_vec(const CVec& y, int M, int N);
CVec vec_from_dd_grid(const CMat& Yt);

struct Waveform {
    CVec samples;
    double start_time = 0.0;  // seconds
    double dt = 0.0;          // sample spacing, divides Tf exactly
};

// s = (F_N^H kron I_M) vec(X). Equals vec(F_M^H (F_M X F_N^H)); the two
// M-point transforms cancel and are never computed.
CVec modulate(const DDFrame& frame, const SystemConfig& cfg);

// a = [s; s_0 .. s_{2c-1}], the cyclic prefix appended to the end.
CVec add_cp(const CVec& s, int c);

// s(t) = sum_n a_n h_tx(t - n Tf) on the oversampled grid spanning
// [-pad*T0, (len(a)+pad_samples)*...]. Each translate is truncated to
// |t - n Tf| <= 2c Tf.
Waveform synthesize_waveform(const CVec& a, const SystemConfig& cfg, int pad_T0 = 100);

// Matched filter h_rx = h_tx by discrete convolution at the oversampled
// rate, then sampling z_k = z((k + c) Tf) for k = 0..MN-1.
CVec receive_front_end(const Waveform& received, const SystemConfig& cfg);

// The sampling window starts c intervals into the frame, so the received
// block is the transmitted one cyclically rotated by c (the end CP closes
// the wrap). This undoes the rotation, aligning delay bin l with the
// transmitted bin l as the DD-domain model expects.
CVec undo_cp_shift(const CVec& z, int c);

// Frame-aligned N x M received DD grid from the sampled block z.
CMat received_dd_grid(const CVec& z, const SystemConfig& cfg);

}  // namespace otfsftn
