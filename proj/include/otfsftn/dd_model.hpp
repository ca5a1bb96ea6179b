#pragma once

#include "otfsftn/channel.hpp"

namespace otfsftn {

// Closed-form DD-domain input-output model for the RRC-pulsed FTN chain.
// It is a local model: accurate on the pilot neighbourhood (small delay
// bins), used as the estimator's forward reference and checked against
// the time-domain pipeline there.
//
// All coefficients are expressed in the discrete unitary normalization of
// the modulate/propagate chain, i.e. the per-bin weight is g/N, so the
// model and the simulated pipeline share the same absolute scale.

// Doppler leakage kernel
//   rho(q, kappa) = (exp(j 2 pi kappa) - 1) / (exp(j 2 pi (q+kappa)/N) - 1)
// with the geometric-sum limit N when the denominator vanishes. Exactly
// N-periodic in q.
cplx rho(long q, double kappa, int N);

// Per-tap coupling coefficient gamma_i(k, l, q); the l < l_i branch covers
// the CP wrap of the previous Doppler slot.
cplx gamma_coeff(const ChannelTap& tap, int k, int l, int q, const SystemConfig& cfg);

// Predicted N x M received grid:
//   Yt[k,l] = sum_i sum_{q=-Ni..Ni} h_i e^{j 2 pi (l-l_i)(k_i+kappa_i)/MN}
//             gamma_i(k,l,q) Xt[[k-k_i+q]_N, [l-l_i]_M]
CMat predict_dd_output(const CMat& Xt, const ChannelRealization& ch, int Ni,
                       const SystemConfig& cfg);

// Cross ambiguity A(t, f) = integral h_rx*(t'-t) h_tx(t') e^{-j2pi f(t'-t)} dt'
// by quadrature at step Tf/32 over the truncated pulse support.
cplx cross_ambiguity(double offset_t, double offset_f, const PulseConfig& cfg,
                     double support, double step);

}  // namespace otfsftn
