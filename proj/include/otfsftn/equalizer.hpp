#pragma once

#include <string>
#include <vector>

#include "otfsftn/channel.hpp"

namespace otfsftn {

// Sparse FTN-ISI channel model H_s. Row r holds the 2c+1 band values
// starting at column r (zero based), wrapping cyclically for the last 2c
// rows:
//   H_s(r, (r+j) mod MN) = sum_i h_i e^{j2pi(k_i+kappa_i)(r+c-l_i)/MN}
//                          g((j-c+l_i) Tf),  j = 0..2c
// g is treated as zero beyond lag 2c, matching the effective channel.
struct SparseChannelMatrix {
    int n = 0;  // MN
    int c = 0;
    CMat band;  // n x (2c+1)

    CVec apply(const CVec& s) const;          // H_s * s
    CVec apply_adjoint(const CVec& w) const;  // H_s^H * w
    CMat dense() const;
    long nonzeros() const { return static_cast<long>(n) * (2 * c + 1); }
};

SparseChannelMatrix build_sparse_H(const std::vector<ChannelTap>& taps,
                                   const SystemConfig& cfg);

// W1 = H_s H_s^H + sigma0_sq Gc. Hermitian and cyclically banded with
// half-width 2c; stored as the cyclic upper band.
struct BandedHermitian {
    int n = 0;
    int c = 0;       // half-bandwidth is 2c
    CMat upper;      // n x (2c+1): upper(r, d) = W1(r, (r+d) mod n)

    CMat dense() const;
};

BandedHermitian build_W1(const SparseChannelMatrix& Hs, const NoiseCorrelation& noise);

// Variant with Gc replaced by the identity; models a receiver that
// ignores the FTN noise colouring.
BandedHermitian build_W1_unwhitened(const SparseChannelMatrix& Hs, double sigma0_sq);

// Block LU factors of W1 (leading banded block R plus the 2c wrap
// columns/rows):
//   W1 = [R A; B C] = [L_R 0; D E] [U_R J; 0 K]
// L_R and E carry unit diagonals.
struct LuPartition {
    int n = 0;
    int c = 0;
    CMat L_band;  // (n-2c) x 2c: L_band(i, d-1) = L_R(i, i-d)
    CMat U_band;  // (n-2c) x (2c+1): U_band(i, d) = U_R(i, i+d)
    CMat J;       // (n-2c) x 2c
    CMat D;       // 2c x (n-2c)
    CMat E;       // 2c x 2c unit lower
    CMat K;       // 2c x 2c upper
};

// Banded LU without pivoting (valid: W1 is Hermitian positive definite
// for sigma0_sq > 0). Throws on pivots below 1e-12 of the diagonal scale,
// reporting the row.
LuPartition lu_factorize(const BandedHermitian& W1, int c);

// W2 = L^{-1} z by the three-phase forward loop (ramp, steady band,
// dense tail rows).
CVec forward_substitute(const LuPartition& part, const CVec& z);

// W3 = U^{-1} W2, wrap columns included in the main loop.
CVec backward_substitute(const LuPartition& part, const CVec& w2);

// x_hat = Q^H H_s^H U^{-1} L^{-1} z. Factorizes W1 internally; use the
// partition overload to reuse factors across solves.
CVec equalize(const CVec& z, const SparseChannelMatrix& Hs, const NoiseCorrelation& noise,
              const SystemConfig& cfg);
CVec equalize(const CVec& z, const SparseChannelMatrix& Hs, const LuPartition& part,
              const SystemConfig& cfg);

// Full-complexity reference: x_hat = Q^H Ht^H (Ht Ht^H + sigma0_sq G)^{-1} z
// with dense Ht = R_cp H A_cp. Desk-scale oracle, O(M^3 N^3).
CVec full_lmmse(const CVec& z, const CMat& Ht, const RMat& G, double sigma0_sq,
                const SystemConfig& cfg);

// Dense R_cp H A_cp from the effective channel matrix.
CMat build_Ht(const ChannelRealization& ch, const SystemConfig& cfg);

enum class Constellation { BPSK, QPSK, QAM16, QAM64 };

int bits_per_symbol(Constellation c);
Constellation constellation_from_string(const std::string& name);

// Gray-labelled constellations with unit mean energy, scaled by sigma_x.
// Bit order per symbol is I-axis bits then Q-axis bits; on each axis the
// Gray code 0->-,1->+ ordering is 00,01,11,10 (and its 3-bit extension).
CVec map_bits(const std::vector<std::uint8_t>& bits, Constellation c, double sigma_x);
std::vector<std::uint8_t> demap(const CVec& x_hat, Constellation c, double sigma_x);

// Binary dump of the W1 band: int64 MN, int64 c, then the n x (2c+1)
// cyclic upper band row-major as little-endian double pairs (re, im).
void dump_w1_band(const BandedHermitian& W1, const std::string& path);

}  // namespace otfsftn
