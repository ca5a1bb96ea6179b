#include "otfsftn/equalizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace otfsftn {

CVec SparseChannelMatrix::apply(const CVec& s) const {
    if (s.size() != n) {
        throw std::invalid_argument("sparse H: vector length mismatch");
    }
    CVec z = CVec::Zero(n);
    for (int r = 0; r < n; ++r) {
        cplx acc(0.0, 0.0);
        for (int j = 0; j <= 2 * c; ++j) {
            acc += band(r, j) * s((r + j) % n);
        }
        z(r) = acc;
    }
    return z;
}

CVec SparseChannelMatrix::apply_adjoint(const CVec& w) const {
    if (w.size() != n) {
        throw std::invalid_argument("sparse H: vector length mismatch");
    }
    CVec x = CVec::Zero(n);
    for (int r = 0; r < n; ++r) {
        const cplx wr = w(r);
        for (int j = 0; j <= 2 * c; ++j) {
            x((r + j) % n) += std::conj(band(r, j)) * wr;
        }
    }
    return x;
}

CMat SparseChannelMatrix::dense() const {
    CMat H = CMat::Zero(n, n);
    for (int r = 0; r < n; ++r) {
        for (int j = 0; j <= 2 * c; ++j) {
            H(r, (r + j) % n) = band(r, j);
        }
    }
    return H;
}

SparseChannelMatrix build_sparse_H(const std::vector<ChannelTap>& taps,
                                   const SystemConfig& cfg) {
    const int n = static_cast<int>(cfg.frame_len());
    const int c = cfg.c;
    if (2 * c >= n) {
        throw std::invalid_argument("sparse H: 2c must be below M*N");
    }
    const double Tf = cfg.Tf();
    const PulseConfig pulse = cfg.pulse();

    SparseChannelMatrix Hs;
    Hs.n = n;
    Hs.c = c;
    Hs.band = CMat::Zero(n, 2 * c + 1);

    for (const ChannelTap& tap : taps) {
        // Band profile of this tap: g((j - c + l_i) Tf), zero beyond lag 2c.
        std::vector<double> g(static_cast<std::size_t>(2 * c) + 1);
        for (int j = 0; j <= 2 * c; ++j) {
            const int lag = j - c + tap.delay_int;
            g[static_cast<std::size_t>(j)] = std::abs(lag) <= 2 * c ? rc_sample(lag * Tf, pulse) : 0.0;
        }
        const double nu = tap.doppler_total();
        for (int r = 0; r < n; ++r) {
            const cplx ph = tap.gain * std::polar(1.0, kTwoPi * nu * (r + c - tap.delay_int) / n);
            for (int j = 0; j <= 2 * c; ++j) {
                Hs.band(r, j) += ph * g[static_cast<std::size_t>(j)];
            }
        }
    }
    return Hs;
}

CMat BandedHermitian::dense() const {
    CMat W = CMat::Zero(n, n);
    for (int r = 0; r < n; ++r) {
        for (int d = 0; d <= 2 * c; ++d) {
            const int col = (r + d) % n;
            W(r, col) = upper(r, d);
            if (d > 0) {
                W(col, r) = std::conj(upper(r, d));
            }
        }
    }
    return W;
}

namespace {

BandedHermitian accumulate_W1(const SparseChannelMatrix& Hs, const RVec* gc_col,
                              double sigma0_sq) {
    const int n = Hs.n;
    const int c = Hs.c;
    BandedHermitian W1;
    W1.n = n;
    W1.c = c;
    W1.upper = CMat::Zero(n, 2 * c + 1);
    for (int r = 0; r < n; ++r) {
        for (int d = 0; d <= 2 * c; ++d) {
            const int r2 = (r + d) % n;
            cplx acc(0.0, 0.0);
            for (int j = d; j <= 2 * c; ++j) {
                acc += Hs.band(r, j) * std::conj(Hs.band(r2, j - d));
            }
            W1.upper(r, d) = acc;
        }
        if (gc_col != nullptr) {
            W1.upper(r, 0) += sigma0_sq * (*gc_col)(0);
            for (int d = 1; d <= 2 * c; ++d) {
                W1.upper(r, d) += sigma0_sq * (*gc_col)(n - d);
            }
        } else {
            W1.upper(r, 0) += sigma0_sq;
        }
    }
    // Force an exactly real diagonal; the accumulation already is up to
    // rounding in the imaginary part.
    for (int r = 0; r < n; ++r) {
        W1.upper(r, 0) = cplx(W1.upper(r, 0).real(), 0.0);
    }
    return W1;
}

}  // namespace

BandedHermitian build_W1(const SparseChannelMatrix& Hs, const NoiseCorrelation& noise) {
    if (noise.gc_col.size() != Hs.n) {
        throw std::invalid_argument("build_W1: noise correlation size mismatch");
    }
    return accumulate_W1(Hs, &noise.gc_col, noise.sigma0_sq);
}

BandedHermitian build_W1_unwhitened(const SparseChannelMatrix& Hs, double sigma0_sq) {
    return accumulate_W1(Hs, nullptr, sigma0_sq);
}

LuPartition lu_factorize(const BandedHermitian& W1, int c) {
    if (c != W1.c) {
        throw std::invalid_argument("lu_factorize: half-bandwidth mismatch");
    }
    const int n = W1.n;
    const int hw = 2 * c;
    const int m = n - hw;
    if (m <= hw) {
        throw std::invalid_argument("lu_factorize: frame too short for the block split");
    }

    LuPartition part;
    part.n = n;
    part.c = c;

    // Working band of R with offsets -2c..2c relative to the diagonal.
    CMat work = CMat::Zero(m, 2 * hw + 1);
    for (int r = 0; r < m; ++r) {
        for (int d = 0; d <= hw; ++d) {
            if (r + d < m) {
                work(r, hw + d) = W1.upper(r, d);                    // upper half
                if (d > 0) {
                    work(r + d, hw - d) = std::conj(W1.upper(r, d)); // mirrored lower half
                }
            }
        }
    }

    double diag_scale = 0.0;
    for (int r = 0; r < m; ++r) {
        diag_scale = std::max(diag_scale, std::abs(work(r, hw)));
    }
    const double pivot_floor = 1e-12 * std::max(diag_scale, 1e-300);

    // In-place banded Doolittle factorization, no pivoting.
    for (int k = 0; k < m; ++k) {
        const cplx pivot = work(k, hw);
        if (std::abs(pivot) < pivot_floor) {
            throw std::runtime_error("lu_factorize: near-zero pivot at row " + std::to_string(k));
        }
        const int i_hi = std::min(m - 1, k + hw);
        for (int i = k + 1; i <= i_hi; ++i) {
            const cplx lik = work(i, hw + k - i) / pivot;
            work(i, hw + k - i) = lik;
            for (int j = k + 1; j <= i_hi; ++j) {
                work(i, hw + j - i) -= lik * work(k, hw + j - k);
            }
        }
    }

    part.L_band = CMat::Zero(m, hw);
    part.U_band = CMat::Zero(m, hw + 1);
    for (int i = 0; i < m; ++i) {
        for (int d = 1; d <= hw && d <= i; ++d) {
            part.L_band(i, d - 1) = work(i, hw - d);
        }
        for (int d = 0; d <= hw && i + d < m; ++d) {
            part.U_band(i, d) = work(i, hw + d);
        }
    }

    // Corner blocks A, B, C gathered from the cyclic band.
    CMat A = CMat::Zero(m, hw);
    CMat B = CMat::Zero(hw, m);
    CMat C = CMat::Zero(hw, hw);
    for (int r = 0; r < n; ++r) {
        for (int d = 0; d <= hw; ++d) {
            const int col = (r + d) % n;
            const cplx v = W1.upper(r, d);
            if (r < m && col >= m) {
                A(r, col - m) = v;
                B(col - m, r) = std::conj(v);
            } else if (r >= m && col < m) {
                B(r - m, col) = v;
                A(col, r - m) = std::conj(v);
            } else if (r >= m && col >= m) {
                C(r - m, col - m) = v;
                if (d > 0) {
                    C(col - m, r - m) = std::conj(v);
                }
            }
        }
    }

    // J = L_R^{-1} A by banded forward substitution over 2c columns.
    part.J = A;
    for (int i = 0; i < m; ++i) {
        for (int d = 1; d <= hw && d <= i; ++d) {
            part.J.row(i) -= part.L_band(i, d - 1) * part.J.row(i - d);
        }
    }

    // D^H = (U_R^H)^{-1} B^H with the same banded kernel.
    CMat DH = B.adjoint();
    for (int i = 0; i < m; ++i) {
        for (int d = 1; d <= hw && d <= i; ++d) {
            DH.row(i) -= std::conj(part.U_band(i - d, d)) * DH.row(i - d);
        }
        const cplx pivot = std::conj(part.U_band(i, 0));
        DH.row(i) /= pivot;
    }
    part.D = DH.adjoint();

    // Dense LU of the 2c x 2c Schur complement C - D J.
    CMat S = C - part.D * part.J;
    part.E = CMat::Identity(hw, hw);
    part.K = CMat::Zero(hw, hw);
    for (int k = 0; k < hw; ++k) {
        for (int j = k; j < hw; ++j) {
            cplx acc = S(k, j);
            for (int t = 0; t < k; ++t) {
                acc -= part.E(k, t) * part.K(t, j);
            }
            part.K(k, j) = acc;
        }
        if (std::abs(part.K(k, k)) < pivot_floor) {
            throw std::runtime_error("lu_factorize: near-zero pivot in tail row " +
                                     std::to_string(m + k));
        }
        for (int i = k + 1; i < hw; ++i) {
            cplx acc = S(i, k);
            for (int t = 0; t < k; ++t) {
                acc -= part.E(i, t) * part.K(t, k);
            }
            part.E(i, k) = acc / part.K(k, k);
        }
    }
    return part;
}

CVec forward_substitute(const LuPartition& part, const CVec& z) {
    const int n = part.n;
    const int hw = 2 * part.c;
    const int m = n - hw;
    if (z.size() != n) {
        throw std::invalid_argument("forward_substitute: vector length mismatch");
    }
    CVec w2(n);
    for (int i = 0; i < m; ++i) {
        cplx acc = z(i);
        const int dmax = std::min(hw, i);
        for (int d = 1; d <= dmax; ++d) {
            acc -= part.L_band(i, d - 1) * w2(i - d);
        }
        w2(i) = acc;
    }
    for (int r = 0; r < hw; ++r) {
        cplx acc = z(m + r);
        for (int t = 0; t < m; ++t) {
            acc -= part.D(r, t) * w2(t);
        }
        for (int t = 0; t < r; ++t) {
            acc -= part.E(r, t) * w2(m + t);
        }
        w2(m + r) = acc;
    }
    return w2;
}

CVec backward_substitute(const LuPartition& part, const CVec& w2) {
    const int n = part.n;
    const int hw = 2 * part.c;
    const int m = n - hw;
    if (w2.size() != n) {
        throw std::invalid_argument("backward_substitute: vector length mismatch");
    }
    CVec w3(n);
    for (int r = hw - 1; r >= 0; --r) {
        cplx acc = w2(m + r);
        for (int t = r + 1; t < hw; ++t) {
            acc -= part.K(r, t) * w3(m + t);
        }
        w3(m + r) = acc / part.K(r, r);
    }
    for (int i = m - 1; i >= 0; --i) {
        cplx acc = w2(i);
        const int dmax = std::min(hw, m - 1 - i);
        for (int d = 1; d <= dmax; ++d) {
            acc -= part.U_band(i, d) * w3(i + d);
        }
        for (int j = 0; j < hw; ++j) {
            acc -= part.J(i, j) * w3(m + j);
        }
        w3(i) = acc / part.U_band(i, 0);
    }
    return w3;
}

CVec equalize(const CVec& z, const SparseChannelMatrix& Hs, const NoiseCorrelation& noise,
              const SystemConfig& cfg) {
    const LuPartition part = lu_factorize(build_W1(Hs, noise), cfg.c);
    return equalize(z, Hs, part, cfg);
}

CVec equalize(const CVec& z, const SparseChannelMatrix& Hs, const LuPartition& part,
              const SystemConfig& cfg) {
    const CVec w2 = forward_substitute(part, z);
    const CVec w3 = backward_substitute(part, w2);
    const CVec w4 = Hs.apply_adjoint(w3);
    return td_to_dd(w4, cfg.M, cfg.N);
}

CMat build_Ht(const ChannelRealization& ch, const SystemConfig& cfg) {
    const long MN = cfg.frame_len();
    const int c = cfg.c;
    const CMat H = build_effective_H(ch, cfg);
    CMat Ht(MN, MN);
    for (long r = 0; r < MN; ++r) {
        Ht.row(r) = H.row(r + c).head(MN);
        for (int m2 = 0; m2 < 2 * c; ++m2) {
            Ht(r, m2) += H(r + c, MN + m2);
        }
    }
    return Ht;
}

CVec full_lmmse(const CVec& z, const CMat& Ht, const RMat& G, double sigma0_sq,
                const SystemConfig& cfg) {
    if (Ht.rows() != z.size() || G.rows() != z.size()) {
        throw std::invalid_argument("full_lmmse: dimension mismatch");
    }
    CMat S = Ht * Ht.adjoint() + sigma0_sq * G.cast<cplx>();
    Eigen::LLT<CMat> llt(S);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("full_lmmse: covariance solve failed (singular system)");
    }
    const CVec w = llt.solve(z);
    return td_to_dd(Ht.adjoint() * w, cfg.M, cfg.N);
}

namespace {

// Per-axis Gray tables: index = bit group value, entry = level index; and
// the inverse mapping from level index to bits.
const int kGray2ToLevel[4] = {0, 1, 3, 2};   // 00,01,11,10 -> -3,-1,+1,+3
const int kLevel2ToGray[4] = {0, 1, 3, 2};
const int kGray3ToLevel[8] = {0, 1, 3, 2, 7, 6, 4, 5};
const int kLevel3ToGray[8] = {0, 1, 3, 2, 6, 7, 5, 4};

double qam_scale(Constellation c) {
    switch (c) {
        case Constellation::BPSK: return 1.0;
        case Constellation::QPSK: return 1.0 / std::sqrt(2.0);
        case Constellation::QAM16: return 1.0 / std::sqrt(10.0);
        case Constellation::QAM64: return 1.0 / std::sqrt(42.0);
    }
    throw std::invalid_argument("unknown constellation");
}

int slice_level(double v, int n_levels) {
    // Levels are -(n-1), -(n-3), .., (n-1); nearest index.
    const int idx = static_cast<int>(std::floor((v + n_levels) / 2.0));
    return std::clamp(idx, 0, n_levels - 1);
}

}  // namespace

int bits_per_symbol(Constellation c) {
    switch (c) {
        case Constellation::BPSK: return 1;
        case Constellation::QPSK: return 2;
        case Constellation::QAM16: return 4;
        case Constellation::QAM64: return 6;
    }
    throw std::invalid_argument("unknown constellation");
}

Constellation constellation_from_string(const std::string& name) {
    if (name == "bpsk") return Constellation::BPSK;
    if (name == "qpsk") return Constellation::QPSK;
    if (name == "16qam") return Constellation::QAM16;
    if (name == "64qam") return Constellation::QAM64;
    throw std::invalid_argument("unknown constellation: " + name);
}

CVec map_bits(const std::vector<std::uint8_t>& bits, Constellation c, double sigma_x) {
    const int bps = bits_per_symbol(c);
    if (bits.size() % static_cast<std::size_t>(bps) != 0) {
        throw std::invalid_argument("map_bits: bit count not a multiple of bits per symbol");
    }
    const std::size_t n_sym = bits.size() / static_cast<std::size_t>(bps);
    CVec out(static_cast<Eigen::Index>(n_sym));
    const double s = sigma_x * qam_scale(c);

    for (std::size_t i = 0; i < n_sym; ++i) {
        const std::uint8_t* b = bits.data() + i * static_cast<std::size_t>(bps);
        switch (c) {
            case Constellation::BPSK:
                out(static_cast<Eigen::Index>(i)) = cplx(b[0] ? -sigma_x : sigma_x, 0.0);
                break;
            case Constellation::QPSK: {
                const double re = b[0] ? -s : s;
                const double im = b[1] ? -s : s;
                out(static_cast<Eigen::Index>(i)) = cplx(re, im);
                break;
            }
            case Constellation::QAM16: {
                const int li = kGray2ToLevel[(b[0] << 1) | b[1]];
                const int lq = kGray2ToLevel[(b[2] << 1) | b[3]];
                out(static_cast<Eigen::Index>(i)) = cplx(s * (2 * li - 3), s * (2 * lq - 3));
                break;
            }
            case Constellation::QAM64: {
                const int li = kGray3ToLevel[(b[0] << 2) | (b[1] << 1) | b[2]];
                const int lq = kGray3ToLevel[(b[3] << 2) | (b[4] << 1) | b[5]];
                out(static_cast<Eigen::Index>(i)) = cplx(s * (2 * li - 7), s * (2 * lq - 7));
                break;
            }
        }
    }
    return out;
}

std::vector<std::uint8_t> demap(const CVec& x_hat, Constellation c, double sigma_x) {
    const int bps = bits_per_symbol(c);
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(x_hat.size()) *
                                   static_cast<std::size_t>(bps));
    const double s = sigma_x * qam_scale(c);

    for (Eigen::Index i = 0; i < x_hat.size(); ++i) {
        std::uint8_t* b = bits.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(bps);
        switch (c) {
            case Constellation::BPSK:
                b[0] = x_hat(i).real() < 0.0 ? 1 : 0;
                break;
            case Constellation::QPSK:
                b[0] = x_hat(i).real() < 0.0 ? 1 : 0;
                b[1] = x_hat(i).imag() < 0.0 ? 1 : 0;
                break;
            case Constellation::QAM16: {
                const int li = slice_level(x_hat(i).real() / s, 4);
                const int lq = slice_level(x_hat(i).imag() / s, 4);
                const int gi = kLevel2ToGray[li];
                const int gq = kLevel2ToGray[lq];
                b[0] = static_cast<std::uint8_t>((gi >> 1) & 1);
                b[1] = static_cast<std::uint8_t>(gi & 1);
                b[2] = static_cast<std::uint8_t>((gq >> 1) & 1);
                b[3] = static_cast<std::uint8_t>(gq & 1);
                break;
            }
            case Constellation::QAM64: {
                const int li = slice_level(x_hat(i).real() / s, 8);
                const int lq = slice_level(x_hat(i).imag() / s, 8);
                const int gi = kLevel3ToGray[li];
                const int gq = kLevel3ToGray[lq];
                b[0] = static_cast<std::uint8_t>((gi >> 2) & 1);
                b[1] = static_cast<std::uint8_t>((gi >> 1) & 1);
                b[2] = static_cast<std::uint8_t>(gi & 1);
                b[3] = static_cast<std::uint8_t>((gq >> 2) & 1);
                b[4] = static_cast<std::uint8_t>((gq >> 1) & 1);
                b[5] = static_cast<std::uint8_t>(gq & 1);
                break;
            }
        }
    }
    return bits;
}

void dump_w1_band(const BandedHermitian& W1, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("w1 dump: cannot open " + path);
    }
    const std::int64_t header[2] = {W1.n, W1.c};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    for (int r = 0; r < W1.n; ++r) {
        for (int d = 0; d <= 2 * W1.c; ++d) {
            const double pair[2] = {W1.upper(r, d).real(), W1.upper(r, d).imag()};
            out.write(reinterpret_cast<const char*>(pair), sizeof(pair));
        }
    }
}

}  // namespace otfsftn
