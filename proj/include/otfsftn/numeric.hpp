#pragma once

#include <complex>
#include <cstdint>
#include <Eigen/Dense>

namespace otfsftn {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kTwoPi = 2.0 * kPi;

// Deterministic random stream. One instance per Monte Carlo trial; never
// shared across threads. The raw generator is splitmix64, which is enough
// for simulation noise and keeps results reproducible across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on (0, 1]; never returns 0 so log() is safe.
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard real Gaussian via Box-Muller.
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

    // CN(0, var): variance var/2 per real component.
    cplx cgaussian(double var = 1.0) {
        double s = std::sqrt(var * 0.5);
        return cplx(s * gaussian(), s * gaussian());
    }

private:
    std::uint64_t state_;
};

// Mixes a base seed with stream indices so that parallel trials get
// independent, schedule-invariant substreams.
std::uint64_t seed_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

// Normalized DFT matrix: entry (m, k) = exp(-2*pi*j*m*k/n) / sqrt(n).
CMat dft_matrix(Eigen::Index n);

// s = (F_N^H kron I_M) x via M interleaved N-point inverse FFTs. x has
// length M*N laid out delay-major (index l + M*n).
CVec dd_to_td(const CVec& x, int M, int N);

// y = (F_N kron I_M) z; exact inverse of dd_to_td.
CVec td_to_dd(const CVec& z, int M, int N);

// In-place column-batched variants used by the dense analysis path.
void dd_to_td_cols(CMat& mat, int M, int N);
void td_to_dd_cols(CMat& mat, int M, int N);

// Inverse square root of a Hermitian PSD matrix. Eigenvalues below
// 1e-12 * lambda_max are clamped to that floor before inversion.
CMat hermitian_inv_sqrt(const CMat& A);

// Hermitian square root with negative eigenvalues clamped to zero.
// Suitable as a covariance factor: result * result^H == A for PSD A.
CMat hermitian_sqrt(const CMat& A);

// Returns factor * w with w circularly-symmetric complex Gaussian,
// identity covariance. factor must satisfy factor * factor^H = target
// covariance.
CVec sample_colored_noise(const CMat& factor, Rng& rng);

}  // namespace otfsftn
