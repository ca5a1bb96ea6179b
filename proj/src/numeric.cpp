#include "otfsftn/numeric.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace otfsftn {

std::uint64_t seed_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    auto mix = [](std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(seed ^ 0x2545F4914F6CDD1DULL);
    h = mix(h ^ (a + 0x9E3779B97F4A7C15ULL));
    h = mix(h ^ (b + 0xD1B54A32D192ED03ULL));
    return h;
}

CMat dft_matrix(Eigen::Index n) {
    if (n < 1) {
        throw std::invalid_argument("dft_matrix: n must be >= 1");
    }
    CMat F(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (Eigen::Index m = 0; m < n; ++m) {
        for (Eigen::Index k = 0; k < n; ++k) {
            // Reduce m*k mod n first so large grids keep full phase accuracy.
            const double frac = static_cast<double>((m * k) % n) / static_cast<double>(n);
            F(m, k) = std::polar(scale, -kTwoPi * frac);
        }
    }
    return F;
}

namespace {

// Cached FFTW plans for the interleaved Doppler transforms. Planning is
// serialized; execution through fftw_execute_dft is thread safe.
class DopplerFftCache {
public:
    static DopplerFftCache& instance() {
        static DopplerFftCache cache;
        return cache;
    }

    void transform(cplx* data, int M, int N, int sign) {
        fftw_plan plan = nullptr;
        {
            std::lock_guard<std::mutex> guard(mutex_);
            const Key key{M, N, sign};
            auto it = plans_.find(key);
            if (it == plans_.end()) {
                std::vector<cplx> scratch(static_cast<std::size_t>(M) * N);
                const int n[] = {N};
                plan = fftw_plan_many_dft(
                    1, n, M,
                    reinterpret_cast<fftw_complex*>(scratch.data()), nullptr, M, 1,
                    reinterpret_cast<fftw_complex*>(scratch.data()), nullptr, M, 1,
                    sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
                if (plan == nullptr) {
                    throw std::runtime_error("fftw planning failed");
                }
                plans_.emplace(key, plan);
            } else {
                plan = it->second;
            }
        }
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(data),
                         reinterpret_cast<fftw_complex*>(data));
    }

private:
    struct Key {
        int M;
        int N;
        int sign;
        bool operator<(const Key& o) const {
            if (M != o.M) return M < o.M;
            if (N != o.N) return N < o.N;
            return sign < o.sign;
        }
    };

    DopplerFftCache() = default;
    std::mutex mutex_;
    std::map<Key, fftw_plan> plans_;
};

void doppler_transform(CVec& v, int M, int N, int sign) {
    if (M < 1 || N < 1) {
        throw std::invalid_argument("doppler transform: M and N must be >= 1");
    }
    if (v.size() != static_cast<Eigen::Index>(M) * N) {
        throw std::invalid_argument("doppler transform: vector length must equal M*N");
    }
    if (N == 1) {
        return;  // F_1 is the identity
    }
    DopplerFftCache::instance().transform(v.data(), M, N, sign);
    v *= 1.0 / std::sqrt(static_cast<double>(N));
}

}  // namespace

CVec dd_to_td(const CVec& x, int M, int N) {
    CVec s = x;
    doppler_transform(s, M, N, FFTW_BACKWARD);
    return s;
}

CVec td_to_dd(const CVec& z, int M, int N) {
    CVec y = z;
    doppler_transform(y, M, N, FFTW_FORWARD);
    return y;
}

void dd_to_td_cols(CMat& mat, int M, int N) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) {
        CVec col = mat.col(c);
        doppler_transform(col, M, N, FFTW_BACKWARD);
        mat.col(c) = col;
    }
}

void td_to_dd_cols(CMat& mat, int M, int N) {
    for (Eigen::Index c = 0; c < mat.cols(); ++c) {
        CVec col = mat.col(c);
        doppler_transform(col, M, N, FFTW_FORWARD);
        mat.col(c) = col;
    }
}

namespace {

void check_hermitian(const CMat& A) {
    if (A.rows() != A.cols()) {
        throw std::invalid_argument("hermitian matrix op: matrix must be square");
    }
    const double scale = A.norm();
    const double asym = (A - A.adjoint()).norm();
    if (asym > 1e-9 * std::max(scale, 1.0)) {
        throw std::invalid_argument("hermitian matrix op: input is not Hermitian");
    }
}

}  // namespace

CMat hermitian_inv_sqrt(const CMat& A) {
    check_hermitian(A);
    Eigen::SelfAdjointEigenSolver<CMat> eig((A + A.adjoint()) * 0.5);
    if (eig.info() != Eigen::Success) {
        throw std::runtime_error("hermitian_inv_sqrt: eigendecomposition failed");
    }
    RVec lambda = eig.eigenvalues();
    const double floor = 1e-12 * lambda.maxCoeff();
    if (!(floor > 0.0)) {
        throw std::invalid_argument("hermitian_inv_sqrt: matrix has no positive spectrum");
    }
    RVec inv_sqrt(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        inv_sqrt(i) = 1.0 / std::sqrt(std::max(lambda(i), floor));
    }
    return eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().adjoint();
}

CMat hermitian_sqrt(const CMat& A) {
    check_hermitian(A);
    Eigen::SelfAdjointEigenSolver<CMat> eig((A + A.adjoint()) * 0.5);
    if (eig.info() != Eigen::Success) {
        throw std::runtime_error("hermitian_sqrt: eigendecomposition failed");
    }
    RVec lambda = eig.eigenvalues();
    RVec root(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        root(i) = std::sqrt(std::max(lambda(i), 0.0));
    }
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().adjoint();
}

CVec sample_colored_noise(const CMat& factor, Rng& rng) {
    CVec w(factor.cols());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        w(i) = rng.cgaussian(1.0);
    }
    return factor * w;
}

}  // namespace otfsftn
