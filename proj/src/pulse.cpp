#include "otfsftn/pulse.hpp"

#include <cmath>
#include <stdexcept>

namespace otfsftn {

void PulseConfig::validate() const {
    if (!(beta >= 0.0 && beta <= 1.0)) {
        throw std::invalid_argument("pulse: beta must lie in [0, 1]");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("pulse: alpha must lie in (0, 1]");
    }
    if (!(T0 > 0.0)) {
        throw std::invalid_argument("pulse: T0 must be positive");
    }
}

namespace {

double sinc(double x) {
    if (std::abs(x) < 1e-12) {
        return 1.0;
    }
    return std::sin(kPi * x) / (kPi * x);
}

}  // namespace

double rrc_sample(double t, const PulseConfig& cfg) {
    const double T0 = cfg.T0;
    const double beta = cfg.beta;
    const double x = t / T0;
    const double norm = 1.0 / std::sqrt(T0);

    if (beta < 1e-12) {
        return norm * sinc(x);
    }
    if (std::abs(x) < 1e-10) {
        return norm * (1.0 - beta + 4.0 * beta / kPi);
    }
    const double q = 4.0 * beta * x;
    if (std::abs(std::abs(q) - 1.0) < 1e-8) {
        // t = +-T0/(4 beta)
        const double a = (1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * beta));
        const double b = (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * beta));
        return norm * beta / std::sqrt(2.0) * (a + b);
    }
    const double num = std::sin(kPi * x * (1.0 - beta)) + q * std::cos(kPi * x * (1.0 + beta));
    const double den = kPi * x * (1.0 - q * q);
    return norm * num / den;
}

double rc_sample(double t, const PulseConfig& cfg) {
    const double T0 = cfg.T0;
    const double beta = cfg.beta;
    const double x = t / T0;

    if (beta < 1e-12) {
        return sinc(x);
    }
    const double q = 2.0 * beta * x;
    if (std::abs(std::abs(q) - 1.0) < 1e-8) {
        // t = +-T0/(2 beta)
        return kPi / 4.0 * sinc(1.0 / (2.0 * beta));
    }
    return sinc(x) * std::cos(kPi * beta * x) / (1.0 - q * q);
}

RMat NoiseCorrelation::dense_Gc() const {
    const Eigen::Index n = gc_col.size();
    RMat Gc(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            Gc(i, j) = gc_col((i - j + n) % n);
        }
    }
    return Gc;
}

NoiseCorrelation NoiseCorrelation::rescaled(double new_sigma0_sq) const {
    if (!(sigma0_sq > 0.0)) {
        throw std::invalid_argument("noise rescale: source must have sigma0_sq > 0");
    }
    if (new_sigma0_sq < 0.0) {
        throw std::invalid_argument("noise rescale: sigma0_sq must be >= 0");
    }
    NoiseCorrelation out;
    out.G = G;
    out.gc_col = gc_col;
    out.sigma0_sq = new_sigma0_sq;
    const double ratio = new_sigma0_sq / sigma0_sq;
    out.Gd = Gd * ratio;
    if (new_sigma0_sq > 0.0) {
        out.whitener = whitener / std::sqrt(ratio);
        out.factor = factor * std::sqrt(ratio);
    } else {
        out.whitener = CMat::Zero(Gd.rows(), Gd.cols());
        out.factor = CMat::Zero(Gd.rows(), Gd.cols());
        out.Gd.setZero();
    }
    return out;
}

NoiseCorrelation build_noise_correlation(const PulseConfig& cfg, int M, int N, int c,
                                         double sigma0_sq) {
    cfg.validate();
    const long MN = static_cast<long>(M) * N;
    if (MN <= 4L * c) {
        throw std::invalid_argument("noise correlation: M*N must exceed 4c");
    }
    if (sigma0_sq < 0.0) {
        throw std::invalid_argument("noise correlation: sigma0_sq must be >= 0");
    }

    NoiseCorrelation out;
    out.sigma0_sq = sigma0_sq;

    const double Tf = cfg.Tf();
    std::vector<double> g(static_cast<std::size_t>(2 * c) + 1);
    for (int d = 0; d <= 2 * c; ++d) {
        g[static_cast<std::size_t>(d)] = rc_sample(d * Tf, cfg);
    }

    out.G = RMat::Zero(MN, MN);
    for (Eigen::Index i = 0; i < MN; ++i) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, i - 2 * c);
        const Eigen::Index hi = std::min<Eigen::Index>(MN - 1, i + 2 * c);
        for (Eigen::Index j = lo; j <= hi; ++j) {
            out.G(i, j) = g[static_cast<std::size_t>(std::abs(i - j))];
        }
    }

    out.gc_col = RVec::Zero(MN);
    out.gc_col(0) = g[0];
    for (int d = 1; d <= 2 * c; ++d) {
        out.gc_col(d) = g[static_cast<std::size_t>(d)];
        out.gc_col(MN - d) = g[static_cast<std::size_t>(d)];
    }

    if (sigma0_sq > 0.0) {
        CMat Gd = out.G.cast<cplx>() * sigma0_sq;
        td_to_dd_cols(Gd, M, N);            // (F_N kron I_M) * G
        CMat GdH = Gd.adjoint();
        td_to_dd_cols(GdH, M, N);           // (F_N kron I_M) * G^H
        out.Gd = GdH.adjoint();             // G * (F_N^H kron I_M), combined
        out.whitener = hermitian_inv_sqrt(out.Gd);
        out.factor = hermitian_sqrt((sigma0_sq * out.G).cast<cplx>());
    } else {
        out.Gd = CMat::Zero(MN, MN);
        out.whitener = CMat::Zero(MN, MN);
        out.factor = CMat::Zero(MN, MN);
    }
    return out;
}

}  // namespace otfsftn
