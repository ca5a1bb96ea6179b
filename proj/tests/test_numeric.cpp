#include <doctest.h>

#include "otfsftn/numeric.hpp"

using namespace otfsftn;

namespace {

// Dense (F_N^H kron I_M) for the Kronecker-product oracle.
CMat dense_Q(int M, int N) {
    const CMat FN = dft_matrix(N);
    CMat Q = CMat::Zero(static_cast<Eigen::Index>(M) * N, static_cast<Eigen::Index>(M) * N);
    for (int a = 0; a < N; ++a) {
        for (int b = 0; b < N; ++b) {
            Q.block(static_cast<Eigen::Index>(a) * M, static_cast<Eigen::Index>(b) * M, M, M) =
                std::conj(FN(b, a)) * CMat::Identity(M, M);
        }
    }
    return Q;
}

}  // namespace

TEST_CASE("dft_matrix closed forms and unitarity") {
    CHECK(dft_matrix(1)(0, 0) == cplx(1.0, 0.0));

    const CMat F2 = dft_matrix(2);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(F2(0, 0) - cplx(r, 0)) < 1e-15);
    CHECK(std::abs(F2(0, 1) - cplx(r, 0)) < 1e-15);
    CHECK(std::abs(F2(1, 0) - cplx(r, 0)) < 1e-15);
    CHECK(std::abs(F2(1, 1) - cplx(-r, 0)) < 1e-15);

    for (int n : {1, 2, 4, 8, 64}) {
        const CMat F = dft_matrix(n);
        const CMat I = F.adjoint() * F;
        CHECK((I - CMat::Identity(n, n)).norm() < 1e-12);
    }
    CHECK_THROWS_AS(dft_matrix(0), std::invalid_argument);
}

TEST_CASE("dd_to_td matches the dense Kronecker oracle") {
    // Pinned example: M=2, N=2, x = e0 -> (1/sqrt 2)[1,0,1,0]
    CVec e0 = CVec::Zero(4);
    e0(0) = 1.0;
    const CVec s = dd_to_td(e0, 2, 2);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(s(0) - r) < 1e-14);
    CHECK(std::abs(s(1)) < 1e-14);
    CHECK(std::abs(s(2) - r) < 1e-14);
    CHECK(std::abs(s(3)) < 1e-14);

    Rng rng(7);
    for (int M : {2, 3, 8, 16}) {
        for (int N : {2, 5, 6, 16}) {
            CVec x(static_cast<Eigen::Index>(M) * N);
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                x(i) = rng.cgaussian();
            }
            const CVec fast = dd_to_td(x, M, N);
            const CVec dense = dense_Q(M, N) * x;
            CHECK((fast - dense).norm() < 1e-10);
        }
    }
}

TEST_CASE("dd_to_td and td_to_dd are mutually inverse and norm preserving") {
    CHECK_THROWS_AS(dd_to_td(CVec::Zero(5), 2, 3), std::invalid_argument);

    Rng rng(11);
    for (int M : {2, 7, 64}) {
        for (int N : {1, 3, 12, 64}) {
            CVec x(static_cast<Eigen::Index>(M) * N);
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                x(i) = rng.cgaussian();
            }
            const CVec s = dd_to_td(x, M, N);
            CHECK(std::abs(s.norm() - x.norm()) < 1e-10 * x.norm());
            const CVec back = td_to_dd(s, M, N);
            CHECK((back - x).norm() < 1e-12 * x.norm());
            if (N == 1) {
                CHECK((s - x).norm() == 0.0);
            }
        }
    }
}

TEST_CASE("hermitian_inv_sqrt") {
    const CMat I4 = CMat::Identity(4, 4);
    CHECK((hermitian_inv_sqrt(I4) - I4).norm() < 1e-12);

    CMat D = CMat::Zero(2, 2);
    D(0, 0) = 4.0;
    D(1, 1) = 9.0;
    const CMat Dis = hermitian_inv_sqrt(D);
    CHECK(std::abs(Dis(0, 0) - cplx(0.5, 0)) < 1e-12);
    CHECK(std::abs(Dis(1, 1) - cplx(1.0 / 3.0, 0)) < 1e-12);
    CHECK(std::abs(Dis(0, 1)) < 1e-12);

    // multiply-back oracle on a random HPD matrix
    Rng rng(3);
    CMat A(8, 8);
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) {
            A(i, j) = rng.cgaussian();
        }
    }
    const CMat HPD = A * A.adjoint() + 0.5 * CMat::Identity(8, 8);
    const CMat B = hermitian_inv_sqrt(HPD);
    CHECK((B * HPD * B - CMat::Identity(8, 8)).norm() < 1e-9);

    CMat bad(2, 2);
    bad << cplx(1, 0), cplx(1, 0), cplx(0, 0), cplx(1, 0);
    CHECK_THROWS_AS(hermitian_inv_sqrt(bad), std::invalid_argument);
}

TEST_CASE("sample_colored_noise statistics") {
    Rng rng(2024);

    // zero factor -> zero vector
    const CVec zero = sample_colored_noise(CMat::Zero(3, 3), rng);
    CHECK(zero.norm() == 0.0);

    // identity factor: per-entry variance 1 within 5%
    {
        const CMat I = CMat::Identity(4, 4);
        double acc = 0.0;
        const int reps = 25000;  // 1e5 samples over 4 entries
        for (int r = 0; r < reps; ++r) {
            acc += sample_colored_noise(I, rng).squaredNorm();
        }
        const double var = acc / (4.0 * reps);
        CHECK(var == doctest::Approx(1.0).epsilon(0.05));
    }

    // covariance oracle against a known Hermitian factorization
    {
        CMat A(3, 3);
        Rng gen(5);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                A(i, j) = gen.cgaussian();
            }
        }
        const CMat target = A * A.adjoint() + CMat::Identity(3, 3);
        const CMat F = hermitian_sqrt(target);
        CHECK((F * F.adjoint() - target).norm() < 1e-10);

        CMat emp = CMat::Zero(3, 3);
        const int frames = 10000;
        for (int r = 0; r < frames; ++r) {
            const CVec eta = sample_colored_noise(F, rng);
            emp += eta * eta.adjoint();
        }
        emp /= static_cast<double>(frames);
        // entrywise within 3 standard errors (se ~ scale/sqrt(frames))
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const double se = 3.0 * std::sqrt(std::abs(target(i, i) * target(j, j)) /
                                                  static_cast<double>(frames));
                CHECK(std::abs(emp(i, j) - target(i, j)) < 3.0 * se);
            }
        }
    }
}

TEST_CASE("seed_stream decorrelates trial indices") {
    CHECK(seed_stream(1, 2, 3) != seed_stream(1, 3, 2));
    CHECK(seed_stream(1, 2, 3) == seed_stream(1, 2, 3));
    CHECK(seed_stream(1, 2, 3) != seed_stream(2, 2, 3));
}
