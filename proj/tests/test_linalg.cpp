#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "stablab/linalg.hpp"

using namespace stablab::linalg;

namespace {

Mat random_spd(std::mt19937_64& rng, int n, double cond_max = 1e6) {
    std::normal_distribution<double> gauss;
    // random rotation via Gram-Schmidt of a Gaussian matrix
    Mat q(n);
    for (int j = 0; j < n; ++j) {
        Vec col(n);
        for (int i = 0; i < n; ++i) col[i] = gauss(rng);
        for (int k = 0; k < j; ++k) {
            double proj = 0;
            for (int i = 0; i < n; ++i) proj += q(i, k) * col[i];
            for (int i = 0; i < n; ++i) col[i] -= proj * q(i, k);
        }
        double nrm = norm2(col);
        for (int i = 0; i < n; ++i) q(i, j) = col[i] / nrm;
    }
    std::uniform_real_distribution<double> logl(0.0, std::log(cond_max));
    Mat d(n);
    d(0, 0) = 1.0;
    for (int i = 1; i < n; ++i) d(i, i) = std::exp(logl(rng));
    return matmul(matmul(q, d), transpose(q));
}

}  // namespace

TEST_CASE("sqrt_spd: fixed cases") {
    CHECK(sqrt_spd(Mat::identity(2))(0, 0) == doctest::Approx(1.0));
    Mat d = sqrt_spd(Mat::diag({4.0, 9.0}));
    CHECK(d(0, 0) == doctest::Approx(2.0));
    CHECK(d(1, 1) == doctest::Approx(3.0));
    CHECK(d(0, 1) == doctest::Approx(0.0));

    Mat m(2);
    m(0, 0) = m(1, 1) = 2.0;
    m(0, 1) = m(1, 0) = 1.0;
    Mat s = sqrt_spd(m);
    double r3 = std::sqrt(3.0);
    CHECK(s(0, 0) == doctest::Approx((r3 + 1) / 2).epsilon(1e-12));
    CHECK(s(0, 1) == doctest::Approx((r3 - 1) / 2).epsilon(1e-12));

    Mat bad(2);
    bad(0, 0) = 1.0;
    bad(1, 1) = -1.0;
    CHECK_THROWS(sqrt_spd(bad));
}

TEST_CASE("sqrt_spd: S*S == M for random SPD matrices up to cond 1e6") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        int n = 2 + (trial % 2);
        Mat m = random_spd(rng, n);
        Mat s = sqrt_spd(m);
        Mat err = matmul(s, s) - m;
        CHECK(frobenius(err) <= 1e-12 * frobenius(m));
        // symmetry of the root
        CHECK(frobenius(s - transpose(s)) <= 1e-12 * frobenius(s));
    }
}

TEST_CASE("weighted_norm") {
    CHECK(weighted_norm(Vec{3.0, 4.0}, Mat::identity(2)) == doctest::Approx(5.0));
    CHECK(weighted_norm(Vec{1.0, 0.0}, Mat::diag({4.0, 1.0})) == doctest::Approx(2.0));
    Mat m(2);
    m(0, 0) = m(1, 1) = 2.0;
    m(0, 1) = m(1, 0) = 1.0;
    CHECK(weighted_norm(Vec{1.0, 1.0}, m) == doctest::Approx(std::sqrt(6.0)));
}

TEST_CASE("eigen_sym sorts ascending with orthonormal vectors") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        Mat m = random_spd(rng, 3, 1e4);
        EigenSym e = eigen_sym(m);
        CHECK(e.values[0] <= e.values[1]);
        CHECK(e.values[1] <= e.values[2]);
        for (int i = 0; i < 3; ++i) {
            Vec v(3);
            for (int k = 0; k < 3; ++k) v[k] = e.vectors(k, i);
            Vec mv = matvec(m, v);
            for (int k = 0; k < 3; ++k)
                CHECK(mv[k] == doctest::Approx(e.values[i] * v[k]).epsilon(1e-8).scale(frobenius(m)));
        }
    }
}

TEST_CASE("banded LU solves random banded systems (dense elimination oracle)") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        int n = 5 + static_cast<int>(rng() % 40);
        int kl = 1 + static_cast<int>(rng() % 4);
        int ku = 1 + static_cast<int>(rng() % 4);
        BandedMatrix b(n, kl, ku);
        std::vector<std::vector<double>> dense(n, std::vector<double>(n, 0.0));
        for (int i = 0; i < n; ++i)
            for (int j = std::max(0, i - kl); j <= std::min(n - 1, i + ku); ++j) {
                double v = dist(rng) + (i == j ? 4.0 : 0.0);
                b.set(i, j, v);
                dense[i][j] = v;
            }
        std::vector<double> x_true(n);
        for (double& v : x_true) v = dist(rng);
        std::vector<double> rhs = b.matvec(x_true);

        auto lu = BandedLU::factor(b);
        REQUIRE(lu.has_value());
        std::vector<double> x = lu->solve(rhs);
        for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(x_true[i]).epsilon(1e-9));

        // dense Gaussian elimination oracle on the same system
        std::vector<double> r2 = rhs;
        for (int k = 0; k < n; ++k) {
            int piv = k;
            for (int i = k + 1; i < n; ++i)
                if (std::abs(dense[i][k]) > std::abs(dense[piv][k])) piv = i;
            std::swap(dense[k], dense[piv]);
            std::swap(r2[k], r2[piv]);
            for (int i = k + 1; i < n; ++i) {
                double f = dense[i][k] / dense[k][k];
                for (int j = k; j < n; ++j) dense[i][j] -= f * dense[k][j];
                r2[i] -= f * r2[k];
            }
        }
        std::vector<double> xo(n);
        for (int k = n - 1; k >= 0; --k) {
            double s = r2[k];
            for (int j = k + 1; j < n; ++j) s -= dense[k][j] * xo[j];
            xo[k] = s / dense[k][k];
        }
        for (int i = 0; i < n; ++i) CHECK(x[i] == doctest::Approx(xo[i]).epsilon(1e-9));
    }
}

TEST_CASE("banded LU flags singular matrices") {
    BandedMatrix b(3, 1, 1);
    b.set(0, 0, 1.0);
    b.set(1, 1, 0.0);
    b.set(2, 2, 1.0);
    auto lu = BandedLU::factor(b);
    CHECK_FALSE(lu.has_value());
}

TEST_CASE("tridiag inertia counts eigenvalues of the Dirichlet Laplacian") {
    // -u'' on (0,1) with m interior nodes: eigenvalues 4/h^2 sin^2(k pi h/2)
    int m = 63;
    double h = 1.0 / (m + 1);
    std::vector<double> diag(m, 2.0 / (h * h)), off(m - 1, -1.0 / (h * h));
    auto eig = [&](int k) { return 4.0 / (h * h) * std::pow(std::sin(k * M_PI * h / 2.0), 2); };
    CHECK(tridiag_count_below(diag, off, eig(1) - 1e-6) == 0);
    CHECK(tridiag_count_below(diag, off, eig(1) + 1e-6) == 1);
    CHECK(tridiag_count_below(diag, off, eig(3) + 1e-6) == 3);
    CHECK(tridiag_count_below(diag, off, 0.0) == 0);
}

TEST_CASE("adaptive_simpson") {
    double v = adaptive_simpson([](double x) { return std::exp(x); }, 0.0, 1.0, 1e-12);
    CHECK(v == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-11));
    double w = adaptive_simpson([](double x) { return 1.0 / (1.0 + x * x); }, 0.0, 1.0, 1e-12);
    CHECK(w == doctest::Approx(M_PI / 4.0).epsilon(1e-10));
    CHECK(adaptive_simpson([](double) { return 1.0; }, 2.0, 2.0, 1e-12) == doctest::Approx(0.0));
}
