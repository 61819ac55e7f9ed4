#include <catch_amalgamated.hpp>

#include "entrolip/bounds.hpp"
#include "entrolip/gaussian_oracle.hpp"
#include "entrolip/measures.hpp"

#include <random>

using namespace entrolip;
using Catch::Approx;

namespace {

Matrix diag2(double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

}  // namespace

TEST_CASE("sqrtm_spd on diagonal and dense inputs") {
    CHECK((sqrtm_spd(diag2(4.0, 9.0)) - diag2(2.0, 3.0)).norm() <= 1e-12);
    CHECK((sqrtm_spd(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).norm() <= 1e-14);

    Matrix m(2, 2);
    m << 2.0, 1.0, 1.0, 2.0;
    const Matrix s = sqrtm_spd(m);
    CHECK(s(0, 0) == Approx(1.3660254));
    CHECK(s(0, 1) == Approx(0.3660254));
    CHECK((s * s - m).norm() <= 1e-10 * m.norm());

    CHECK_THROWS_AS(sqrtm_spd(diag2(1.0, -1.0)), std::invalid_argument);
}

TEST_CASE("sqrtm involution property") {
    std::mt19937 rng(7);
    std::normal_distribution<double> dist;
    for (int trial = 0; trial < 20; ++trial) {
        Matrix r(3, 3);
        for (int i = 0; i < 9; ++i) r(i / 3, i % 3) = dist(rng);
        const Matrix spd = r * r.transpose() + 0.5 * Matrix::Identity(3, 3);
        const Matrix s = sqrtm_spd(spd);
        CHECK((sqrtm_spd(s * s) - s).norm() <= 1e-9 * (1.0 + s.norm()));
    }
}

TEST_CASE("gelbrich_hessian closed forms") {
    CHECK((gelbrich_hessian(Matrix::Identity(2, 2), diag2(4.0, 9.0)) - diag2(2.0, 3.0)).norm() <=
          1e-12);
    CHECK((gelbrich_hessian(diag2(1.0, 4.0), diag2(9.0, 16.0)) - diag2(3.0, 2.0)).norm() <= 1e-12);
    const Matrix a = diag2(2.0, 5.0);
    CHECK((gelbrich_hessian(a, a) - Matrix::Identity(2, 2)).norm() <= 1e-12);
}

TEST_CASE("gelbrich agrees with the commuting bound on commuting pairs") {
    const Matrix a = diag2(1.0, 4.0);
    const Matrix b = diag2(9.0, 16.0);
    CHECK((gelbrich_hessian(a, b) - commuting_bound(a, b)).norm() <= 1e-10);
}

TEST_CASE("entropic Gaussian Hessian closed forms") {
    const Matrix one = Matrix::Identity(1, 1);
    CHECK(entropic_gaussian_hessian(one, 4.0 * one, 1.0)(0, 0) == Approx(std::sqrt(4.25) - 0.5));
    CHECK(entropic_gaussian_hessian(one, one, 1.0)(0, 0) == Approx(std::sqrt(1.25) - 0.5));
    CHECK((entropic_gaussian_hessian(diag2(3.0, 7.0), diag2(3.0, 7.0), 0.0) -
           Matrix::Identity(2, 2))
              .norm() <= 1e-12);

    const Matrix h = entropic_gaussian_hessian(Matrix::Identity(2, 2), diag2(4.0, 9.0), 1.0);
    CHECK(h(0, 0) == Approx(std::sqrt(4.25) - 0.5));
    CHECK(h(1, 1) == Approx(std::sqrt(9.25) - 0.5));
}

TEST_CASE("entropic Gaussian Hessian decreases with epsilon and matches Gelbrich at zero") {
    const Matrix a = diag2(1.0, 4.0);
    const Matrix b = diag2(9.0, 16.0);
    CHECK((entropic_gaussian_hessian(a, b, 0.0) - gelbrich_hessian(a, b)).norm() <= 1e-12);
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const double op = lambda_max(entropic_gaussian_hessian(a, b, eps));
        CHECK(op < prev);
        prev = op;
    }
}

TEST_CASE("sharpness identity against the upper bound formula") {
    for (double beta : {0.25, 1.0, 4.0})
        for (double alpha : {0.25, 1.0, 4.0})
            for (double eps : {0.0, 0.125, 0.5, 1.0, 3.0}) {
                const Matrix a = (1.0 / beta) * Matrix::Identity(2, 2);
                const Matrix b = (1.0 / alpha) * Matrix::Identity(2, 2);
                const double op = lambda_max(entropic_gaussian_hessian(a, b, eps));
                CHECK(std::abs(op - upper_bound(beta, alpha, eps)) <= 1e-12);
            }
}

TEST_CASE("quantile map on identical measures is the identity") {
    const auto g = make_gaussian_potential(Vector::Zero(1), Matrix::Identity(1, 1));
    const auto m = discretize(g, 256);
    for (double x : {-2.0, -0.37, 0.0, 1.4}) {
        CHECK(quantile_map_1d(m, m, x).value == Approx(x).margin(1e-10));
    }
}

TEST_CASE("Gaussian quantile map doubles the coordinate") {
    Box pbox, qbox;
    pbox.lo = Vector::Constant(1, -8.0);
    pbox.hi = Vector::Constant(1, 8.0);
    qbox.lo = Vector::Constant(1, -16.0);
    qbox.hi = Vector::Constant(1, 16.0);
    const auto p = discretize(make_gaussian_potential(Vector::Zero(1), Matrix::Identity(1, 1)), 512, pbox);
    const auto q = discretize(make_gaussian_potential(Vector::Zero(1), 4.0 * Matrix::Identity(1, 1)), 512, qbox);
    CHECK(quantile_map_1d(p, q, 1.0).value == Approx(2.0).margin(2e-2));
    CHECK(quantile_map_1d(p, q, 0.0).value == Approx(0.0).margin(1e-10));
    CHECK(quantile_map_1d(p, q, -0.5).value == Approx(-1.0).margin(2e-2));
}

TEST_CASE("quantile map is monotone and clamps out-of-range queries") {
    const auto p = discretize(make_perturbed_potential(1.0, 0.5, 1.0), 128);
    const auto q = discretize(make_gaussian_potential(Vector::Zero(1), Matrix::Identity(1, 1)), 128);
    double prev = -std::numeric_limits<double>::infinity();
    for (double x = -5.0; x <= 5.0; x += 0.25) {
        const double y = quantile_map_1d(p, q, x).value;
        CHECK(y >= prev);
        prev = y;
    }
    const auto clamped = quantile_map_1d(p, q, 1e9);
    CHECK(clamped.clamped);
}
