#include <catch_amalgamated.hpp>

#include "entrolip/measures.hpp"
#include "test_helpers.hpp"

using namespace entrolip;
using Catch::Approx;

namespace {

Vector v1(double x) {
    Vector v(1);
    v(0) = x;
    return v;
}

void check_derivative_consistency(const Potential& p, const Vector& x) {
    const double scale = p.domain.max_width() / 16.0;
    const double h = 1e-5 * scale;
    const Vector g_fd = test_helpers::fd_gradient(p.value, x, h);
    const Vector g = p.gradient(x);
    REQUIRE((g - g_fd).norm() <= 1e-5 * (1.0 + g.norm()));

    const Matrix h_fd = test_helpers::fd_jacobian(p.gradient, x, h);
    const Matrix hess = p.hessian(x);
    REQUIRE((hess - hess.transpose()).norm() <= 1e-12);
    REQUIRE((hess - h_fd).norm() <= 1e-4 * (1.0 + hess.norm()));
}

}  // namespace

TEST_CASE("standard Gaussian potential") {
    const auto p = make_gaussian_potential(Vector::Zero(1), Matrix::Identity(1, 1));
    CHECK(p.value(v1(2.0)) == Approx(2.0));
    CHECK(p.alpha == Approx(1.0));
    CHECK(p.beta == Approx(1.0));
    check_derivative_consistency(p, v1(0.7));
}

TEST_CASE("anisotropic Gaussian potential spectral bounds") {
    Matrix cov = Matrix::Zero(2, 2);
    cov(0, 0) = 1.0;
    cov(1, 1) = 4.0;
    const auto p = make_gaussian_potential(Vector::Zero(2), cov);
    CHECK(p.alpha == Approx(0.25));
    CHECK(p.beta == Approx(1.0));
    Vector x(2);
    x << 0.3, -1.2;
    check_derivative_consistency(p, x);
}

TEST_CASE("wide 1D Gaussian") {
    const auto p = make_gaussian_potential(Vector::Zero(1), 4.0 * Matrix::Identity(1, 1));
    CHECK(p.value(v1(2.0)) == Approx(0.5));  // x^2 / 8
    CHECK(p.alpha == Approx(0.25));
    CHECK(p.beta == Approx(0.25));
}

TEST_CASE("non-SPD covariance is rejected") {
    Matrix cov = Matrix::Identity(2, 2);
    cov(1, 1) = -1.0;
    CHECK_THROWS_AS(make_gaussian_potential(Vector::Zero(2), cov), std::invalid_argument);
}

TEST_CASE("perturbed potential certificates") {
    const auto trivial = make_perturbed_potential(1.0, 0.0, 1.0);
    CHECK(trivial.alpha == Approx(1.0));
    CHECK(trivial.beta == Approx(1.0));
    CHECK(trivial.value(v1(1.0)) == Approx(0.5));

    const auto p = make_perturbed_potential(1.0, 0.5, 1.0);
    CHECK(p.alpha == Approx(0.5));
    CHECK(p.beta == Approx(1.5));
    check_derivative_consistency(p, v1(0.3));
    check_derivative_consistency(p, v1(-2.1));

    const auto q = make_perturbed_potential(2.0, 1.0, 2.0);
    CHECK(q.alpha == Approx(1.0));
    CHECK(q.beta == Approx(3.0));

    CHECK_THROWS_AS(make_perturbed_potential(1.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("quartic potential") {
    const auto p = make_quartic_potential(1.0, 1.0);
    CHECK(p.value(v1(1.0)) == Approx(0.75));
    CHECK(p.alpha == Approx(1.0));
    check_derivative_consistency(p, v1(1.3));
}

TEST_CASE("convolved_hessian with a point mass leaves the Hessian unchanged") {
    const auto inner = make_gaussian_potential(Vector::Zero(1), Matrix::Identity(1, 1));
    const auto delta = test_helpers::single_point_measure(0.0);
    const Matrix h = convolved_hessian(inner, delta, v1(1.7));
    CHECK(h(0, 0) == Approx(1.0));
}

TEST_CASE("convolved_hessian two-point mixing at the symmetric point") {
    const auto inner = make_gaussian_potential(Vector::Zero(1), Matrix::Identity(1, 1));
    const auto mixing = test_helpers::two_point_measure();
    // E[hess] = 1, Cov(grad) = Var(-X) = 1 under the uniform tilt at y = 0
    const Matrix h = convolved_hessian(inner, mixing, v1(0.0));
    CHECK(h(0, 0) == Approx(0.0).margin(1e-12));
}

TEST_CASE("convolved_hessian of Gaussian * Gaussian is the convolution Hessian") {
    const auto inner = make_gaussian_potential(Vector::Zero(1), Matrix::Identity(1, 1));
    const auto mixing = discretize(inner, 512);
    // N(0,1) * N(0,1) = N(0,2): Hessian of -log density is 1/2
    for (double y : {-1.0, 0.0, 0.8}) {
        const Matrix h = convolved_hessian(inner, mixing, v1(y));
        CHECK(h(0, 0) == Approx(0.5).margin(1e-4));
    }
}

TEST_CASE("convolved_hessian respects the log-smoothness bound") {
    const auto inner = make_perturbed_potential(1.0, 0.5, 1.0);
    const auto mixing = discretize(make_gaussian_potential(Vector::Zero(1), Matrix::Identity(1, 1)), 64);
    for (double y : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
        const Matrix h = convolved_hessian(inner, mixing, v1(y));
        CHECK(h(0, 0) <= inner.beta + 1e-8);
    }
}

TEST_CASE("certify_bounds brackets the declared constants") {
    const auto g = make_gaussian_potential(Vector::Zero(1), Matrix::Identity(1, 1));
    const auto [lo, hi] = certify_bounds(g, 16);
    CHECK(lo == Approx(1.0));
    CHECK(hi == Approx(1.0));

    const auto p = make_perturbed_potential(1.0, 0.5, 1.0);
    const auto [plo, phi] = certify_bounds(p, 1000);
    CHECK(plo == Approx(0.5).margin(1e-4));
    CHECK(phi == Approx(1.5).margin(1e-4));

    Matrix cov = Matrix::Zero(2, 2);
    cov(0, 0) = 1.0;
    cov(1, 1) = 4.0;
    const auto g2 = make_gaussian_potential(Vector::Zero(2), cov);
    const auto [lo2, hi2] = certify_bounds(g2, 10);
    CHECK(lo2 == Approx(0.25));
    CHECK(hi2 == Approx(1.0));
}

TEST_CASE("certify_bounds rejects a lying certificate") {
    auto p = make_perturbed_potential(1.0, 0.5, 1.0);
    p.alpha = 0.8;  // claims more curvature than the potential has
    CHECK_THROWS_AS(certify_bounds(p, 64), std::runtime_error);
}

TEST_CASE("discretize: three-point hand-normalized example") {
    const auto g = make_gaussian_potential(Vector::Zero(1), Matrix::Identity(1, 1));
    Box box;
    box.lo = Vector::Constant(1, -1.0);
    box.hi = Vector::Constant(1, 1.0);
    const auto m = discretize(g, 3, box);
    REQUIRE(m.size() == 3);
    CHECK(m.points(0, 0) == Approx(-1.0));
    CHECK(m.points(1, 0) == Approx(0.0));
    CHECK(m.weights(0) == Approx(0.2741).margin(1e-3));
    CHECK(m.weights(1) == Approx(0.4516).margin(1e-3));
    CHECK(m.weights.sum() == Approx(1.0).margin(1e-12));
}

TEST_CASE("discretize: symmetric two-point grid has equal weights") {
    const auto p = make_perturbed_potential(1.0, 0.3, 2.0);
    const auto m = discretize(p, 2);
    REQUIRE(m.size() == 2);
    CHECK(m.weights(0) == Approx(0.5));
    CHECK(m.weights(1) == Approx(0.5));
}

TEST_CASE("discretize: moments converge to analytic values") {
    const auto g = make_gaussian_potential(Vector::Zero(1), Matrix::Identity(1, 1));
    Box box;
    box.lo = Vector::Constant(1, -8.0);
    box.hi = Vector::Constant(1, 8.0);

    const auto fine = discretize(g, 512, box);
    CHECK(fine.mean()(0) == Approx(0.0).margin(1e-12));
    CHECK(fine.covariance()(0, 0) == Approx(1.0).margin(1e-3));

    // error should drop by a factor >= 3 per resolution doubling
    const double err8 = std::abs(discretize(g, 8, box).covariance()(0, 0) - 1.0);
    const double err16 = std::abs(discretize(g, 16, box).covariance()(0, 0) - 1.0);
    CHECK(err8 / err16 >= 3.0);
}

TEST_CASE("discretize rejects non-log-concave input") {
    auto p = make_gaussian_potential(Vector::Zero(1), Matrix::Identity(1, 1));
    p.alpha = 0.0;
    CHECK_THROWS_AS(discretize(p, 16), std::invalid_argument);
}
