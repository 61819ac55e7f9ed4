#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "entrolip/common.hpp"

namespace entrolip {

/// Smooth log-density oracle V with certified spectral bounds
/// alpha*I <= hessian(x) <= beta*I on its domain box. The density is
/// exp(-V), possibly unnormalized; consumers only ever use normalized
/// quadrature weights.
struct Potential {
    int dim = 0;
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;
    std::function<Matrix(const Vector&)> hessian;
    double alpha = 0.0;  // certified lower spectral bound, >= 0
    double beta = 0.0;   // certified upper spectral bound
    Box domain;
};

/// Certified curvature carried along by a discretization, so downstream
/// bound verification can cross-check supplied constants.
struct CurvatureCertificate {
    double alpha = 0.0;
    double beta = 0.0;
    std::string family;
};

/// Weighted point cloud; rows of `points` are the atoms.
struct DiscreteMeasure {
    Matrix points;   // n x d
    Vector weights;  // positive, sums to 1
    double cell_volume = 0.0;
    std::optional<CurvatureCertificate> source;

    int size() const { return static_cast<int>(points.rows()); }
    int dim() const { return static_cast<int>(points.cols()); }

    Vector mean() const { return points.transpose() * weights; }

    Matrix covariance() const {
        const Vector mu = mean();
        Matrix cov = Matrix::Zero(dim(), dim());
        for (int i = 0; i < size(); ++i) {
            const Vector c = points.row(i).transpose() - mu;
            cov.noalias() += weights(i) * c * c.transpose();
        }
        return cov;
    }
};

/// V(x) = 0.5 <x - mean, Sigma^{-1} (x - mean)>, normalizer omitted.
inline Potential make_gaussian_potential(const Vector& mean, const Matrix& covariance) {
    const int d = static_cast<int>(mean.size());
    if (covariance.rows() != d || covariance.cols() != d)
        throw std::invalid_argument("make_gaussian_potential: dimension mismatch");
    if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + covariance.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("make_gaussian_potential: covariance not symmetric");

    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(covariance));
    const Vector ev = es.eigenvalues();
    if (ev.minCoeff() <= 0.0)
        throw std::invalid_argument("make_gaussian_potential: covariance not SPD (lambda_min = " +
                                    std::to_string(ev.minCoeff()) + ")");

    const Matrix precision =
        es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();

    Potential p;
    p.dim = d;
    p.value = [mean, precision](const Vector& x) {
        const Vector c = x - mean;
        return 0.5 * c.dot(precision * c);
    };
    p.gradient = [mean, precision](const Vector& x) -> Vector { return precision * (x - mean); };
    p.hessian = [precision](const Vector&) -> Matrix { return precision; };
    p.alpha = 1.0 / ev.maxCoeff();
    p.beta = 1.0 / ev.minCoeff();

    const double radius = 10.0 * std::sqrt(ev.maxCoeff());
    p.domain.lo = mean.array() - radius;
    p.domain.hi = mean.array() + radius;
    return p;
}

/// 1D cosine-perturbed quadratic:
///   V(x) = k x^2/2 + (a/w^2) cos(w x),  V''(x) = k - a cos(w x),
/// so alpha = k - a and beta = k + a.
inline Potential make_perturbed_potential(double base_curvature, double amplitude,
                                          double frequency) {
    if (base_curvature <= 0.0 || frequency <= 0.0)
        throw std::invalid_argument("make_perturbed_potential: curvature and frequency must be positive");
    if (amplitude < 0.0 || amplitude >= base_curvature)
        throw std::invalid_argument("make_perturbed_potential: need 0 <= amplitude < base_curvature "
                                    "(strong log-concavity)");

    const double k = base_curvature, a = amplitude, w = frequency;
    Potential p;
    p.dim = 1;
    p.value = [k, a, w](const Vector& x) {
        return 0.5 * k * x(0) * x(0) + (a / (w * w)) * std::cos(w * x(0));
    };
    p.gradient = [k, a, w](const Vector& x) -> Vector {
        Vector g(1);
        g(0) = k * x(0) - (a / w) * std::sin(w * x(0));
        return g;
    };
    p.hessian = [k, a, w](const Vector& x) -> Matrix {
        Matrix h(1, 1);
        h(0, 0) = k - a * std::cos(w * x(0));
        return h;
    };
    p.alpha = k - a;
    p.beta = k + a;
    const double radius = 10.0 / std::sqrt(p.alpha);
    p.domain.lo = Vector::Constant(1, -radius);
    p.domain.hi = Vector::Constant(1, radius);
    return p;
}

/// 1D even quartic: V(x) = q x^2/2 + c x^4/4. The quartic term is
/// unbounded on the line, so beta is certified on the domain box only.
inline Potential make_quartic_potential(double quadratic, double quartic) {
    if (quadratic <= 0.0 || quartic < 0.0)
        throw std::invalid_argument("make_quartic_potential: need quadratic > 0, quartic >= 0");
    const double q = quadratic, c = quartic;
    Potential p;
    p.dim = 1;
    p.value = [q, c](const Vector& x) {
        const double t = x(0) * x(0);
        return 0.5 * q * t + 0.25 * c * t * t;
    };
    p.gradient = [q, c](const Vector& x) -> Vector {
        Vector g(1);
        g(0) = q * x(0) + c * x(0) * x(0) * x(0);
        return g;
    };
    p.hessian = [q, c](const Vector& x) -> Matrix {
        Matrix h(1, 1);
        h(0, 0) = q + 3.0 * c * x(0) * x(0);
        return h;
    };
    p.alpha = q;
    const double radius = 10.0 / std::sqrt(q);
    p.beta = q + 3.0 * c * radius * radius;
    p.domain.lo = Vector::Constant(1, -radius);
    p.domain.hi = Vector::Constant(1, radius);
    return p;
}

/// Product of independent per-axis potentials; Hessian is block (here
/// entrywise) diagonal, so the spectral certificates combine by min/max.
inline Potential make_product_potential(const std::vector<Potential>& axes) {
    if (axes.empty()) throw std::invalid_argument("make_product_potential: empty axis list");
    for (const auto& ax : axes)
        if (ax.dim != 1) throw std::invalid_argument("make_product_potential: axes must be 1D");

    const int d = static_cast<int>(axes.size());
    Potential p;
    p.dim = d;
    p.value = [axes](const Vector& x) {
        double s = 0.0;
        for (int i = 0; i < static_cast<int>(axes.size()); ++i)
            s += axes[i].value(x.segment(i, 1));
        return s;
    };
    p.gradient = [axes](const Vector& x) -> Vector {
        Vector g(x.size());
        for (int i = 0; i < static_cast<int>(axes.size()); ++i)
            g(i) = axes[i].gradient(x.segment(i, 1))(0);
        return g;
    };
    p.hessian = [axes, d](const Vector& x) -> Matrix {
        Matrix h = Matrix::Zero(d, d);
        for (int i = 0; i < d; ++i)
            h(i, i) = axes[i].hessian(x.segment(i, 1))(0, 0);
        return h;
    };
    p.alpha = axes[0].alpha;
    p.beta = axes[0].beta;
    p.domain.lo.resize(d);
    p.domain.hi.resize(d);
    for (int i = 0; i < d; ++i) {
        p.alpha = std::min(p.alpha, axes[i].alpha);
        p.beta = std::max(p.beta, axes[i].beta);
        p.domain.lo(i) = axes[i].domain.lo(0);
        p.domain.hi(i) = axes[i].domain.hi(0);
    }
    return p;
}

/// Hessian of -log((exp(-V_inner) * mixing))(y) over a discrete mixing
/// measure:
///   H(y) = E_{nu_y}[hess V(y-X)] - Cov_{nu_y}(grad V(y-X)),
/// with nu_y(x) proportional to exp(-V(y-x)) mixing(x).
inline Matrix convolved_hessian(const Potential& inner, const DiscreteMeasure& mixing,
                                const Vector& y) {
    if (!std::isfinite(inner.beta))
        throw std::invalid_argument("convolved_hessian: inner potential must have finite beta");
    if (mixing.size() == 0)
        throw std::invalid_argument("convolved_hessian: empty mixing measure");

    const int n = mixing.size();
    const int d = mixing.dim();
    Vector logw(n);
    for (int i = 0; i < n; ++i) {
        const Vector z = y - mixing.points.row(i).transpose();
        logw(i) = std::log(mixing.weights(i)) - inner.value(z);
    }
    const double logz = log_sum_exp(logw);
    if (!std::isfinite(logz))
        throw std::runtime_error("convolved_hessian: normalizer underflow at the query point");
    const Vector w = (logw.array() - logz).exp();

    Matrix mean_hess = Matrix::Zero(d, d);
    Vector mean_grad = Vector::Zero(d);
    Matrix second_grad = Matrix::Zero(d, d);
    for (int i = 0; i < n; ++i) {
        const Vector z = y - mixing.points.row(i).transpose();
        const Vector g = inner.gradient(z);
        mean_hess.noalias() += w(i) * inner.hessian(z);
        mean_grad.noalias() += w(i) * g;
        second_grad.noalias() += w(i) * g * g.transpose();
    }
    return symmetrize(mean_hess - (second_grad - mean_grad * mean_grad.transpose()));
}

namespace detail {

// Equispaced per-axis nodes, endpoints included.
inline Vector axis_nodes(double lo, double hi, int resolution) {
    return Vector::LinSpaced(resolution, lo, hi);
}

template <typename F>
void for_each_grid_point(const Box& box, int resolution, F&& f) {
    const int d = box.dim();
    if (d == 1) {
        const Vector xs = axis_nodes(box.lo(0), box.hi(0), resolution);
        Vector x(1);
        for (int i = 0; i < resolution; ++i) {
            x(0) = xs(i);
            f(x);
        }
    } else if (d == 2) {
        const Vector xs = axis_nodes(box.lo(0), box.hi(0), resolution);
        const Vector ys = axis_nodes(box.lo(1), box.hi(1), resolution);
        Vector x(2);
        for (int i = 0; i < resolution; ++i)
            for (int j = 0; j < resolution; ++j) {
                x(0) = xs(i);
                x(1) = ys(j);
                f(x);
            }
    } else {
        throw std::invalid_argument("grid scan supports dim 1 and 2 only");
    }
}

}  // namespace detail

/// Scans a resolution^dim grid of Hessian eigenvalues and checks them
/// against the declared (alpha, beta) certificate.
inline std::pair<double, double> certify_bounds(const Potential& p, int resolution) {
    if (resolution < 2) throw std::invalid_argument("certify_bounds: resolution must be >= 2");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    Vector bad_point;
    double bad_value = 0.0;
    detail::for_each_grid_point(p.domain, resolution, [&](const Vector& x) {
        const Vector ev = sym_eigenvalues(p.hessian(x));
        if ((ev.minCoeff() < p.alpha - 1e-8 || ev.maxCoeff() > p.beta + 1e-8) && bad_point.size() == 0) {
            bad_point = x;
            bad_value = ev.minCoeff() < p.alpha - 1e-8 ? ev.minCoeff() : ev.maxCoeff();
        }
        lo = std::min(lo, ev.minCoeff());
        hi = std::max(hi, ev.maxCoeff());
    });
    if (bad_point.size() != 0) {
        std::string coords;
        for (int i = 0; i < bad_point.size(); ++i)
            coords += (i ? ", " : "") + std::to_string(bad_point(i));
        throw std::runtime_error("certify_bounds: eigenvalue " + std::to_string(bad_value) +
                                 " at (" + coords + ") violates declared [alpha, beta]");
    }
    return {lo, hi};
}

/// Midpoint quadrature of exp(-V) on a uniform grid over the domain box.
/// Weights are normalized in the shifted log domain.
inline DiscreteMeasure discretize(const Potential& p, int resolution,
                                  std::optional<Box> box_override = std::nullopt) {
    if (resolution < 2) throw std::invalid_argument("discretize: resolution must be >= 2");
    if (p.alpha <= 0.0)
        throw std::invalid_argument("discretize: potential must be strongly log-concave (alpha > 0)");

    const Box box = box_override.value_or(p.domain);
    const int d = box.dim();
    const int n = d == 1 ? resolution : resolution * resolution;

    DiscreteMeasure m;
    m.points.resize(n, d);
    Vector logw(n);
    int k = 0;
    detail::for_each_grid_point(box, resolution, [&](const Vector& x) {
        m.points.row(k) = x.transpose();
        logw(k) = -p.value(x);
        ++k;
    });
    const double logz = log_sum_exp(logw);
    if (!std::isfinite(logz))
        throw std::runtime_error("discretize: all quadrature weights underflow; use a smaller box");
    m.weights = (logw.array() - logz).exp();
    m.weights /= m.weights.sum();  // kill residual roundoff

    double cell = 1.0;
    for (int i = 0; i < d; ++i) cell *= (box.hi(i) - box.lo(i)) / (resolution - 1);
    m.cell_volume = cell;
    m.source = CurvatureCertificate{p.alpha, p.beta, ""};
    return m;
}

}  // namespace entrolip
