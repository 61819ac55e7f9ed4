#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "entrolip/common.hpp"
#include "entrolip/measures.hpp"
#include "entrolip/sinkhorn.hpp"

namespace entrolip {

enum class Side { given_x, given_y };

/// Conditional coupling at a query point: weights over the opposite
/// support, w_j proportional to q_j * exp((g_j - c(x, y_j)) / eps).
struct ConditionalLaw {
    Vector query;
    Side side = Side::given_x;
    Vector weights;
    const DualPotentials* duals = nullptr;
};

inline ConditionalLaw conditional_law(const DualPotentials& duals, const Vector& x, Side side) {
    const DiscreteMeasure& opposite = side == Side::given_x ? duals.target : duals.source;
    const Vector& dual = side == Side::given_x ? duals.g : duals.f;

    const int m = opposite.size();
    Vector logw(m);
    for (int j = 0; j < m; ++j) {
        const double c = transport_cost(x, opposite.points.row(j).transpose());
        logw(j) = std::log(opposite.weights(j)) + (dual(j) - c) / duals.epsilon;
    }
    const double logz = log_sum_exp(logw);
    // If even the largest unnormalized weight underflows to zero in the
    // linear domain, the conditional law is an extrapolation artifact.
    if (!std::isfinite(logz) || logz < std::log(std::numeric_limits<double>::min()))
        throw std::runtime_error(
            "conditional_law: all weights underflow; query point too far outside the support box");

    ConditionalLaw law;
    law.query = x;
    law.side = side;
    law.weights = (logw.array() - logz).exp();
    law.weights /= law.weights.sum();
    law.duals = &duals;
    return law;
}

/// Barycentric projection: conditional mean of the opposite coordinate.
inline Vector entropic_map(const DualPotentials& duals, const Vector& x,
                           Side side = Side::given_x) {
    const ConditionalLaw law = conditional_law(duals, x, side);
    const DiscreteMeasure& opposite = side == Side::given_x ? duals.target : duals.source;
    return opposite.points.transpose() * law.weights;
}

/// Hessian of the entropic Brenier potential via the covariance
/// representation: eps^{-1} * Cov of the conditional law.
inline Matrix entropic_hessian(const DualPotentials& duals, const Vector& x,
                               Side side = Side::given_x) {
    const ConditionalLaw law = conditional_law(duals, x, side);
    const DiscreteMeasure& opposite = side == Side::given_x ? duals.target : duals.source;

    const Vector mu = opposite.points.transpose() * law.weights;
    const int d = opposite.dim();
    Matrix cov = Matrix::Zero(d, d);
    for (int j = 0; j < opposite.size(); ++j) {
        const Vector c = opposite.points.row(j).transpose() - mu;
        cov.noalias() += law.weights(j) * c * c.transpose();
    }
    return cov / duals.epsilon;
}

/// phi_eps(x) = |x|^2/2 - f_eps(x), with f_eps extended out-of-sample
/// through the dual optimality softmin against the solved g.
inline double entropic_potential(const DualPotentials& duals, const Vector& x,
                                 Side side = Side::given_x) {
    const DiscreteMeasure& opposite = side == Side::given_x ? duals.target : duals.source;
    const Vector& dual = side == Side::given_x ? duals.g : duals.f;

    Vector terms(opposite.size());
    for (int j = 0; j < opposite.size(); ++j) {
        const double c = transport_cost(x, opposite.points.row(j).transpose());
        terms(j) = std::log(opposite.weights(j)) + (dual(j) - c) / duals.epsilon;
    }
    const double lse = log_sum_exp(terms);
    if (!std::isfinite(lse))
        throw std::runtime_error("entropic_potential: softmin underflow at the query point");
    const double f_at_x = -duals.epsilon * lse;
    return 0.5 * x.squaredNorm() - f_at_x;
}

/// Hessian of -log of the conditional density at y, valid when the
/// target side was discretized from exp(-W):
///   eps^{-1} hess(psi_eps)(y) + hess(W)(y).
inline Matrix conditional_logdensity_hessian(const DualPotentials& duals, const Vector& y,
                                             const Potential& w_potential) {
    if (!w_potential.domain.contains(y))
        throw std::invalid_argument("conditional_logdensity_hessian: y outside the potential domain");
    const Matrix psi_hess = entropic_hessian(duals, y, Side::given_y);
    return psi_hess / duals.epsilon + w_potential.hessian(y);
}

}  // namespace entrolip
