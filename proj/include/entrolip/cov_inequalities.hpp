#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

#include "entrolip/common.hpp"
#include "entrolip/measures.hpp"

namespace entrolip {

enum class CovInequality { brascamp_lieb, cramer_rao };

struct PsdMarginReport {
    CovInequality inequality = CovInequality::brascamp_lieb;
    Matrix lhs;
    Matrix rhs;
    double margin = 0.0;  // lambda_min of the correctly-signed difference
    double slack = 0.0;

    bool pass() const { return margin >= -slack; }
};

inline Matrix covariance_of(const DiscreteMeasure& m) {
    if (m.size() == 0) throw std::invalid_argument("covariance_of: empty measure");
    return m.covariance();
}

namespace detail {

// Quadrature expectation of a matrix-valued integrand under exp(-V).
template <typename F>
Matrix expectation(const Potential& p, const DiscreteMeasure& m, F&& integrand) {
    const int d = p.dim;
    Matrix acc = Matrix::Zero(d, d);
    for (int i = 0; i < m.size(); ++i)
        acc.noalias() += m.weights(i) * integrand(Vector(m.points.row(i).transpose()));
    return acc;
}

}  // namespace detail

/// Cov(X) <= E[(hess V)^{-1}] for strictly log-concave exp(-V).
inline PsdMarginReport brascamp_lieb_check(const Potential& p, int resolution, double slack) {
    if (p.alpha <= 0.0)
        throw std::invalid_argument("brascamp_lieb_check: requires alpha > 0 (strict log-concavity)");
    const DiscreteMeasure m = discretize(p, resolution);
    PsdMarginReport rep;
    rep.inequality = CovInequality::brascamp_lieb;
    rep.lhs = covariance_of(m);
    rep.rhs = detail::expectation(p, m, [&](const Vector& x) { return spd_inverse(p.hessian(x)); });
    rep.margin = lambda_min(symmetrize(rep.rhs - rep.lhs));
    rep.slack = slack;
    return rep;
}

/// Cov(X) >= (E[hess V])^{-1}.
inline PsdMarginReport cramer_rao_check(const Potential& p, int resolution, double slack) {
    const DiscreteMeasure m = discretize(p, resolution);
    PsdMarginReport rep;
    rep.inequality = CovInequality::cramer_rao;
    rep.lhs = covariance_of(m);
    const Matrix mean_hess = detail::expectation(p, m, [&](const Vector& x) { return p.hessian(x); });
    rep.rhs = spd_inverse(mean_hess);
    rep.margin = lambda_min(symmetrize(rep.lhs - rep.rhs));
    rep.slack = slack;
    return rep;
}

/// || E[grad V (x) grad V] - E[hess V] ||_F, the integration-by-parts
/// identity behind the Cramer-Rao proof; vanishes up to truncation.
inline double integration_by_parts_check(const Potential& p, int resolution) {
    if (p.alpha <= 0.0)
        throw std::invalid_argument("integration_by_parts_check: requires alpha > 0");
    const DiscreteMeasure m = discretize(p, resolution);
    const Matrix outer = detail::expectation(p, m, [&](const Vector& x) {
        const Vector g = p.gradient(x);
        return Matrix(g * g.transpose());
    });
    const Matrix mean_hess = detail::expectation(p, m, [&](const Vector& x) { return p.hessian(x); });
    return (outer - mean_hess).norm();
}

}  // namespace entrolip
