#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "entrolip/common.hpp"
#include "entrolip/entropic_maps.hpp"
#include "entrolip/gaussian_oracle.hpp"
#include "entrolip/measures.hpp"
#include "entrolip/sinkhorn.hpp"

namespace entrolip {

/// L_eps = (sqrt(4 beta_V / alpha_W + eps^2 beta_V^2) - eps beta_V) / 2.
/// Solves alpha_W L^2 + eps alpha_W beta_V L - beta_V = 0.
inline double upper_bound(double beta_v, double alpha_w, double epsilon) {
    if (beta_v <= 0.0 || alpha_w <= 0.0)
        throw std::invalid_argument("upper_bound: beta_V and alpha_W must be positive");
    return 0.5 * (std::sqrt(4.0 * beta_v / alpha_w + epsilon * epsilon * beta_v * beta_v) -
                  epsilon * beta_v);
}

/// ell_eps = (sqrt(4 alpha_V / beta_W + eps^2 alpha_V^2) - eps alpha_V) / 2.
inline double lower_bound(double alpha_v, double beta_w, double epsilon) {
    if (alpha_v <= 0.0 || beta_w <= 0.0)
        throw std::invalid_argument("lower_bound: alpha_V and beta_W must be positive");
    return 0.5 * (std::sqrt(4.0 * alpha_v / beta_w + epsilon * epsilon * alpha_v * alpha_v) -
                  epsilon * alpha_v);
}

/// Per-query extreme eigenvalues of the entropic Hessian against the
/// two closed-form bounds. Margins are signed: negative means violated.
struct SpectralBoundReport {
    double epsilon = 0.0;
    std::vector<Vector> queries;
    std::vector<double> lambda_max;
    std::vector<double> lambda_min;
    double upper = 0.0;  // L_eps
    double lower = 0.0;  // ell_eps
    double worst_upper_margin = 0.0;  // min over queries of L_eps - lambda_max
    double worst_lower_margin = 0.0;  // min over queries of lambda_min - ell_eps
    double slack = 0.0;

    bool pass() const { return worst_upper_margin >= -slack && worst_lower_margin >= -slack; }
};

inline SpectralBoundReport verify_hessian_bounds(const DualPotentials& duals,
                                                 const std::vector<Vector>& queries,
                                                 double beta_v, double alpha_w, double alpha_v,
                                                 double beta_w, double slack) {
    // supplied constants must be at least as loose as the certificates
    if (duals.source.source) {
        const auto& c = *duals.source.source;
        if (beta_v < c.beta - 1e-12 || alpha_v > c.alpha + 1e-12)
            throw std::invalid_argument(
                "verify_hessian_bounds: (alpha_V, beta_V) inconsistent with the source certificate");
    }
    if (duals.target.source) {
        const auto& c = *duals.target.source;
        if (beta_w < c.beta - 1e-12 || alpha_w > c.alpha + 1e-12)
            throw std::invalid_argument(
                "verify_hessian_bounds: (alpha_W, beta_W) inconsistent with the target certificate");
    }

    SpectralBoundReport rep;
    rep.epsilon = duals.epsilon;
    rep.upper = upper_bound(beta_v, alpha_w, duals.epsilon);
    rep.lower = lower_bound(alpha_v, beta_w, duals.epsilon);
    rep.slack = slack;
    rep.worst_upper_margin = std::numeric_limits<double>::infinity();
    rep.worst_lower_margin = std::numeric_limits<double>::infinity();

    for (const Vector& x : queries) {
        const Vector ev = sym_eigenvalues(entropic_hessian(duals, x));
        rep.queries.push_back(x);
        rep.lambda_min.push_back(ev.minCoeff());
        rep.lambda_max.push_back(ev.maxCoeff());
        rep.worst_upper_margin = std::min(rep.worst_upper_margin, rep.upper - ev.maxCoeff());
        rep.worst_lower_margin = std::min(rep.worst_lower_margin, ev.minCoeff() - rep.lower);
    }
    return rep;
}

/// Pointwise matrix inequalities from the bound proofs:
///   hess(phi_eps)(x) <= E_{pi^x}[(hess(psi_eps)(Y) + eps hess(W)(Y))^{-1}]
///   hess(psi_eps)(y) >= (E_{pi^y}[hess(phi_eps)(X) + eps hess(V)(X)])^{-1}
struct PsdPairReport {
    std::vector<double> first_margins;   // lambda_min(RHS - LHS) at each x query
    std::vector<double> second_margins;  // lambda_min(LHS - RHS) at each y query
    int skipped = 0;

    double worst() const {
        double w = std::numeric_limits<double>::infinity();
        for (double m : first_margins) w = std::min(w, m);
        for (double m : second_margins) w = std::min(w, m);
        return w;
    }
};

inline PsdPairReport verify_pointwise_matrix_bounds(const DualPotentials& duals, const Potential& v_potential,
                                   const Potential& w_potential,
                                   const std::vector<Vector>& queries_x,
                                   const std::vector<Vector>& queries_y) {
    PsdPairReport rep;
    const double eps = duals.epsilon;
    const int d = duals.source.dim();

    // psi-side Hessians at every target atom, reused across x queries
    const int m = duals.target.size();
    std::vector<Matrix> psi_inv_terms(m);
    for (int j = 0; j < m; ++j) {
        const Vector yj = duals.target.points.row(j).transpose();
        const Matrix psi_h = entropic_hessian(duals, yj, Side::given_y);
        psi_inv_terms[j] = spd_inverse(psi_h + eps * w_potential.hessian(yj));
    }

    for (const Vector& x : queries_x) {
        if (!v_potential.domain.contains(x)) {
            ++rep.skipped;
            continue;
        }
        const ConditionalLaw law = conditional_law(duals, x, Side::given_x);
        Matrix rhs = Matrix::Zero(d, d);
        for (int j = 0; j < m; ++j) rhs.noalias() += law.weights(j) * psi_inv_terms[j];
        const Matrix lhs = entropic_hessian(duals, x);
        rep.first_margins.push_back(lambda_min(symmetrize(rhs - lhs)));
    }

    for (const Vector& y : queries_y) {
        if (!w_potential.domain.contains(y)) {
            ++rep.skipped;
            continue;
        }
        const ConditionalLaw law = conditional_law(duals, y, Side::given_y);
        Matrix expect = Matrix::Zero(d, d);
        for (int i = 0; i < duals.source.size(); ++i) {
            const Vector xi = duals.source.points.row(i).transpose();
            expect.noalias() +=
                law.weights(i) * (entropic_hessian(duals, xi) + eps * v_potential.hessian(xi));
        }
        const Matrix rhs = spd_inverse(expect);
        const Matrix lhs = entropic_hessian(duals, y, Side::given_y);
        rep.second_margins.push_back(lambda_min(symmetrize(lhs - rhs)));
    }
    return rep;
}

/// Limit bound for commuting curvature matrices: A^{-1/2} B^{1/2}.
inline Matrix commuting_bound(const Matrix& a, const Matrix& b) {
    const double comm = (a * b - b * a).norm();
    if (comm > 1e-10 * a.norm() * b.norm())
        throw std::invalid_argument("commuting_bound: matrices do not commute");
    const Matrix result = inv_sqrtm_spd(a) * sqrtm_spd(b);
    return symmetrize(result);
}

}  // namespace entrolip
