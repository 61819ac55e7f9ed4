#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "entrolip/common.hpp"
#include "entrolip/measures.hpp"

namespace entrolip {

// Quadratic cost with the 1/2 factor. Every downstream formula assumes it.
inline double transport_cost(const Vector& x, const Vector& y) {
    return 0.5 * (x - y).squaredNorm();
}

/// Solved entropic dual pair on two discrete supports, normalized so
/// that sum_i p_i f_i = sum_j q_j g_j.
struct DualPotentials {
    Vector f;
    Vector g;
    double epsilon = 0.0;
    DiscreteMeasure source;
    DiscreteMeasure target;
    int iterations = 0;
    double final_marginal_error = 0.0;
    std::vector<double> error_trace;
};

struct NonConvergenceError : std::runtime_error {
    NonConvergenceError(std::string msg, DualPotentials last_iterate)
        : std::runtime_error(std::move(msg)), last(std::move(last_iterate)) {}
    DualPotentials last;
};

struct SolveOptions {
    bool epsilon_scaling = true;       // warm-start from a large epsilon
    double scaling_factor = 0.25;      // epsilon shrink per level
    double scaling_inner_tol = 1e-4;   // marginal tol at intermediate levels
    int scaling_inner_max = 2000;      // iteration cap per intermediate level
    // Above this many entries the cost matrix is evaluated on the fly.
    long cost_cache_threshold = 4096L * 4096L;
};

namespace detail {

// Half-iteration: out_i = -eps * log sum_j exp(addend_j/eps - C_ij/eps)
// where addend_j already carries eps*log(weight_j) + dual_j.
// neg_cost(i, j) = -C_ij; the column-at-a-time passes keep the memory
// access contiguous, which dominates the runtime on large caches.
inline Vector softmin_rows(const Eigen::ArrayXXd& neg_cost, const Vector& addend, double eps) {
    const double inv_eps = 1.0 / eps;
    const Eigen::Index n = neg_cost.rows();
    const Eigen::Index m = neg_cost.cols();
    Eigen::ArrayXd rowmax =
        Eigen::ArrayXd::Constant(n, -std::numeric_limits<double>::infinity());
    for (Eigen::Index j = 0; j < m; ++j)
        rowmax = rowmax.max((neg_cost.col(j) + addend(j)) * inv_eps);
    Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(n);
    for (Eigen::Index j = 0; j < m; ++j)
        acc += ((neg_cost.col(j) + addend(j)) * inv_eps - rowmax).exp();
    return (-eps * (rowmax + acc.log())).matrix();
}

inline Vector softmin_rows_streaming(const Matrix& xs, const Matrix& ys, const Vector& addend,
                                     double eps) {
    const int n = static_cast<int>(xs.rows());
    const int m = static_cast<int>(ys.rows());
    Vector out(n);
    Vector row(m);
    for (int i = 0; i < n; ++i) {
        const Vector xi = xs.row(i).transpose();
        for (int j = 0; j < m; ++j)
            row(j) = (addend(j) - transport_cost(xi, ys.row(j).transpose())) / eps;
        out(i) = -eps * log_sum_exp(row);
    }
    return out;
}

}  // namespace detail

/// Log-domain Sinkhorn on discrete marginals. Alternates the exact
/// softmin optimality conditions; converges when the total-variation
/// error of the coupling's row marginals drops below `tol` (column
/// marginals are exact after each g-update).
inline DualPotentials solve(const DiscreteMeasure& source, const DiscreteMeasure& target,
                            double epsilon, double tol, int max_iter,
                            const SolveOptions& opts = {}) {
    if (epsilon <= 0.0) throw std::invalid_argument("sinkhorn::solve: epsilon must be positive");
    if (tol <= 0.0) throw std::invalid_argument("sinkhorn::solve: tol must be positive");
    if (max_iter <= 0) throw std::invalid_argument("sinkhorn::solve: max_iter must be positive");

    const int n = source.size();
    const int m = target.size();
    const Vector logp = source.weights.array().log();
    const Vector logq = target.weights.array().log();

    const bool cache = static_cast<long>(n) * m <= opts.cost_cache_threshold;
    Eigen::ArrayXXd neg_cost;    // -C, for the f-update (rows indexed by source)
    Eigen::ArrayXXd neg_cost_t;  // -C^T, for the g-update; a stored transpose
                                 // keeps both updates on contiguous columns
    double cost_scale = 0.0;
    if (cache) {
        neg_cost.resize(n, m);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
                neg_cost(i, j) = -transport_cost(source.points.row(i).transpose(),
                                                 target.points.row(j).transpose());
        neg_cost_t = neg_cost.transpose();
        cost_scale = -neg_cost.minCoeff();
    } else {
        // crude but sufficient for choosing the scaling start
        for (int k = 0; k < source.points.cols(); ++k) {
            const double w = std::max(source.points.col(k).maxCoeff(), target.points.col(k).maxCoeff()) -
                             std::min(source.points.col(k).minCoeff(), target.points.col(k).minCoeff());
            cost_scale += 0.5 * w * w;
        }
    }

    Vector f = Vector::Zero(n);
    Vector g = Vector::Zero(m);
    std::vector<double> trace;
    int total_iter = 0;

    auto update_f = [&](double eps) {
        const Vector addend = (eps * logq.array()).matrix() + g;
        return cache ? detail::softmin_rows(neg_cost, addend, eps)
                     : detail::softmin_rows_streaming(source.points, target.points, addend, eps);
    };
    auto update_g = [&](double eps) {
        const Vector addend = (eps * logp.array()).matrix() + f;
        return cache ? detail::softmin_rows(neg_cost_t, addend, eps)
                     : detail::softmin_rows_streaming(target.points, source.points, addend, eps);
    };

    // After a g-update the row marginals are p_i * exp((f_i - F(g)_i)/eps),
    // so the next f-softmin doubles as the error estimate.
    auto run_level = [&](double eps, double level_tol, int level_max) {
        double err = std::numeric_limits<double>::infinity();
        for (int it = 0; it < level_max; ++it) {
            const Vector f_new = update_f(eps);
            err = 0.5 * (source.weights.array() *
                         (((f - f_new) / eps).array().exp() - 1.0).abs())
                            .sum();
            if (it > 0) trace.push_back(err);
            if (it > 0 && err <= level_tol) return err;
            f = f_new;
            g = update_g(eps);
            ++total_iter;
        }
        return err;
    };

    double eps_level = epsilon;
    if (opts.epsilon_scaling && cost_scale > epsilon) {
        std::vector<double> ladder;
        for (double e = cost_scale / 8.0; e > epsilon; e *= opts.scaling_factor) ladder.push_back(e);
        for (double e : ladder)  // largest epsilon first
            run_level(e, opts.scaling_inner_tol, opts.scaling_inner_max);
    }
    const double err = run_level(eps_level, tol, max_iter);

    DualPotentials duals;
    duals.f = f;
    duals.g = g;
    duals.epsilon = epsilon;
    duals.source = source;
    duals.target = target;
    duals.iterations = total_iter;
    duals.final_marginal_error = err;
    duals.error_trace = std::move(trace);

    if (err > tol) {
        throw NonConvergenceError("sinkhorn::solve: marginal error " + std::to_string(err) +
                                      " > tol after " + std::to_string(total_iter) + " iterations",
                                  std::move(duals));
    }

    // gauge fix: sum_i p_i f_i = sum_j q_j g_j
    const double shift = 0.5 * (source.weights.dot(duals.f) - target.weights.dot(duals.g));
    duals.f.array() -= shift;
    duals.g.array() += shift;
    return duals;
}

inline double plan_weight(const DualPotentials& d, int i, int j) {
    const double c = transport_cost(d.source.points.row(i).transpose(),
                                    d.target.points.row(j).transpose());
    return d.source.weights(i) * d.target.weights(j) *
           std::exp((d.f(i) + d.g(j) - c) / d.epsilon);
}

/// Primal value: transport cost plus eps times KL(pi || P (x) Q),
/// evaluated on the discrete coupling.
inline double primal_objective(const DualPotentials& d) {
    double cost_term = 0.0;
    double kl = 0.0;
    for (int i = 0; i < d.source.size(); ++i) {
        const Vector xi = d.source.points.row(i).transpose();
        for (int j = 0; j < d.target.size(); ++j) {
            const double c = transport_cost(xi, d.target.points.row(j).transpose());
            const double log_ratio = (d.f(i) + d.g(j) - c) / d.epsilon;
            const double pij = d.source.weights(i) * d.target.weights(j) * std::exp(log_ratio);
            cost_term += pij * c;
            kl += pij * log_ratio;
        }
    }
    return cost_term + d.epsilon * kl;
}

/// Dual value: <p,f> + <q,g> - eps * (total coupling mass) + eps.
/// The double sum is accumulated in the shifted log domain.
inline double dual_objective(const DualPotentials& d) {
    const int n = d.source.size(), m = d.target.size();
    Vector terms(static_cast<Eigen::Index>(n) * m);
    Eigen::Index k = 0;
    for (int i = 0; i < n; ++i) {
        const Vector xi = d.source.points.row(i).transpose();
        for (int j = 0; j < m; ++j) {
            const double c = transport_cost(xi, d.target.points.row(j).transpose());
            terms(k++) = std::log(d.source.weights(i)) + std::log(d.target.weights(j)) +
                         (d.f(i) + d.g(j) - c) / d.epsilon;
        }
    }
    const double mass = std::exp(log_sum_exp(terms));
    return d.source.weights.dot(d.f) + d.target.weights.dot(d.g) - d.epsilon * mass + d.epsilon;
}

/// Total mass of the implied coupling; 1 at convergence.
inline double coupling_mass(const DualPotentials& d) {
    double s = 0.0;
    for (int i = 0; i < d.source.size(); ++i)
        for (int j = 0; j < d.target.size(); ++j) s += plan_weight(d, i, j);
    return s;
}

}  // namespace entrolip
