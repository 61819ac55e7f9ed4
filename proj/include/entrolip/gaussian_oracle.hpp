#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "entrolip/common.hpp"
#include "entrolip/measures.hpp"

namespace entrolip {

/// Symmetric square root of an SPD matrix via eigendecomposition.
inline Matrix sqrtm_spd(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
    if (es.info() != Eigen::Success) throw std::runtime_error("sqrtm_spd: eigensolver failed");
    const Vector ev = es.eigenvalues();
    if (ev.minCoeff() <= 0.0)
        throw std::invalid_argument("sqrtm_spd: input not SPD (lambda_min = " +
                                    std::to_string(ev.minCoeff()) + ")");
    return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

inline Matrix inv_sqrtm_spd(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
    if (es.info() != Eigen::Success) throw std::runtime_error("inv_sqrtm_spd: eigensolver failed");
    const Vector ev = es.eigenvalues();
    if (ev.minCoeff() <= 0.0)
        throw std::invalid_argument("inv_sqrtm_spd: input not SPD (lambda_min = " +
                                    std::to_string(ev.minCoeff()) + ")");
    return es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose();
}

/// Brenier Hessian between centered Gaussians N(0, A) -> N(0, B):
///   A^{-1/2} (A^{1/2} B A^{1/2})^{1/2} A^{-1/2}.
inline Matrix gelbrich_hessian(const Matrix& a, const Matrix& b) {
    const Matrix a_half = sqrtm_spd(a);
    const Matrix a_inv_half = inv_sqrtm_spd(a);
    const Matrix middle = sqrtm_spd(a_half * b * a_half);
    return symmetrize(a_inv_half * middle * a_inv_half);
}

/// Entropic counterpart, constant in x:
///   A^{-1/2} (A^{1/2} B A^{1/2} + (eps^2/4) I)^{1/2} A^{-1/2} - (eps/2) A^{-1}.
inline Matrix entropic_gaussian_hessian(const Matrix& a, const Matrix& b, double epsilon) {
    if (epsilon < 0.0)
        throw std::invalid_argument("entropic_gaussian_hessian: epsilon must be nonnegative");
    const int d = static_cast<int>(a.rows());
    const Matrix a_half = sqrtm_spd(a);
    const Matrix a_inv_half = inv_sqrtm_spd(a);
    const Matrix middle =
        sqrtm_spd(a_half * b * a_half + (epsilon * epsilon / 4.0) * Matrix::Identity(d, d));
    const Matrix a_inv = a_inv_half * a_inv_half;
    return symmetrize(a_inv_half * middle * a_inv_half - (epsilon / 2.0) * a_inv);
}

/// 1D Brenier map oracle F_Q^{-1}(F_P(x)), with CDFs interpolated
/// piecewise-linearly between atom midpoints.
struct QuantileMapResult {
    double value = 0.0;
    bool clamped = false;
};

namespace detail {

// CDF value at x under midpoint interpolation; atoms must be sorted.
inline double discrete_cdf(const Vector& pts, const Vector& w, double x) {
    const int n = static_cast<int>(pts.size());
    // cumulative at atom i's midpoint level: sum_{k<i} w_k + w_i/2
    double cum = 0.0;
    double prev_level = 0.0, prev_pt = pts(0);
    for (int i = 0; i < n; ++i) {
        const double level = cum + 0.5 * w(i);
        if (x <= pts(i)) {
            if (i == 0) return level;
            const double t = (x - prev_pt) / (pts(i) - prev_pt);
            return prev_level + t * (level - prev_level);
        }
        cum += w(i);
        prev_level = level;
        prev_pt = pts(i);
    }
    return prev_level + (1.0 - prev_level);  // beyond the last atom
}

inline double discrete_quantile(const Vector& pts, const Vector& w, double u) {
    const int n = static_cast<int>(pts.size());
    double cum = 0.0;
    double prev_level = 0.0, prev_pt = pts(0);
    for (int i = 0; i < n; ++i) {
        const double level = cum + 0.5 * w(i);
        if (u <= level) {
            if (i == 0) return pts(0);
            const double t = (u - prev_level) / (level - prev_level);
            return prev_pt + t * (pts(i) - prev_pt);
        }
        cum += w(i);
        prev_level = level;
        prev_pt = pts(i);
    }
    return pts(n - 1);
}

}  // namespace detail

inline QuantileMapResult quantile_map_1d(const DiscreteMeasure& source,
                                         const DiscreteMeasure& target, double x) {
    if (source.dim() != 1 || target.dim() != 1)
        throw std::invalid_argument("quantile_map_1d: 1D measures only");

    // grid discretizations are already sorted; sort defensively otherwise
    auto sorted = [](const DiscreteMeasure& m) {
        const int n = m.size();
        std::vector<int> idx(n);
        for (int i = 0; i < n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(),
                  [&](int a, int b) { return m.points(a, 0) < m.points(b, 0); });
        Vector pts(n), w(n);
        for (int i = 0; i < n; ++i) {
            pts(i) = m.points(idx[i], 0);
            w(i) = m.weights(idx[i]);
        }
        return std::make_pair(pts, w);
    };
    const auto [sp, sw] = sorted(source);
    const auto [tp, tw] = sorted(target);

    QuantileMapResult r;
    double xq = x;
    if (x < sp(0)) {
        xq = sp(0);
        r.clamped = true;
    } else if (x > sp(sp.size() - 1)) {
        xq = sp(sp.size() - 1);
        r.clamped = true;
    }
    const double u = detail::discrete_cdf(sp, sw, xq);
    r.value = detail::discrete_quantile(tp, tw, std::min(1.0, std::max(0.0, u)));
    return r;
}

}  // namespace entrolip
