#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace entrolip {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Axis-aligned box, the domain of a potential and the extent of its
/// quadrature grid.
struct Box {
    Vector lo;
    Vector hi;

    int dim() const { return static_cast<int>(lo.size()); }

    bool contains(const Vector& x) const {
        if (x.size() != lo.size()) return false;
        return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
    }

    double max_width() const { return (hi - lo).maxCoeff(); }
};

// log(sum_i exp(v_i)) with the usual max shift; -inf for empty input.
inline double log_sum_exp(const Vector& v) {
    if (v.size() == 0) return -std::numeric_limits<double>::infinity();
    const double c = v.maxCoeff();
    if (!std::isfinite(c)) return c;
    return c + std::log((v.array() - c).exp().sum());
}

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Eigenvalues of a (nearly) symmetric matrix, ascending.
inline Vector sym_eigenvalues(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("sym_eigenvalues: eigensolver failed");
    return es.eigenvalues();
}

inline double lambda_min(const Matrix& m) { return sym_eigenvalues(m).minCoeff(); }
inline double lambda_max(const Matrix& m) { return sym_eigenvalues(m).maxCoeff(); }

// Inverse of an SPD matrix through its eigendecomposition, with a
// condition-number guard.
inline Matrix spd_inverse(const Matrix& m, double max_condition = 1e12) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
    if (es.info() != Eigen::Success)
        throw std::runtime_error("spd_inverse: eigensolver failed");
    const Vector ev = es.eigenvalues();
    if (ev.minCoeff() <= 0.0)
        throw std::invalid_argument("spd_inverse: matrix not positive definite (lambda_min = " +
                                    std::to_string(ev.minCoeff()) + ")");
    if (ev.maxCoeff() / ev.minCoeff() > max_condition)
        throw std::invalid_argument("spd_inverse: condition number above guard");
    return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace entrolip
