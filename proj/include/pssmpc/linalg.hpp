#pragma once

// Dense linear-algebra helpers shared by every module: matrix aliases,
// finiteness checks, numerical rank and the discrete algebraic Riccati
// equation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "pssmpc/errors.hpp"

namespace pssmpc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

template <typename Derived>
[[nodiscard]] bool all_finite(const Eigen::DenseBase<Derived>& m) {
    return m.derived().array().isFinite().all();
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const char* what) {
    if (!all_finite(m)) throw NonFiniteInput(std::string(what) + " contains a non-finite entry");
}

/// Number of singular values above rel_tol * max(rows, cols) * sigma_max.
[[nodiscard]] inline int numerical_rank(const Matrix& m, double rel_tol = 1e-10) {
    require_finite(m, "numerical_rank: matrix");
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(m);
    const Vector& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    const double threshold = rel_tol * static_cast<double>(std::max(m.rows(), m.cols())) * sv(0);
    return static_cast<int>((sv.array() > threshold).count());
}

struct DareSettings {
    double tol{1e-10};
    int max_iter{100000};
};

/// Right-hand side of the Riccati recursion,
/// A'PA - A'PB (R + B'PB)^-1 B'PA + Q.
[[nodiscard]] inline Matrix riccati_map(const Matrix& A, const Matrix& B, const Matrix& Q,
                                        const Matrix& R, const Matrix& P) {
    const Matrix PA = P * A;
    const Matrix BtPA = B.transpose() * PA;
    const Matrix S = R + B.transpose() * P * B;
    Matrix next = A.transpose() * PA - BtPA.transpose() * S.ldlt().solve(BtPA) + Q;
    return 0.5 * (next + next.transpose());
}

/// Infinity-norm residual of the DARE at P.
[[nodiscard]] inline double dare_residual(const Matrix& A, const Matrix& B, const Matrix& Q,
                                          const Matrix& R, const Matrix& P) {
    return (riccati_map(A, B, Q, R, P) - P).cwiseAbs().rowwise().sum().maxCoeff();
}

/// Stabilizing solution of the discrete algebraic Riccati equation by value
/// iteration from P = Q. Throws MaxIterationsReached when the iteration does
/// not settle (e.g. (A, B) not stabilizable).
[[nodiscard]] inline Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& Q,
                                       const Matrix& R, const DareSettings& settings = {}) {
    const auto n = A.rows();
    detail::require_dims(A.cols() == n && B.rows() == n && Q.rows() == n && Q.cols() == n &&
                             R.rows() == B.cols() && R.cols() == B.cols(),
                         "solve_dare: inconsistent matrix dimensions");
    require_finite(A, "solve_dare: A");
    require_finite(B, "solve_dare: B");
    require_finite(Q, "solve_dare: Q");
    require_finite(R, "solve_dare: R");

    Matrix P = 0.5 * (Q + Q.transpose());
    for (int it = 0; it < settings.max_iter; ++it) {
        Matrix next = riccati_map(A, B, Q, R, P);
        if (!all_finite(next)) break;
        const double step = (next - P).cwiseAbs().rowwise().sum().maxCoeff();
        P = std::move(next);
        if (step <= 0.1 * settings.tol && dare_residual(A, B, Q, R, P) <= settings.tol) return P;
    }
    if (all_finite(P) && dare_residual(A, B, Q, R, P) <= settings.tol) return P;
    throw MaxIterationsReached("solve_dare: fixed-point iteration did not converge");
}

/// Block-diagonal matrix with `count` copies of `block`.
[[nodiscard]] inline Matrix block_diagonal(const Matrix& block, int count) {
    Matrix out = Matrix::Zero(block.rows() * count, block.cols() * count);
    for (int k = 0; k < count; ++k)
        out.block(k * block.rows(), k * block.cols(), block.rows(), block.cols()) = block;
    return out;
}

}  // namespace pssmpc
