#pragma once

// Dense strictly convex quadratic programming:
//
//     minimize    1/2 u'Hu + f'u
//     subject to  G u <= g,   lb <= u <= ub
//
// solved with the Goldfarb-Idnani dual active-set method. The method starts
// at the unconstrained minimizer and adds the most violated constraint one at
// a time, keeping stationarity and dual feasibility throughout. It terminates
// in finitely many steps with either the exact active set or a proof that the
// constraint being added cannot be satisfied (primal infeasibility).
//
// Factors are kept as J = L^-T Q with Q orthogonal, so J' H J = I, together
// with the upper-triangular R satisfying J' N_active = [R; 0]. Both are
// updated with Givens rotations when constraints enter or leave.

#include <chrono>
#include <cmath>
#include <limits>
#include <string_view>
#include <vector>

#include "pssmpc/linalg.hpp"

namespace pssmpc {

struct QpProblem {
    Matrix H;  // p x p, symmetric positive definite
    Vector f;  // p
    Matrix G;  // z x p
    Vector g;  // z
    Vector lb; // p, entries may be -inf
    Vector ub; // p, entries may be +inf

    /// Problem with no inequality rows and infinite bounds.
    static QpProblem unconstrained(Matrix H, Vector f) {
        const auto p = f.size();
        QpProblem prob{std::move(H), std::move(f), Matrix(0, p), Vector(0),
                       Vector::Constant(p, -std::numeric_limits<double>::infinity()),
                       Vector::Constant(p, std::numeric_limits<double>::infinity())};
        return prob;
    }
};

enum class QpStatus { Optimal, Infeasible, MaxIterations };

[[nodiscard]] constexpr std::string_view to_string(QpStatus s) {
    switch (s) {
        case QpStatus::Optimal: return "Optimal";
        case QpStatus::Infeasible: return "Infeasible";
        case QpStatus::MaxIterations: return "MaxIterations";
    }
    return "Unknown";
}

struct QpSettings {
    double tol_primal{1e-6};
    double tol_dual{1e-6};
    int max_iter{200000};
};

struct QpSolution {
    Vector u_star;
    double objective{0.0};
    QpStatus status{QpStatus::MaxIterations};
    double primal_residual{0.0};  // max violation scaled by 1 + ||g||_inf
    double dual_residual{0.0};    // stationarity residual scaled by 1 + ||f||_inf
    Vector lambda_ineq;           // multipliers of G u <= g
    Vector lambda_box;            // signed box multipliers (positive at ub, negative at lb)
    int iterations{0};
    double solve_time_ms{0.0};
};

namespace detail {

/// Rotation (c, s) with [c s; -s c] [a; b] = [hypot(a,b); 0].
inline void givens(double a, double b, double& c, double& s) {
    const double r = std::hypot(a, b);
    if (r == 0.0) {
        c = 1.0;
        s = 0.0;
        return;
    }
    c = a / r;
    s = b / r;
}

inline void rotate_columns(Matrix& J, Eigen::Index i, Eigen::Index j, double c, double s) {
    const Vector ci = J.col(i);
    J.col(i) = c * ci + s * J.col(j);
    J.col(j) = -s * ci + c * J.col(j);
}

}  // namespace detail

/// Scaled residuals of a candidate point. Exposed for tests and diagnostics.
struct KktResiduals {
    double primal{0.0};
    double dual{0.0};
};

[[nodiscard]] inline KktResiduals kkt_residuals(const QpProblem& prob, const Vector& u,
                                                const Vector& lambda_ineq, const Vector& lambda_box) {
    double viol = 0.0;
    if (prob.G.rows() > 0) viol = std::max(viol, (prob.G * u - prob.g).maxCoeff());
    viol = std::max(viol, (prob.lb - u).maxCoeff());
    viol = std::max(viol, (u - prob.ub).maxCoeff());
    const double g_scale = 1.0 + (prob.g.size() > 0 ? prob.g.cwiseAbs().maxCoeff() : 0.0);

    const Matrix Hs = 0.5 * (prob.H + prob.H.transpose());
    Vector grad = Hs * u + prob.f + lambda_box;
    if (prob.G.rows() > 0) grad += prob.G.transpose() * lambda_ineq;
    const double f_scale = 1.0 + (prob.f.size() > 0 ? prob.f.cwiseAbs().maxCoeff() : 0.0);
    return {std::max(0.0, viol) / g_scale, grad.cwiseAbs().maxCoeff() / f_scale};
}

/// Solves a dense strictly convex QP. Deterministic for identical inputs.
/// Throws NonFiniteInput for NaN/inf data (infinite bounds are allowed),
/// DimensionMismatch for inconsistent shapes and DomainError when H is not
/// positive definite.
[[nodiscard]] inline QpSolution qp_solve(const QpProblem& prob, const QpSettings& settings = {}) {
    const auto start = std::chrono::steady_clock::now();
    const Eigen::Index p = prob.f.size();
    const Eigen::Index z = prob.G.rows();
    detail::require_dims(prob.H.rows() == p && prob.H.cols() == p, "qp_solve: H must be p x p");
    detail::require_dims(prob.G.cols() == p || z == 0, "qp_solve: G must have p columns");
    detail::require_dims(prob.g.size() == z, "qp_solve: g length must match G rows");
    detail::require_dims(prob.lb.size() == p && prob.ub.size() == p, "qp_solve: bounds must have length p");
    require_finite(prob.H, "qp_solve: H");
    require_finite(prob.f, "qp_solve: f");
    require_finite(prob.G, "qp_solve: G");
    require_finite(prob.g, "qp_solve: g");
    if (prob.lb.array().isNaN().any() || prob.ub.array().isNaN().any() ||
        (prob.lb.array() == std::numeric_limits<double>::infinity()).any() ||
        (prob.ub.array() == -std::numeric_limits<double>::infinity()).any())
        throw NonFiniteInput("qp_solve: invalid bound entry");
    if ((prob.lb.array() > prob.ub.array()).any()) throw DomainError("qp_solve: lb > ub");

    const Matrix H = 0.5 * (prob.H + prob.H.transpose());
    Eigen::LLT<Matrix> llt(H);
    if (llt.info() != Eigen::Success) throw DomainError("qp_solve: H is not positive definite");

    // Constraints in the form n_i' u >= b_i. Rows 0..z-1 come from G, then
    // finite upper bounds, then finite lower bounds.
    struct Row {
        Eigen::Index source;  // G row, or p-index for bounds
        int kind;             // 0 = G, 1 = ub, 2 = lb
    };
    std::vector<Row> rows;
    rows.reserve(static_cast<std::size_t>(z + 2 * p));
    for (Eigen::Index i = 0; i < z; ++i) rows.push_back({i, 0});
    for (Eigen::Index k = 0; k < p; ++k)
        if (std::isfinite(prob.ub(k))) rows.push_back({k, 1});
    for (Eigen::Index k = 0; k < p; ++k)
        if (std::isfinite(prob.lb(k))) rows.push_back({k, 2});
    const auto n_rows = static_cast<Eigen::Index>(rows.size());

    Matrix N(p, n_rows);
    Vector b(n_rows);
    for (Eigen::Index c = 0; c < n_rows; ++c) {
        const Row& r = rows[static_cast<std::size_t>(c)];
        N.col(c).setZero();
        if (r.kind == 0) {
            N.col(c) = -prob.G.row(r.source).transpose();
            b(c) = -prob.g(r.source);
        } else if (r.kind == 1) {
            N(r.source, c) = -1.0;
            b(c) = -prob.ub(r.source);
        } else {
            N(r.source, c) = 1.0;
            b(c) = prob.lb(r.source);
        }
    }
    const Vector n_norm = N.colwise().norm().transpose();

    // J = L^-T
    Matrix J = llt.matrixU().solve(Matrix::Identity(p, p));
    Matrix R = Matrix::Zero(p, p);
    Vector x = -llt.solve(prob.f);
    std::vector<Eigen::Index> active;
    std::vector<double> u;  // multipliers of active constraints
    std::vector<char> is_active(static_cast<std::size_t>(n_rows), 0);

    const double viol_tol = 1e-3 * settings.tol_primal;
    const double dep_tol = 1e-12;

    auto drop = [&](std::size_t k) {
        const auto q = static_cast<Eigen::Index>(active.size());
        is_active[static_cast<std::size_t>(active[k])] = 0;
        for (Eigen::Index col = static_cast<Eigen::Index>(k); col + 1 < q; ++col)
            R.col(col).head(q) = R.col(col + 1).head(q);
        R.col(q - 1).setZero();
        for (Eigen::Index j = static_cast<Eigen::Index>(k); j + 1 < q; ++j) {
            double c = 1.0, s = 0.0;
            detail::givens(R(j, j), R(j + 1, j), c, s);
            for (Eigen::Index col = j; col < q - 1; ++col) {
                const double a = R(j, col), bb = R(j + 1, col);
                R(j, col) = c * a + s * bb;
                R(j + 1, col) = -s * a + c * bb;
            }
            detail::rotate_columns(J, j, j + 1, c, s);
        }
        R.row(q - 1).setZero();
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(k));
        u.erase(u.begin() + static_cast<std::ptrdiff_t>(k));
    };

    QpSolution sol;
    sol.status = QpStatus::MaxIterations;
    int iter = 0;
    bool done = false;
    while (!done && iter < settings.max_iter) {
        // Step 1: pick the most violated inactive constraint.
        Eigen::Index pick = -1;
        double worst = 0.0;
        for (Eigen::Index c = 0; c < n_rows; ++c) {
            if (is_active[static_cast<std::size_t>(c)] || n_norm(c) == 0.0) {
                if (n_norm(c) == 0.0 && b(c) > viol_tol * (1.0 + std::abs(b(c)))) {
                    sol.status = QpStatus::Infeasible;  // 0 >= b with b > 0
                    done = true;
                    break;
                }
                continue;
            }
            const double slack = N.col(c).dot(x) - b(c);
            if (slack >= -viol_tol * (1.0 + std::abs(b(c)))) continue;
            const double scaled = slack / n_norm(c);
            if (scaled < worst) {
                worst = scaled;
                pick = c;
            }
        }
        if (done) break;
        if (pick < 0) {
            sol.status = QpStatus::Optimal;
            break;
        }

        // Step 2: move towards satisfying constraint `pick`.
        double u_new = 0.0;
        while (iter < settings.max_iter) {
            ++iter;
            const auto q = static_cast<Eigen::Index>(active.size());
            const Vector np = N.col(pick);
            Vector d = J.transpose() * np;
            const double d2_norm = d.tail(p - q).norm();
            const bool has_primal_step = d2_norm > dep_tol * n_norm(pick) * (1.0 + J.norm());
            Vector zdir = Vector::Zero(p);
            if (has_primal_step) zdir = J.rightCols(p - q) * d.tail(p - q);
            Vector r(q);
            if (q > 0)
                r = R.topLeftCorner(q, q).triangularView<Eigen::Upper>().solve(d.head(q));

            double t1 = std::numeric_limits<double>::infinity();
            std::size_t k_drop = 0;
            for (Eigen::Index j = 0; j < q; ++j) {
                if (r(j) > 0.0) {
                    const double ratio = u[static_cast<std::size_t>(j)] / r(j);
                    if (ratio < t1) {
                        t1 = ratio;
                        k_drop = static_cast<std::size_t>(j);
                    }
                }
            }
            const double slack = np.dot(x) - b(pick);
            double t2 = std::numeric_limits<double>::infinity();
            if (has_primal_step) {
                const double curvature = zdir.dot(np);
                if (curvature > 0.0) t2 = std::max(0.0, -slack / curvature);
            }
            const double t = std::min(t1, t2);
            if (!std::isfinite(t)) {
                sol.status = QpStatus::Infeasible;
                done = true;
                break;
            }
            for (Eigen::Index j = 0; j < q; ++j) u[static_cast<std::size_t>(j)] -= t * r(j);
            u_new += t;
            if (!std::isfinite(t2)) {
                drop(k_drop);
                continue;
            }
            x += t * zdir;
            if (t2 <= t1) {
                // Full step: constraint becomes active.
                for (Eigen::Index i = p - 1; i > q; --i) {
                    double c = 1.0, s = 0.0;
                    detail::givens(d(i - 1), d(i), c, s);
                    const double a = d(i - 1);
                    d(i - 1) = c * a + s * d(i);
                    d(i) = 0.0;
                    detail::rotate_columns(J, i - 1, i, c, s);
                }
                R.col(q).head(q + 1) = d.head(q + 1);
                active.push_back(pick);
                u.push_back(u_new);
                is_active[static_cast<std::size_t>(pick)] = 1;
                break;
            }
            drop(k_drop);
        }
    }

    sol.iterations = iter;
    sol.u_star = x;
    sol.objective = 0.5 * x.dot(H * x) + prob.f.dot(x);
    sol.lambda_ineq = Vector::Zero(z);
    sol.lambda_box = Vector::Zero(p);
    for (std::size_t a = 0; a < active.size(); ++a) {
        const Row& r = rows[static_cast<std::size_t>(active[a])];
        if (r.kind == 0) sol.lambda_ineq(r.source) += u[a];
        else if (r.kind == 1) sol.lambda_box(r.source) += u[a];
        else sol.lambda_box(r.source) -= u[a];
    }
    const KktResiduals res = kkt_residuals(prob, x, sol.lambda_ineq, sol.lambda_box);
    sol.primal_residual = res.primal;
    sol.dual_residual = res.dual;
    if (sol.status == QpStatus::Optimal &&
        (res.primal > settings.tol_primal || res.dual > settings.tol_dual))
        sol.status = QpStatus::MaxIterations;
    sol.solve_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return sol;
}

}  // namespace pssmpc
