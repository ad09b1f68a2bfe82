#pragma once

// Test-only reference solvers. These do not share code with lupi::solve_qp.

#include "lupi/qp_solver.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace lupi::oracle {

/**
 * Exact minimum of a small convex QP by enumerating every face of the box
 * (each variable at its lower bound, at its upper bound, or free). On each face
 * the equality-constrained minimizer is computed from the KKT system with a
 * minimum-norm least-squares solve; consistent, box-feasible candidates are kept.
 * Exponential in n; intended for n <= 10.
 */
inline double brute_force_qp_min(const QPProblem& p, Vector* argmin = nullptr) {
    const Index n = p.size(), m = p.A.rows();
    std::vector<int> choice(static_cast<std::size_t>(n), 0);  // 0 free, 1 lower, 2 upper
    double best = std::numeric_limits<double>::infinity();
    const double scale = 1.0 + p.H.cwiseAbs().maxCoeff() + p.q.cwiseAbs().maxCoeff();
    while (true) {
        bool valid = true;
        for (Index i = 0; i < n; ++i)
            if (choice[i] == 2 && !std::isfinite(p.upper[i])) valid = false;
        if (valid) {
            std::vector<Index> free;
            Vector z = Vector::Zero(n);
            for (Index i = 0; i < n; ++i) {
                if (choice[i] == 0) free.push_back(i);
                else z[i] = choice[i] == 1 ? p.lower[i] : p.upper[i];
            }
            const Index f = static_cast<Index>(free.size());
            // [H_FF A_F^T; A_F 0] [z_F; nu] = [-q_F - H_FB z_B; c - A_B z_B]
            Matrix K = Matrix::Zero(f + m, f + m);
            Vector rhs(f + m);
            const Vector Hz = p.H * z;
            const Vector Az = m > 0 ? Vector(p.A * z) : Vector();
            for (Index a = 0; a < f; ++a) {
                for (Index b = 0; b < f; ++b) K(a, b) = p.H(free[a], free[b]);
                for (Index r = 0; r < m; ++r) K(a, f + r) = K(f + r, a) = p.A(r, free[a]);
                rhs[a] = -p.q[free[a]] - Hz[free[a]];
            }
            for (Index r = 0; r < m; ++r) rhs[f + r] = p.c[r] - Az[r];
            bool ok = true;
            if (f + m > 0) {
                const Vector sol = K.completeOrthogonalDecomposition().solve(rhs);
                if ((K * sol - rhs).cwiseAbs().maxCoeff() > 1e-8 * scale * (1.0 + sol.cwiseAbs().maxCoeff())) ok = false;
                for (Index a = 0; a < f; ++a) z[free[a]] = sol[a];
            }
            if (ok) {
                for (Index i = 0; i < n; ++i)
                    if (z[i] < p.lower[i] - 1e-9 || z[i] > p.upper[i] + 1e-9) ok = false;
                if (m > 0 && (p.A * z - p.c).cwiseAbs().maxCoeff() > 1e-8) ok = false;
            }
            if (ok) {
                const double obj = qp_objective(p, z);
                if (obj < best) {
                    best = obj;
                    if (argmin) *argmin = z;
                }
            }
        }
        Index k = 0;
        while (k < n && choice[k] == 2) choice[k++] = 0;
        if (k == n) break;
        ++choice[k];
    }
    return best;
}

/// Random convex QP with a nonempty feasible set: PSD H of random rank, 0-2
/// equality rows, mixed finite/infinite upper bounds, and a guaranteed feasible point.
inline QPProblem random_qp(std::mt19937_64& rng, Index n, Index m) {
    std::normal_distribution<double> N(0.0, 1.0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::uniform_int_distribution<Index> rank_dist(0, n);
    QPProblem p;
    const Index rank = rank_dist(rng);
    Matrix B(n, std::max<Index>(rank, 1));
    for (Index i = 0; i < B.size(); ++i) B.data()[i] = N(rng);
    if (rank == 0) B.setZero();
    p.H = B * B.transpose();
    p.H = 0.5 * (p.H + p.H.transpose());
    p.q.resize(n);
    for (Index i = 0; i < n; ++i) p.q[i] = 2.0 * N(rng);
    p.lower.resize(n);
    p.upper.resize(n);
    Vector feasible(n);
    for (Index i = 0; i < n; ++i) {
        p.lower[i] = U(rng) < 0.5 ? 0.0 : -U(rng) * 2.0;
        p.upper[i] = U(rng) < 0.35 ? std::numeric_limits<double>::infinity() : p.lower[i] + 0.5 + 3.0 * U(rng);
        const double hi = std::isfinite(p.upper[i]) ? p.upper[i] : p.lower[i] + 3.0;
        feasible[i] = p.lower[i] + U(rng) * (hi - p.lower[i]);
    }
    p.A.resize(m, n);
    for (Index i = 0; i < p.A.size(); ++i) p.A.data()[i] = U(rng) < 0.3 ? std::round(N(rng)) : N(rng);
    for (Index r = 0; r < m; ++r)
        if (p.A.row(r).cwiseAbs().maxCoeff() == 0.0) p.A(r, 0) = 1.0;
    p.c = p.A * feasible;
    // A recession direction is nonnegative on the half-infinite coordinates and zero
    // elsewhere, so positive linear terms there keep a singular problem bounded below.
    if (rank < n)
        for (Index i = 0; i < n; ++i)
            if (!std::isfinite(p.upper[i])) p.q[i] = std::abs(p.q[i]) + 0.1;
    return p;
}

}  // namespace lupi::oracle
