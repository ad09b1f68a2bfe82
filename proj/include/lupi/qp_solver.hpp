#pragma once

// Dense convex QP solver for the dual problems of the margin classifiers:
//
//     minimize    1/2 z^T H z + q^T z
//     subject to  A z = c              (at most two rows)
//                 lower <= z <= upper  (lower finite, upper may be +inf)
//
// The method is a primal active-set scheme. Every iterate is feasible and the
// objective never increases. The free-variable block of H is kept as a Cholesky
// factor of (H_FF + delta I) that is updated in O(f^2) when a bound is added or
// dropped; the small shift only shapes search directions, objective and gradient
// always use H itself. On a zero-curvature face the shifted direction is
// dominated by the null-space component and the ratio test stops it at a bound.

#include "lupi/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace lupi {

struct QPProblem {
    Matrix H;
    Vector q;
    Matrix A;  ///< m x n, m in {0, 1, 2}
    Vector c;
    Vector lower;
    Vector upper;

    Index size() const { return q.size(); }
    Index equality_count() const { return A.rows(); }
};

enum class SolveStatus { converged, max_iterations, infeasible };

inline std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::max_iterations: return "max_iterations";
        case SolveStatus::infeasible: return "infeasible";
    }
    return "unknown";
}

struct DualSolution {
    Vector z;
    double objective = 0.0;
    double kkt_residual = 0.0;
    std::size_t iterations = 0;
    SolveStatus status = SolveStatus::max_iterations;
    /// Objective after every iteration of the feasible phase; non-increasing.
    std::vector<double> trace;
    /// Diagonal shift used for search directions (not applied to the objective).
    double direction_shift = 0.0;
};

struct SolveOptions {
    double tol = 1e-8;
    /// 0 selects the default of 100 n^2 capped at 1e6.
    std::size_t max_iter = 0;
    /// Starting point; repaired onto the feasible set or replaced by a phase-1 point.
    std::optional<Vector> initial;
};

inline double qp_objective(const QPProblem& p, const Vector& z) { return 0.5 * z.dot(p.H * z) + p.q.dot(z); }

namespace detail {

inline double max_abs(const Matrix& M) { return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff(); }

inline void validate_shapes(const QPProblem& p) {
    const Index n = p.q.size();
    if (n == 0) throw Error(ErrorCode::invalid_argument, "QP has no variables");
    if (p.H.rows() != n || p.H.cols() != n || p.lower.size() != n || p.upper.size() != n)
        throw Error(ErrorCode::dimension_mismatch, "QP blocks disagree on the number of variables");
    if (p.A.rows() != p.c.size() || (p.A.rows() > 0 && p.A.cols() != n))
        throw Error(ErrorCode::dimension_mismatch, "equality block has inconsistent shape");
}

inline void validate(const QPProblem& p) {
    validate_shapes(p);
    const Index n = p.q.size();
    if (p.A.rows() > 2) throw Error(ErrorCode::invalid_argument, "at most two equality constraints are supported");
    for (Index i = 0; i < n; ++i) {
        if (!std::isfinite(p.lower[i])) throw Error(ErrorCode::invalid_argument, "lower bounds must be finite");
        if (std::isnan(p.upper[i]) || p.upper[i] == -std::numeric_limits<double>::infinity())
            throw Error(ErrorCode::invalid_argument, "upper bound must be a number or +inf");
        if (p.lower[i] > p.upper[i]) throw Error(ErrorCode::invalid_argument, "lower bound exceeds upper bound");
    }
    if (!p.H.allFinite() || !p.q.allFinite() || !p.A.allFinite() || !p.c.allFinite())
        throw Error(ErrorCode::invalid_argument, "QP data must be finite");
    const double scale = std::max(1.0, max_abs(p.H));
    if (max_abs(p.H - p.H.transpose()) > 1e-10 * scale)
        throw Error(ErrorCode::invalid_argument, "H is not symmetric");
    if (p.A.rows() > 0) {
        Eigen::JacobiSVD<Matrix> svd(p.A);
        const auto& s = svd.singularValues();
        if (s[s.size() - 1] <= 1e-12 * std::max(1.0, s[0]))
            throw Error(ErrorCode::invalid_argument, "equality constraints are not of full row rank");
    }
    // PSD up to a tolerance relative to the scale of H.
    Matrix shifted = p.H;
    shifted.diagonal().array() += 1e-8 * scale;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::not_psd, "H has an eigenvalue below -1e-8 (relative)");
}

/// Minimizes a convex function of one variable on [lo, hi] by golden-section search.
template <class F>
double golden_minimize(F&& f, double lo, double hi, int iterations = 160) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < iterations && b - a > 0; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? x1 : x2;
}

enum class VarState : unsigned char { at_lower, at_upper, free };

class ActiveSetSolver {
public:
    ActiveSetSolver(const Matrix& H, const Vector& q, const Matrix& A, const Vector& lower, const Vector& upper,
                    double shift)
        : H_(H), q_(q), A_(A), lower_(lower), upper_(upper), n_(q.size()), m_(A.rows()), shift_(shift),
          L_(Matrix::Zero(q.size(), q.size())) {}

    struct Result {
        Vector z;
        std::size_t iterations = 0;
        bool finished = false;
        std::vector<double> trace;
    };

    /// Optional early exit, checked before every iteration.
    std::function<bool(const Vector&)> stop_when;

    Result run(const Vector& start, double face_tol, double drop_tol, std::size_t max_iter) {
        initialize(start);
        Result res;
        double obj = 0.5 * z_.dot(g_ + q_);
        int stall = 0;
        std::size_t degenerate_run = 0;
        bool refreshed = false;
        std::size_t since_refresh = 0;

        Vector p, nu, Hp(n_);
        // Residual before the last unblocked step; progress is judged on it because
        // near the optimum objective decreases fall below round-off long before the
        // gradient does.
        double prev_face_res = -1.0;
        for (; res.iterations < max_iter; ++res.iterations) {
            if (stop_when && stop_when(z_)) {
                res.finished = true;
                break;
            }
            if (++since_refresh >= 64) {
                g_.noalias() = H_ * z_ + q_;
                since_refresh = 0;
            }
            direction(p, nu);
            const double face_res = face_residual(nu);
            if (prev_face_res >= 0.0) {
                stall = face_res > 0.5 * prev_face_res ? stall + 1 : 0;
                if (stall == 0) refreshed = false;
                prev_face_res = -1.0;
            }
            bool face_optimal = f_ == 0 || face_res <= face_tol || stall >= 3;

            if (!face_optimal) {
                double slope = 0.0, curv = 0.0;
                auto measure = [&] {
                    Hp.noalias() = H_(Eigen::all, free_) * p;
                    slope = curv = 0.0;
                    for (Index k = 0; k < f_; ++k) {
                        slope += g_[free_[k]] * p[k];
                        curv += p[k] * Hp[free_[k]];
                    }
                };
                measure();
                if (!(slope < 0.0)) {
                    projected_gradient(p);
                    measure();
                }
                if (!(slope < 0.0)) {
                    face_optimal = true;
                } else {
                    const double pscale = p.squaredNorm() * std::max(1.0, max_diag_);
                    double t = curv > 1e-300 && curv > 1e-15 * pscale ? -slope / curv
                                                                       : std::numeric_limits<double>::infinity();
                    Index block_pos = -1;
                    const bool bland = degenerate_run > static_cast<std::size_t>(2 * n_ + 10);
                    for (Index k = 0; k < f_; ++k) {
                        const Index i = free_[k];
                        double tk = std::numeric_limits<double>::infinity();
                        if (p[k] < 0.0) tk = std::max(0.0, (lower_[i] - z_[i]) / p[k]);
                        else if (p[k] > 0.0 && std::isfinite(upper_[i])) tk = std::max(0.0, (upper_[i] - z_[i]) / p[k]);
                        if (tk < t || (bland && tk == t && block_pos >= 0 && i < free_[block_pos])) {
                            t = tk;
                            block_pos = k;
                        }
                    }
                    if (!std::isfinite(t)) throw Error(ErrorCode::unbounded, "objective is unbounded below");
                    const double decrease = t * slope + 0.5 * t * t * curv;
                    for (Index k = 0; k < f_; ++k) z_[free_[k]] += t * p[k];
                    g_.noalias() += t * Hp;
                    obj += std::min(0.0, decrease);
                    if (block_pos >= 0) {
                        const Index i = free_[block_pos];
                        if (p[block_pos] < 0.0) {
                            z_[i] = lower_[i];
                            state_[i] = VarState::at_lower;
                        } else {
                            z_[i] = upper_[i];
                            state_[i] = VarState::at_upper;
                        }
                        remove_free(block_pos);
                        degenerate_run = t == 0.0 ? degenerate_run + 1 : 0;
                        stall = 0;
                    } else {
                        degenerate_run = 0;
                        prev_face_res = face_res;
                    }
                    if (block_pos >= 0) refreshed = false;
                    res.trace.push_back(obj);
                    continue;
                }
            }

            // Face optimal: look for a bound whose multiplier has the wrong sign.
            const bool bland = degenerate_run > static_cast<std::size_t>(2 * n_ + 10);
            Index drop = -1;
            double worst = drop_tol;
            for (Index i = 0; i < n_; ++i) {
                if (state_[i] == VarState::free) continue;
                double mult = g_[i];
                for (Index r = 0; r < m_; ++r) mult += A_(r, i) * nu[r];
                const double viol = state_[i] == VarState::at_lower ? -mult : mult;
                if (viol > worst) {
                    drop = i;
                    if (bland) break;
                    worst = viol;
                }
            }
            if (drop < 0) {
                if (refreshed) {
                    res.finished = true;
                    break;
                }
                // Confirm on an exactly recomputed gradient before declaring optimality.
                g_.noalias() = H_ * z_ + q_;
                since_refresh = 0;
                refreshed = true;
                stall = 0;
                continue;
            }
            state_[drop] = VarState::free;
            append_free(drop);
            stall = 0;
            refreshed = false;
            res.trace.push_back(obj);
        }
        res.z = z_;
        return res;
    }

private:
    void initialize(const Vector& start) {
        z_ = start;
        g_.noalias() = H_ * z_ + q_;
        max_diag_ = n_ > 0 ? H_.diagonal().cwiseAbs().maxCoeff() : 0.0;
        state_.assign(static_cast<std::size_t>(n_), VarState::free);
        free_.clear();
        f_ = 0;
        for (Index i = 0; i < n_; ++i) {
            if (z_[i] <= lower_[i]) {
                z_[i] = lower_[i];
                state_[i] = VarState::at_lower;
            } else if (z_[i] >= upper_[i]) {
                z_[i] = upper_[i];
                state_[i] = VarState::at_upper;
            }
        }
        // Strictly interior variables first, then bound variables that are needed for
        // the free block of A to have full row rank.
        std::vector<Index> chosen;
        for (Index i = 0; i < n_; ++i)
            if (state_[i] == VarState::free) chosen.push_back(i);
        complete_rank(chosen);
        for (Index i : chosen) {
            state_[i] = VarState::free;
            append_free(i);
        }
    }

    void complete_rank(std::vector<Index>& chosen) const {
        if (m_ == 0) return;
        // Orthonormal basis of span{A(:, i) : i in chosen} inside R^m.
        std::vector<Vector> basis;
        auto residual_of = [&](const Vector& a) {
            Vector r = a;
            for (const auto& b : basis) r -= b.dot(r) * b;
            return r;
        };
        auto try_add = [&](const Vector& a) {
            Vector r = residual_of(a);
            const double nr = r.norm();
            if (nr > 1e-9 * std::max(1.0, a.norm())) {
                basis.push_back(r / nr);
                return true;
            }
            return false;
        };
        for (Index i : chosen) {
            if (static_cast<Index>(basis.size()) == m_) break;
            try_add(A_.col(i));
        }
        while (static_cast<Index>(basis.size()) < m_) {
            Index best = -1;
            double best_norm = 0.0;
            for (Index i = 0; i < n_; ++i) {
                if (state_[i] == VarState::free || std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
                const Vector a = A_.col(i);
                const double nr = residual_of(a).norm() / std::max(1.0, a.norm());
                if (nr > best_norm + 1e-12) {
                    best_norm = nr;
                    best = i;
                }
            }
            if (best < 0 || !try_add(A_.col(best)))
                throw Error(ErrorCode::invalid_argument, "equality constraints are not of full row rank");
            chosen.push_back(best);
        }
    }

    void append_free(Index i) {
        const Index f = f_;
        double d2 = H_(i, i) + shift_;
        if (f > 0) {
            Vector h(f);
            for (Index k = 0; k < f; ++k) h[k] = H_(free_[k], i);
            L_.topLeftCorner(f, f).triangularView<Eigen::Lower>().solveInPlace(h);
            L_.block(f, 0, 1, f) = h.transpose();
            d2 -= h.squaredNorm();
        }
        // In exact arithmetic d2 >= shift; guard against round-off.
        d2 = std::max(d2, 0.5 * shift_);
        L_(f, f) = std::sqrt(d2);
        free_.push_back(i);
        ++f_;
    }

    void remove_free(Index pos) {
        const Index f = f_;
        const Index s = f - pos - 1;
        if (s > 0) {
            // Trailing block T T^T += v v^T, then shift it up-left by one.
            Vector v = L_.block(pos + 1, pos, s, 1);
            for (Index k = 0; k < s; ++k) {
                const Index kk = pos + 1 + k;
                const double lkk = L_(kk, kk);
                const double r = std::hypot(lkk, v[k]);
                const double cc = r / lkk, ss = v[k] / lkk;
                L_(kk, kk) = r;
                for (Index i = k + 1; i < s; ++i) {
                    const Index ii = pos + 1 + i;
                    L_(ii, kk) = (L_(ii, kk) + ss * v[i]) / cc;
                    v[i] = cc * v[i] - ss * L_(ii, kk);
                }
            }
            for (Index col = 0; col < f - 1; ++col) {
                const Index src_col = col < pos ? col : col + 1;
                for (Index row = std::max(col, pos); row < f - 1; ++row) L_(row, col) = L_(row + 1, src_col);
            }
        }
        L_.row(f - 1).head(f).setZero();
        L_.col(f - 1).head(f).setZero();
        free_.erase(free_.begin() + pos);
        --f_;
    }

    // Shifted Newton direction on the current face: (H_FF + shift I) p + A_F^T nu = -g_F, A_F p = 0.
    // The Schur-complement solve is refined against the exact shifted matrix, since the
    // incrementally updated factor loses accuracy when H_FF is nearly singular.
    void direction(Vector& p, Vector& nu) {
        const Index f = f_;
        nu = Vector::Zero(m_);
        p.resize(f);
        if (f == 0) return;
        Vector gF(f);
        for (Index k = 0; k < f; ++k) gF[k] = g_[free_[k]];
        Matrix AF(m_, f);
        for (Index k = 0; k < f; ++k) AF.col(k) = A_.col(free_[k]);
        const auto Lf = L_.topLeftCorner(f, f).triangularView<Eigen::Lower>();
        Matrix W = AF.transpose();
        Lf.solveInPlace(W);
        const auto S = (W.transpose() * W).eval().ldlt();
        // Solves [M A_F^T; A_F 0][x; y] = [a; b] with M = L L^T.
        auto schur_solve = [&](const Vector& a, const Vector& b, Vector& x, Vector& y) {
            Vector w = a;
            Lf.solveInPlace(w);
            if (m_ > 0) {
                y = S.solve(W.transpose() * w - b);
                w.noalias() -= W * y;
            } else {
                y = Vector::Zero(0);
            }
            x = w;
            Lf.transpose().solveInPlace(x);
        };
        Vector e_nu;
        schur_solve(-gF, Vector::Zero(m_), p, e_nu);
        const Matrix HFF = H_(free_, free_);
        for (int pass = 0; pass < 2; ++pass) {
            Vector r_top = -gF - HFF * p - shift_ * p;
            if (m_ > 0) r_top.noalias() -= AF.transpose() * e_nu;
            const Vector r_bot = m_ > 0 ? Vector(-(AF * p)) : Vector::Zero(0);
            Vector dp, dnu;
            schur_solve(r_top, r_bot, dp, dnu);
            p += dp;
            if (m_ > 0) e_nu += dnu;
        }
        if (m_ > 0) {
            const Matrix AAt = AF * AF.transpose();
            const auto AAt_ldlt = AAt.ldlt();
            p -= AF.transpose() * AAt_ldlt.solve(AF * p);
            // Least-squares multipliers of the face are more reliable than the Schur ones once p is tiny.
            nu = AAt_ldlt.solve(-(AF * gF));
        }
    }

    // Steepest descent on the current face: minus the gradient projected onto null(A_F).
    void projected_gradient(Vector& p) const {
        p.resize(f_);
        for (Index k = 0; k < f_; ++k) p[k] = -g_[free_[k]];
        if (m_ > 0 && f_ > 0) {
            Matrix AF(m_, f_);
            for (Index k = 0; k < f_; ++k) AF.col(k) = A_.col(free_[k]);
            p -= AF.transpose() * (AF * AF.transpose()).ldlt().solve(AF * p);
        }
    }

    double face_residual(const Vector& nu) const {
        double r = 0.0;
        for (Index k = 0; k < f_; ++k) {
            const Index i = free_[k];
            double v = g_[i];
            for (Index j = 0; j < m_; ++j) v += A_(j, i) * nu[j];
            r = std::max(r, std::abs(v));
        }
        return r;
    }

    const Matrix& H_;
    const Vector& q_;
    const Matrix& A_;
    const Vector& lower_;
    const Vector& upper_;
    Index n_, m_;
    double shift_;
    double max_diag_ = 0.0;
    Matrix L_;
    Vector z_, g_;
    std::vector<VarState> state_;
    std::vector<Index> free_;
    Index f_ = 0;
};

/// Least-norm correction of A z = c over the strictly interior variables, clipped to the box.
inline void repair_equalities(const QPProblem& p, Vector& z) {
    const Index m = p.A.rows();
    if (m == 0) return;
    for (int pass = 0; pass < 4; ++pass) {
        const Vector r = p.c - p.A * z;
        if (r.cwiseAbs().maxCoeff() <= 1e-15 * std::max(1.0, p.c.cwiseAbs().maxCoeff())) return;
        std::vector<Index> interior;
        for (Index i = 0; i < z.size(); ++i)
            if (z[i] > p.lower[i] && z[i] < p.upper[i]) interior.push_back(i);
        if (interior.empty()) return;
        Matrix AF(m, static_cast<Index>(interior.size()));
        for (std::size_t k = 0; k < interior.size(); ++k) AF.col(static_cast<Index>(k)) = p.A.col(interior[k]);
        const Vector d = AF.transpose() * (AF * AF.transpose()).completeOrthogonalDecomposition().solve(r);
        for (std::size_t k = 0; k < interior.size(); ++k) {
            const Index i = interior[k];
            z[i] = std::clamp(z[i] + d[static_cast<Index>(k)], p.lower[i], p.upper[i]);
        }
    }
}

inline double equality_violation(const QPProblem& p, const Vector& z) {
    return p.A.rows() == 0 ? 0.0 : (p.A * z - p.c).cwiseAbs().maxCoeff();
}

}  // namespace detail

/**
 * Max-norm KKT residual of z: the largest of the stationarity residual (projected
 * onto the sign conditions of active bounds), the equality violation and the bound
 * violation. Equality multipliers are fitted by least squares on the strictly
 * interior variables; any direction they leave undetermined is chosen to minimize
 * the residual.
 */
inline double kkt_residual(const QPProblem& p, const Vector& z) {
    detail::validate_shapes(p);
    if (z.size() != p.size()) throw Error(ErrorCode::dimension_mismatch, "z does not match the QP size");
    const Index n = p.size(), m = p.A.rows();
    const Vector g = p.H * z + p.q;
    double bound_viol = 0.0;
    std::vector<Index> interior;
    for (Index i = 0; i < n; ++i) {
        bound_viol = std::max({bound_viol, p.lower[i] - z[i], z[i] - p.upper[i]});
        if (z[i] > p.lower[i] && z[i] < p.upper[i]) interior.push_back(i);
    }
    const double eq_viol = detail::equality_violation(p, z);

    auto stationarity = [&](const Vector& nu) {
        double r = 0.0;
        for (Index i = 0; i < n; ++i) {
            double v = g[i];
            for (Index j = 0; j < m; ++j) v += p.A(j, i) * nu[j];
            if (z[i] > p.lower[i] && z[i] < p.upper[i]) r = std::max(r, std::abs(v));
            else if (z[i] <= p.lower[i] && z[i] >= p.upper[i]) continue;  // fixed variable
            else if (z[i] <= p.lower[i]) r = std::max(r, -v);
            else r = std::max(r, v);
        }
        return r;
    };

    Vector nu = Vector::Zero(m);
    if (m > 0) {
        Matrix AF(m, static_cast<Index>(interior.size()));
        Vector gF(static_cast<Index>(interior.size()));
        for (std::size_t k = 0; k < interior.size(); ++k) {
            AF.col(static_cast<Index>(k)) = p.A.col(interior[k]);
            gF[static_cast<Index>(k)] = g[interior[k]];
        }
        Index rank = 0;
        Matrix null_dirs(m, 0);
        if (!interior.empty()) {
            Eigen::JacobiSVD<Matrix> svd(AF.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
            const auto& s = svd.singularValues();
            for (Index k = 0; k < s.size(); ++k)
                if (s[k] > 1e-10 * std::max(1.0, s[0])) ++rank;
            Vector coeffs = Vector::Zero(m);
            const Vector ut = svd.matrixU().transpose() * (-gF);
            for (Index k = 0; k < rank; ++k) coeffs[k] = ut[k] / s[k];
            nu = svd.matrixV() * coeffs;
            null_dirs = svd.matrixV().rightCols(m - rank);
        } else {
            null_dirs = Matrix::Identity(m, m);
        }
        if (null_dirs.cols() > 0) {
            // Residual is convex piecewise linear along the undetermined directions.
            const double gscale = 1.0 + g.cwiseAbs().maxCoeff() + (p.A.transpose() * nu).cwiseAbs().maxCoeff();
            auto span_for = [&](const Vector& dir) {
                const Vector coef = p.A.transpose() * dir;
                double mn = std::numeric_limits<double>::infinity();
                for (Index i = 0; i < n; ++i)
                    if (std::abs(coef[i]) > 1e-14) mn = std::min(mn, std::abs(coef[i]));
                return std::isfinite(mn) ? 4.0 * gscale / mn : 1.0;
            };
            if (null_dirs.cols() == 1) {
                const Vector d = null_dirs.col(0);
                const double T = span_for(d);
                const double t = detail::golden_minimize([&](double s) { return stationarity(nu + s * d); }, -T, T);
                nu += t * d;
            } else {
                const Vector d0 = null_dirs.col(0), d1 = null_dirs.col(1);
                const double T0 = span_for(d0), T1 = span_for(d1);
                auto inner = [&](double s0) {
                    const Vector base = nu + s0 * d0;
                    const double s1 =
                        detail::golden_minimize([&](double s) { return stationarity(base + s * d1); }, -T1, T1, 90);
                    return s1;
                };
                const double s0 = detail::golden_minimize(
                    [&](double s) {
                        const double s1 = inner(s);
                        return stationarity(nu + s * d0 + s1 * d1);
                    },
                    -T0, T0, 90);
                const double s1 = inner(s0);
                nu += s0 * d0 + s1 * d1;
            }
        }
    }
    return std::max({stationarity(nu), eq_viol, bound_viol});
}

/**
 * Solves the QP. Returns status infeasible when the equality constraints cannot
 * be met inside the box, max_iterations when the KKT residual could not be
 * certified below tol. Throws NotPSD / Unbounded / InvalidArgument on bad input.
 */
inline DualSolution solve_qp(const QPProblem& p, const SolveOptions& options) {
    detail::validate(p);
    if (!(options.tol > 0.0)) throw Error(ErrorCode::invalid_argument, "tol must be positive");
    const Index n = p.size();
    const std::size_t max_iter = options.max_iter > 0
                                     ? options.max_iter
                                     : static_cast<std::size_t>(std::min<double>(1e6, 100.0 * double(n) * double(n)));
    DualSolution sol;

    // Feasible starting point.
    Vector start = options.initial && options.initial->size() == n ? *options.initial : Vector::Zero(n);
    start = start.cwiseMax(p.lower).cwiseMin(p.upper);
    detail::repair_equalities(p, start);
    const double feas_tol = 1e-9 * std::max(1.0, p.c.size() ? p.c.cwiseAbs().maxCoeff() : 0.0);
    if (detail::equality_violation(p, start) > feas_tol) {
        // Phase 1: minimize |A z - c|^2 over the box.
        const Matrix H1 = p.A.transpose() * p.A;
        const Vector q1 = -(p.A.transpose() * p.c);
        const Matrix A0(0, n);
        const double shift1 = 1e-10 * std::max(1.0, H1.diagonal().maxCoeff());
        detail::ActiveSetSolver phase1(H1, q1, A0, p.lower, p.upper, shift1);
        // Any point with A z = c will do; the minimizer set is usually not a single point.
        phase1.stop_when = [&](const Vector& z) { return detail::equality_violation(p, z) <= 1e-3 * feas_tol; };
        Vector z0 = Vector::Zero(n).cwiseMax(p.lower).cwiseMin(p.upper);
        auto r1 = phase1.run(z0, 1e-14 * std::max(1.0, detail::max_abs(H1)), 1e-13 * std::max(1.0, q1.cwiseAbs().maxCoeff()),
                             max_iter);
        start = r1.z;
        detail::repair_equalities(p, start);
        sol.iterations += r1.iterations;
        if (detail::equality_violation(p, start) > feas_tol) {
            sol.z = start;
            sol.objective = qp_objective(p, start);
            sol.kkt_residual = kkt_residual(p, start);
            sol.status = SolveStatus::infeasible;
            return sol;
        }
    }

    const double shift = 1e-10 * std::max(1.0, p.H.diagonal().cwiseAbs().maxCoeff());
    detail::ActiveSetSolver solver(p.H, p.q, p.A, p.lower, p.upper, shift);
    auto run = solver.run(start, 0.1 * options.tol, 0.5 * options.tol, max_iter - std::min(max_iter, sol.iterations));
    sol.iterations += run.iterations;
    sol.trace = std::move(run.trace);
    sol.direction_shift = shift;
    sol.z = run.z;
    detail::repair_equalities(p, sol.z);
    sol.objective = qp_objective(p, sol.z);
    sol.kkt_residual = kkt_residual(p, sol.z);
    sol.status = run.finished && sol.kkt_residual <= options.tol ? SolveStatus::converged : SolveStatus::max_iterations;
    return sol;
}

inline DualSolution solve_qp(const QPProblem& p, double tol = 1e-8, std::size_t max_iter = 0) {
    SolveOptions o;
    o.tol = tol;
    o.max_iter = max_iter;
    return solve_qp(p, o);
}

}  // namespace lupi
