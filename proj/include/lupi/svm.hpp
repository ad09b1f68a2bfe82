#pragma once

// Standard SVM and SVM+ (privileged slack model) trainers. Both compile their
// dual into a QPProblem, solve it, and recover the offsets from the KKT
// conditions of the primal.

#include "lupi/model.hpp"
#include "lupi/qp_solver.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

namespace lupi {

namespace detail {

inline void check_training_inputs(const Matrix& X, const Labels& y) {
    if (X.rows() != y.size())
        throw Error(ErrorCode::dimension_mismatch,
                    std::to_string(X.rows()) + " feature rows but " + std::to_string(y.size()) + " labels");
    if (X.rows() < 2) throw Error(ErrorCode::too_few_samples, "at least two training samples are required");
    if (X.cols() < 1) throw Error(ErrorCode::dimension_mismatch, "feature matrix has no columns");
    require_binary_labels(y);
}

inline void check_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::invalid_argument, std::string(name) + " must be positive");
}

/// Q_ij = y_i y_j K_ij
inline Matrix label_weighted(const Matrix& K, const Labels& y) {
    const Vector yd = y.cast<double>();
    return yd.asDiagonal() * K * yd.asDiagonal();
}

// The duals are solved to a tolerance relative to their own scale; with C and
// 1/gamma spanning eight decades an absolute tolerance is unreachable at one end.
inline double dual_tolerance(const QPProblem& p, double C) {
    const double hmax = p.H.size() ? p.H.cwiseAbs().maxCoeff() : 0.0;
    const double qmax = p.q.size() ? p.q.cwiseAbs().maxCoeff() : 0.0;
    return 1e-8 * std::max({1.0, qmax, hmax * C});
}

inline DualSolution solve_dual(const QPProblem& p, double C) {
    SolveOptions opts;
    opts.tol = dual_tolerance(p, C);
    DualSolution sol = solve_qp(p, opts);
    if (sol.status != SolveStatus::converged)
        throw Error(ErrorCode::solver_failure, "dual QP " + to_string(sol.status) + " (KKT residual " +
                                                   std::to_string(sol.kkt_residual) + ", tolerance " +
                                                   std::to_string(opts.tol) + ")");
    return sol;
}

/// Offset b minimizing sum_i max(0, 1 - y_i (g_i + b)); midpoint of the minimizing interval.
inline double hinge_optimal_offset(const Vector& g, const Labels& y) {
    std::vector<double> breaks(static_cast<std::size_t>(g.size()));
    for (Index i = 0; i < g.size(); ++i) breaks[static_cast<std::size_t>(i)] = y[i] > 0 ? 1.0 - g[i] : -1.0 - g[i];
    std::sort(breaks.begin(), breaks.end());
    auto loss = [&](double b) {
        double s = 0.0;
        for (Index i = 0; i < g.size(); ++i) s += std::max(0.0, 1.0 - y[i] * (g[i] + b));
        return s;
    };
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> vals(breaks.size());
    for (std::size_t k = 0; k < breaks.size(); ++k) best = std::min(best, vals[k] = loss(breaks[k]));
    const double tol = 1e-12 * std::max(1.0, best);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t k = 0; k < breaks.size(); ++k)
        if (vals[k] <= best + tol) {
            lo = std::min(lo, breaks[k]);
            hi = std::max(hi, breaks[k]);
        }
    return 0.5 * (lo + hi);
}

/// Expansion over rows whose dual weight exceeds the threshold.
inline void set_expansion(TrainedModel& m, const Matrix& X, const Labels& y, const Vector& alpha, double thr) {
    std::vector<Index> rows;
    for (Index i = 0; i < alpha.size(); ++i)
        if (alpha[i] > thr) rows.push_back(i);
    m.sv_X = select_rows(X, rows);
    m.sv_coeff.resize(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k)
        m.sv_coeff[static_cast<Index>(k)] = alpha[rows[k]] * static_cast<double>(y[rows[k]]);
}

/**
 * Dual of the privileged-slack problem over z = [alpha; beta]:
 *
 *   min 1/2 a^T Q a + 1/(2 gamma) (a + b - C)^T K* (a + b - C) - sum_i (1 - shift_i) a_i
 *   s.t. sum_i (a_i + b_i - C) = 0,  [sum_i a_i y_i = 0 if label_balance],  a, b >= 0
 *
 * `constant` is the part of the objective that does not depend on z.
 */
struct PrivilegedDual {
    QPProblem problem;
    double constant = 0.0;
};

inline PrivilegedDual privileged_dual(const Matrix& K, const Matrix& Kstar, const Labels& y, double C, double gamma,
                                      const Vector& shift, bool label_balance) {
    const Index n = y.size();
    const Matrix Ks = Kstar / gamma;
    const Vector Ks1 = Ks.rowwise().sum();
    PrivilegedDual d;
    QPProblem& p = d.problem;
    p.H.resize(2 * n, 2 * n);
    p.H.topLeftCorner(n, n) = label_weighted(K, y) + Ks;
    p.H.topRightCorner(n, n) = Ks;
    p.H.bottomLeftCorner(n, n) = Ks;
    p.H.bottomRightCorner(n, n) = Ks;
    p.q.resize(2 * n);
    p.q.head(n) = -Vector::Ones(n) + shift - C * Ks1;
    p.q.tail(n) = -C * Ks1;
    d.constant = 0.5 * C * C * Ks1.sum();
    const Index m = label_balance ? 2 : 1;
    p.A = Matrix::Zero(m, 2 * n);
    p.c = Vector::Zero(m);
    p.A.row(0).setOnes();
    p.c[0] = static_cast<double>(n) * C;
    if (label_balance) {
        p.A.row(1).head(n) = y.cast<double>().transpose();
    }
    p.lower = Vector::Zero(2 * n);
    p.upper = Vector::Constant(2 * n, std::numeric_limits<double>::infinity());
    return d;
}

/// beta = C, alpha = 0 satisfies both equality rows.
inline Vector privileged_start(Index n, double C) {
    Vector z = Vector::Zero(2 * n);
    z.tail(n).setConstant(C);
    return z;
}

struct Offsets {
    double b = 0.0;
    double b_star = 0.0;
};

/**
 * Offsets of the privileged-slack primal given the dual solution.
 * `f` is the decision value without offset, `s` the correcting value without
 * offset. b* comes from the rows with beta > thr (zero slack there), else from
 * the rows with alpha > thr (active margin), else from the smallest feasible
 * slack. b is averaged over the active-margin rows. Without such rows every b in
 * an interval is optimal: the midpoint is taken, or with `b_near_zero` the
 * point closest to zero.
 */
inline Offsets privileged_offsets(const Vector& f, const Vector& s, const Labels& y, const Vector& alpha,
                                  const Vector& beta, double thr, bool fit_b, bool b_near_zero = false) {
    auto pick = [&](double lo, double hi) { return b_near_zero && lo <= hi ? std::clamp(0.0, lo, hi) : 0.5 * (lo + hi); };
    const Index n = y.size();
    Offsets out;
    // r_i = y_i b + b* on an active margin row.
    Vector r(n);
    for (Index i = 0; i < n; ++i) r[i] = 1.0 - s[i] - y[i] * f[i];

    double sum = 0.0;
    int count = 0;
    for (Index i = 0; i < n; ++i)
        if (beta[i] > thr) {
            sum -= s[i];
            ++count;
        }
    bool have_b_star = count > 0;
    if (have_b_star) out.b_star = sum / count;

    if (!have_b_star) {
        double rp = 0.0, rm = 0.0;
        int np = 0, nm = 0;
        for (Index i = 0; i < n; ++i)
            if (alpha[i] > thr) {
                if (y[i] > 0) rp += r[i], ++np;
                else rm += r[i], ++nm;
            }
        if (fit_b && np > 0 && nm > 0) {
            out.b_star = 0.5 * (rp / np + rm / nm);
            out.b = 0.5 * (rp / np - rm / nm);
            return out;
        }
        if (!fit_b && np + nm > 0) {
            out.b_star = (rp + rm) / (np + nm);
            return out;
        }
        // Smallest b* keeping every slack and every margin constraint feasible.
        const double floor = (-s).maxCoeff();
        double P = -std::numeric_limits<double>::infinity(), M = P;
        for (Index i = 0; i < n; ++i) (y[i] > 0 ? P : M) = std::max(y[i] > 0 ? P : M, r[i]);
        if (fit_b) {
            out.b_star = std::max(floor, 0.5 * (P + M));
            out.b = pick(P - out.b_star, out.b_star - M);
        } else {
            out.b_star = std::max({floor, P, M});
        }
        return out;
    }

    if (!fit_b) return out;
    sum = 0.0;
    count = 0;
    for (Index i = 0; i < n; ++i)
        if (alpha[i] > thr) {
            const double xi = std::max(0.0, s[i] + out.b_star);
            sum += y[i] * (1.0 - xi) - f[i];
            ++count;
        }
    if (count > 0) {
        out.b = sum / count;
    } else {
        double P = -std::numeric_limits<double>::infinity(), M = P;
        for (Index i = 0; i < n; ++i) {
            const double ri = 1.0 - std::max(0.0, s[i] + out.b_star) - y[i] * f[i];
            (y[i] > 0 ? P : M) = std::max(y[i] > 0 ? P : M, ri);
        }
        out.b = pick(P, -M);
    }
    return out;
}

/// Solves the privileged dual and fills expansion, offsets and correcting record.
inline void fit_privileged(TrainedModel& m, const Matrix& X, const Matrix& Xstar, const Labels& y, double C,
                           double gamma, const KernelSpec& kernel, const KernelSpec& kernel_star, const Vector& f_source,
                           bool label_balance, bool fit_b, bool b_near_zero = false) {
    const Index n = y.size();
    const Matrix K = gram_matrix(kernel, X);
    const Matrix Kstar = gram_matrix(kernel_star, Xstar);
    Vector shift = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) shift[i] = y[i] * f_source[i];
    PrivilegedDual dual = privileged_dual(K, Kstar, y, C, gamma, shift, label_balance);

    SolveOptions opts;
    opts.tol = dual_tolerance(dual.problem, C);
    opts.initial = privileged_start(n, C);
    DualSolution sol = solve_qp(dual.problem, opts);
    if (sol.status != SolveStatus::converged)
        throw Error(ErrorCode::solver_failure, "dual QP " + to_string(sol.status) + " (KKT residual " +
                                                   std::to_string(sol.kkt_residual) + ", tolerance " +
                                                   std::to_string(opts.tol) + ")");
    const Vector alpha = sol.z.head(n).cwiseMax(0.0);
    const Vector beta = sol.z.tail(n).cwiseMax(0.0);
    const Vector eta = alpha + beta - Vector::Constant(n, C);
    const double thr = sv_threshold(C);

    const Vector ay = alpha.cwiseProduct(y.cast<double>());
    const Vector f = K * ay + f_source;
    const Vector s = Kstar * eta / gamma;
    const Offsets off = privileged_offsets(f, s, y, alpha, beta, thr, fit_b, b_near_zero);

    m.C = C;
    m.gamma_priv = gamma;
    m.kernel = kernel;
    m.bias = fit_b ? off.b : 0.0;
    set_expansion(m, X, y, alpha, thr);

    CorrectingFunction corr;
    corr.kernel = kernel_star;
    corr.bias = off.b_star;
    std::vector<Index> rows;
    for (Index i = 0; i < n; ++i)
        if (eta[i] != 0.0) rows.push_back(i);
    corr.sv_Xstar = select_rows(Xstar, rows);
    corr.coeff = select_entries(eta, rows) / gamma;
    m.correcting = std::move(corr);

    TrainingInfo info;
    info.alpha = alpha;
    info.beta = beta;
    info.dual_objective = -(sol.objective + dual.constant);
    info.kkt_residual = sol.kkt_residual;
    info.iterations = sol.iterations;
    m.training = std::move(info);
}

inline void check_privileged_inputs(const Matrix& X, const Matrix& Xstar, const Labels& y, double C, double gamma) {
    if (Xstar.rows() != X.rows())
        throw Error(ErrorCode::dimension_mismatch, std::to_string(X.rows()) + " feature rows but " +
                                                       std::to_string(Xstar.rows()) + " privileged rows");
    if (Xstar.cols() < 1) throw Error(ErrorCode::dimension_mismatch, "privileged matrix has no columns");
    check_training_inputs(X, y);
    check_positive(C, "C");
    check_positive(gamma, "gamma_priv");
}

}  // namespace detail

/// Soft-margin SVM with offset. Dual: max sum a - 1/2 a^T Q a, 0 <= a <= C, sum a_i y_i = 0.
inline TrainedModel fit_svm(const Matrix& X, const Labels& y, double C, const KernelSpec& kernel) {
    detail::check_training_inputs(X, y);
    detail::check_positive(C, "C");
    const Index n = y.size();
    const Matrix K = gram_matrix(kernel, X);
    QPProblem p;
    p.H = detail::label_weighted(K, y);
    p.q = -Vector::Ones(n);
    p.A = y.cast<double>().transpose();
    p.c = Vector::Zero(1);
    p.lower = Vector::Zero(n);
    p.upper = Vector::Constant(n, C);
    const DualSolution sol = detail::solve_dual(p, C);
    const Vector alpha = sol.z.cwiseMax(0.0).cwiseMin(C);
    const double thr = sv_threshold(C);

    const Vector g = K * alpha.cwiseProduct(y.cast<double>());
    double sum = 0.0;
    int count = 0;
    for (Index i = 0; i < n; ++i)
        if (alpha[i] > thr && alpha[i] < C - thr) {
            sum += y[i] - g[i];
            ++count;
        }

    TrainedModel m;
    m.kind = ModelKind::svm;
    m.kernel = kernel;
    m.C = C;
    m.bias = count > 0 ? sum / count : detail::hinge_optimal_offset(g, y);
    detail::set_expansion(m, X, y, alpha, thr);
    m.training = TrainingInfo{alpha, Vector(0), -sol.objective, sol.kkt_residual, sol.iterations};
    return m;
}

/// SVM with slacks modelled as a function of privileged features seen only in training.
inline TrainedModel fit_svm_plus(const Matrix& X, const Matrix& Xstar, const Labels& y, double C, double gamma_priv,
                                 const KernelSpec& kernel, const KernelSpec& kernel_star = KernelSpec::linear()) {
    detail::check_privileged_inputs(X, Xstar, y, C, gamma_priv);
    TrainedModel m;
    m.kind = ModelKind::svm_plus;
    detail::fit_privileged(m, X, Xstar, y, C, gamma_priv, kernel, kernel_star, Vector::Zero(y.size()), true, true);
    return m;
}

}  // namespace lupi
