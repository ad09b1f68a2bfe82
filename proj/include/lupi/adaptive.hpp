#pragma once

// Adaptive trainers: the final decision is f = f_source + delta, where the
// source model is frozen and only the delta expansion is learned on the target
// rows. Source margins enter the dual through lambda_i = y_i f_source(x_i).

#include "lupi/svm.hpp"

#include <memory>

namespace lupi {

struct SourceScores {
    Vector fs_values;  ///< f_source on the target training rows
    Vector lambda;     ///< y_i * fs_values_i
};

inline SourceScores source_scores(const TrainedModel& source, const Matrix& X, const Labels& y) {
    if (X.rows() != y.size())
        throw Error(ErrorCode::dimension_mismatch,
                    std::to_string(X.rows()) + " feature rows but " + std::to_string(y.size()) + " labels");
    SourceScores s;
    s.fs_values = decision_values(source, X);
    s.lambda = s.fs_values.cwiseProduct(y.cast<double>());
    return s;
}

/// The identically-zero decision function; useful as a neutral source.
inline TrainedModel zero_model(Index input_dim, const KernelSpec& kernel = KernelSpec::linear()) {
    TrainedModel m;
    m.kind = ModelKind::svm;
    m.kernel = kernel;
    m.sv_X = Matrix(0, input_dim);
    m.sv_coeff = Vector(0);
    return m;
}

namespace detail {

inline void check_scores(const SourceScores& scores, const Labels& y) {
    if (scores.fs_values.size() != y.size() || scores.lambda.size() != y.size())
        throw Error(ErrorCode::dimension_mismatch, "source scores do not match the number of training rows");
}

inline std::shared_ptr<const TrainedModel> share(const std::shared_ptr<const TrainedModel>& source) {
    if (!source) throw Error(ErrorCode::missing_source, "adaptive training needs a source model");
    return source;
}

}  // namespace detail

/**
 * Bias-free delta SVM on top of a frozen source:
 *   min 1/2 a^T Q a - sum_i (1 - lambda_i) a_i,  0 <= a <= C.
 */
inline TrainedModel fit_adaptive_svm(const Matrix& X, const Labels& y, double C, const KernelSpec& kernel,
                                     const SourceScores& scores, std::shared_ptr<const TrainedModel> source) {
    detail::check_training_inputs(X, y);
    detail::check_positive(C, "C");
    detail::check_scores(scores, y);
    const Index n = y.size();
    const Matrix K = gram_matrix(kernel, X);
    QPProblem p;
    p.H = detail::label_weighted(K, y);
    p.q = scores.lambda - Vector::Ones(n);
    p.A = Matrix(0, n);
    p.c = Vector(0);
    p.lower = Vector::Zero(n);
    p.upper = Vector::Constant(n, C);
    const DualSolution sol = detail::solve_dual(p, C);
    const Vector alpha = sol.z.cwiseMax(0.0).cwiseMin(C);

    TrainedModel m;
    m.kind = ModelKind::adaptive_svm;
    m.kernel = kernel;
    m.C = C;
    m.bias = 0.0;
    m.source = detail::share(source);
    detail::set_expansion(m, X, y, alpha, sv_threshold(C));
    m.training = TrainingInfo{alpha, Vector(0), -sol.objective, sol.kkt_residual, sol.iterations};
    return m;
}

/**
 * Delta SVM+ on top of a frozen source. With BiasMode::none the target offset is
 * zero and the only equality is sum_i (a_i + b_i - C) = 0; BiasMode::constrained
 * adds sum_i a_i y_i = 0 and fits the offset.
 */
inline TrainedModel fit_adaptive_svm_plus(const Matrix& X, const Matrix& Xstar, const Labels& y, double C,
                                          double gamma_priv, const KernelSpec& kernel, const KernelSpec& kernel_star,
                                          const SourceScores& scores, std::shared_ptr<const TrainedModel> source,
                                          BiasMode bias_mode = BiasMode::none) {
    detail::check_privileged_inputs(X, Xstar, y, C, gamma_priv);
    detail::check_scores(scores, y);
    TrainedModel m;
    m.kind = ModelKind::adaptive_svm_plus;
    m.bias_mode = bias_mode;
    m.source = detail::share(source);
    const bool constrained = bias_mode == BiasMode::constrained;
    detail::fit_privileged(m, X, Xstar, y, C, gamma_priv, kernel, kernel_star, scores.fs_values, constrained,
                           constrained, true);
    return m;
}

/// Convenience overloads computing the source scores from the source model.
inline TrainedModel fit_adaptive_svm(const Matrix& X, const Labels& y, double C, const KernelSpec& kernel,
                                     std::shared_ptr<const TrainedModel> source) {
    const auto& s = *detail::share(source);
    return fit_adaptive_svm(X, y, C, kernel, source_scores(s, X, y), std::move(source));
}

inline TrainedModel fit_adaptive_svm_plus(const Matrix& X, const Matrix& Xstar, const Labels& y, double C,
                                          double gamma_priv, const KernelSpec& kernel, const KernelSpec& kernel_star,
                                          std::shared_ptr<const TrainedModel> source,
                                          BiasMode bias_mode = BiasMode::none) {
    const auto& s = *detail::share(source);
    return fit_adaptive_svm_plus(X, Xstar, y, C, gamma_priv, kernel, kernel_star, source_scores(s, X, y),
                                 std::move(source), bias_mode);
}

}  // namespace lupi
