#pragma once

#include "lupi/kernels.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace lupi {

enum class ModelKind { svm, svm_plus, adaptive_svm, adaptive_svm_plus };

/// Whether the target-side offset of an adaptive privileged model is fixed at
/// zero or fitted under the label-balance constraint.
enum class BiasMode { none, constrained };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::svm: return "svm";
        case ModelKind::svm_plus: return "svm_plus";
        case ModelKind::adaptive_svm: return "adaptive_svm";
        case ModelKind::adaptive_svm_plus: return "adaptive_svm_plus";
    }
    return "unknown";
}

inline ModelKind model_kind_from_string(std::string_view s) {
    if (s == "svm") return ModelKind::svm;
    if (s == "svm_plus") return ModelKind::svm_plus;
    if (s == "adaptive_svm") return ModelKind::adaptive_svm;
    if (s == "adaptive_svm_plus") return ModelKind::adaptive_svm_plus;
    throw Error(ErrorCode::invalid_argument, "unknown classifier '" + std::string(s) + "'");
}

inline std::string to_string(BiasMode m) { return m == BiasMode::none ? "none" : "constrained"; }

inline BiasMode bias_mode_from_string(std::string_view s) {
    if (s == "none") return BiasMode::none;
    if (s == "constrained") return BiasMode::constrained;
    throw Error(ErrorCode::invalid_argument, "unknown bias mode '" + std::string(s) + "'");
}

inline bool is_adaptive(ModelKind k) { return k == ModelKind::adaptive_svm || k == ModelKind::adaptive_svm_plus; }
inline bool uses_privileged(ModelKind k) { return k == ModelKind::svm_plus || k == ModelKind::adaptive_svm_plus; }

/// Slack model learned in the privileged space: xi(x*) = sum_j coeff_j K*(sv_j, x*) + bias.
struct CorrectingFunction {
    Matrix sv_Xstar;
    Vector coeff;
    double bias = 0.0;
    KernelSpec kernel;

    Vector values(const Matrix& Xstar) const {
        if (Xstar.rows() == 0) return Vector(0);
        if (coeff.size() == 0) return Vector::Constant(Xstar.rows(), bias);
        return (gram_matrix(kernel, Xstar, sv_Xstar) * coeff).array() + bias;
    }
};

/// Full dual solution of the fit that produced a model. Kept in memory only.
struct TrainingInfo {
    Vector alpha;
    Vector beta;  ///< empty for kinds without privileged features
    double dual_objective = 0.0;
    double kkt_residual = 0.0;
    std::size_t iterations = 0;
};

/**
 * A trained margin classifier. The decision function is a kernel expansion over
 * the support vectors plus an offset; adaptive kinds add the decision value of
 * the embedded source model.
 */
struct TrainedModel {
    ModelKind kind = ModelKind::svm;
    Matrix sv_X;
    Vector sv_coeff;  ///< alpha_i * y_i per support vector
    double bias = 0.0;
    KernelSpec kernel;
    double C = 1.0;
    std::optional<double> gamma_priv;
    BiasMode bias_mode = BiasMode::none;
    std::shared_ptr<const TrainedModel> source;
    std::optional<CorrectingFunction> correcting;
    std::optional<TrainingInfo> training;

    Index input_dim() const {
        if (sv_X.cols() > 0 || !source) return sv_X.cols();
        return source->input_dim();
    }
};

/// Threshold above which a dual variable counts as active.
inline double sv_threshold(double C) { return 1e-8 * std::max(1.0, C); }

namespace detail {

inline Vector expansion_values(const TrainedModel& m, const Matrix& X) {
    if (m.sv_coeff.size() == 0) return Vector::Constant(X.rows(), m.bias);
    if (X.cols() != m.sv_X.cols())
        throw Error(ErrorCode::dimension_mismatch, "input has " + std::to_string(X.cols()) + " columns, model expects " +
                                                       std::to_string(m.sv_X.cols()));
    return (gram_matrix(m.kernel, X, m.sv_X) * m.sv_coeff).array() + m.bias;
}

inline void check_input_dim(const TrainedModel& m, const Matrix& X) {
    const Index d = m.input_dim();
    if (d > 0 && X.cols() != d)
        throw Error(ErrorCode::dimension_mismatch,
                    "input has " + std::to_string(X.cols()) + " columns, model expects " + std::to_string(d));
}

}  // namespace detail

inline Vector decision_values(const TrainedModel& model, const Matrix& X);

/// Source decision plus the target-side expansion and offset.
inline Vector adapted_decision(const TrainedModel& model, const Matrix& X) {
    if (!is_adaptive(model.kind)) throw Error(ErrorCode::invalid_argument, "model is not adaptive");
    if (!model.source) throw Error(ErrorCode::missing_source, "adaptive model has no source model");
    detail::check_input_dim(model, X);
    if (X.rows() == 0) return Vector(0);
    return decision_values(*model.source, X) + detail::expansion_values(model, X);
}

inline Vector decision_values(const TrainedModel& model, const Matrix& X) {
    if (is_adaptive(model.kind)) return adapted_decision(model, X);
    detail::check_input_dim(model, X);
    if (X.rows() == 0) return Vector(0);
    return detail::expansion_values(model, X);
}

/// Sign of the decision values; an exact zero maps to +1.
inline Labels sign_labels(const Vector& values) {
    Labels out(values.size());
    for (Index i = 0; i < values.size(); ++i) out[i] = values[i] < 0.0 ? -1 : 1;
    return out;
}

inline Labels predict(const TrainedModel& model, const Matrix& X) { return sign_labels(decision_values(model, X)); }

}  // namespace lupi
