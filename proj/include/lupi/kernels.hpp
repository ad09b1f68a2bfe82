#pragma once

#include "lupi/core.hpp"

#include <cmath>
#include <string>

namespace lupi {

enum class KernelKind { linear, rbf };

/**
 * Kernel family plus its parameter. The RBF form is exp(-rbf_gamma * |x - z|^2);
 * the linear kernel is the plain dot product and ignores rbf_gamma.
 */
struct KernelSpec {
    KernelKind kind = KernelKind::linear;
    double rbf_gamma = 1.0;

    static KernelSpec linear() { return {}; }

    static KernelSpec rbf(double gamma) {
        if (!(gamma > 0.0) || !std::isfinite(gamma))
            throw Error(ErrorCode::invalid_argument, "rbf_gamma must be positive and finite");
        return {KernelKind::rbf, gamma};
    }

    friend bool operator==(const KernelSpec& a, const KernelSpec& b) {
        if (a.kind != b.kind) return false;
        return a.kind == KernelKind::linear || a.rbf_gamma == b.rbf_gamma;
    }
};

inline std::string to_string(KernelKind kind) { return kind == KernelKind::linear ? "linear" : "rbf"; }

inline KernelKind kernel_kind_from_string(std::string_view s) {
    if (s == "linear") return KernelKind::linear;
    if (s == "rbf") return KernelKind::rbf;
    throw Error(ErrorCode::invalid_argument, "unknown kernel '" + std::string(s) + "'");
}

template <class DerivedX, class DerivedZ>
double eval_kernel(const KernelSpec& spec, const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedZ>& z) {
    if (x.size() != z.size())
        throw Error(ErrorCode::dimension_mismatch,
                    "kernel arguments have lengths " + std::to_string(x.size()) + " and " + std::to_string(z.size()));
    if (x.size() == 0) throw Error(ErrorCode::dimension_mismatch, "kernel arguments must be non-empty");
    if (spec.kind == KernelKind::linear) return x.dot(z);
    return std::exp(-spec.rbf_gamma * (x - z).squaredNorm());
}

/// Entry (i, j) is eval_kernel(spec, X.row(i), Z.row(j)).
inline Matrix gram_matrix(const KernelSpec& spec, const Matrix& X, const Matrix& Z) {
    if (X.cols() != Z.cols())
        throw Error(ErrorCode::dimension_mismatch,
                    "gram operands have " + std::to_string(X.cols()) + " and " + std::to_string(Z.cols()) + " columns");
    if (spec.kind == KernelKind::linear) return X * Z.transpose();
    Matrix G(X.rows(), Z.rows());
    for (Index j = 0; j < Z.rows(); ++j)
        for (Index i = 0; i < X.rows(); ++i) G(i, j) = std::exp(-spec.rbf_gamma * (X.row(i) - Z.row(j)).squaredNorm());
    return G;
}

/// Gram matrix of X with itself, symmetrized as (G + G^T) / 2.
inline Matrix gram_matrix(const KernelSpec& spec, const Matrix& X) {
    Matrix G = gram_matrix(spec, X, X);
    Matrix S = 0.5 * (G + G.transpose());
    return S;
}

}  // namespace lupi
