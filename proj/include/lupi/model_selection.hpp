#pragma once

// Stratified k-fold cross-validation and exhaustive grid search over
// (C, gamma_priv, rbf_gamma).

#include "lupi/adaptive.hpp"
#include "lupi/dataset.hpp"
#include "lupi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lupi {

enum class Metric { average_precision, accuracy };

inline std::string to_string(Metric m) { return m == Metric::average_precision ? "average_precision" : "accuracy"; }

inline Metric metric_from_string(std::string_view s) {
    if (s == "average_precision" || s == "ap") return Metric::average_precision;
    if (s == "accuracy") return Metric::accuracy;
    throw Error(ErrorCode::invalid_argument, "unknown metric '" + std::string(s) + "'");
}

/// Decade grid 10^lo, ..., 10^hi.
inline std::vector<double> decade_grid(int lo, int hi) {
    std::vector<double> out;
    for (int e = lo; e <= hi; ++e) out.push_back(std::pow(10.0, e));
    return out;
}

struct CVGrid {
    std::vector<double> c_values;
    std::vector<double> gamma_values;      ///< empty when the trainer has no privileged space
    std::vector<double> rbf_gamma_values;  ///< empty for the linear kernel
    int folds = 5;
    Metric metric = Metric::average_precision;
    std::uint64_t seed = 0;

    void validate() const {
        if (c_values.empty()) throw Error(ErrorCode::invalid_argument, "grid has no C values");
        if (folds < 2) throw Error(ErrorCode::invalid_argument, "cross-validation needs at least 2 folds");
        auto positive = [](const std::vector<double>& v, const char* name) {
            for (double x : v)
                if (!(x > 0.0) || !std::isfinite(x))
                    throw Error(ErrorCode::invalid_argument, std::string(name) + " grid values must be positive");
        };
        positive(c_values, "C");
        positive(gamma_values, "gamma");
        positive(rbf_gamma_values, "rbf_gamma");
    }
};

struct ParamSet {
    double C = 1.0;
    std::optional<double> gamma;
    std::optional<double> rbf_gamma;

    friend bool operator==(const ParamSet&, const ParamSet&) = default;
};

struct Fold {
    std::vector<Index> train;
    std::vector<Index> validate;
};

/**
 * Stratified folds. Each class is shuffled with its own seeded stream and dealt
 * round-robin; the dealing position carries over from one class to the next so
 * fold sizes stay within one of each other. Training indices are ascending,
 * validation indices are in a seeded random order.
 */
inline std::vector<Fold> kfold_indices(Index n, int k, const Labels& labels, std::uint64_t seed) {
    if (k < 2) throw Error(ErrorCode::invalid_argument, "k must be at least 2");
    if (labels.size() != n)
        throw Error(ErrorCode::length_mismatch, std::to_string(labels.size()) + " labels for n=" + std::to_string(n));
    std::vector<std::vector<Index>> members(2);
    for (Index i = 0; i < n; ++i) {
        if (labels[i] == 1) members[0].push_back(i);
        else if (labels[i] == -1) members[1].push_back(i);
        else throw Error(ErrorCode::bad_label, "label at index " + std::to_string(i) + " is not -1 or +1");
    }
    for (std::size_t c = 0; c < 2; ++c)
        if (static_cast<Index>(members[c].size()) < k)
            throw Error(ErrorCode::too_few_samples, std::string(c == 0 ? "positive" : "negative") + " class has " +
                                                        std::to_string(members[c].size()) + " samples for " +
                                                        std::to_string(k) + " folds");
    std::vector<int> fold_of(static_cast<std::size_t>(n));
    std::size_t deal = 0;
    for (std::size_t c = 0; c < 2; ++c) {
        Rng rng(derive_seed(seed, c));
        rng.shuffle(members[c]);
        for (Index i : members[c]) fold_of[static_cast<std::size_t>(i)] = static_cast<int>(deal++ % k);
    }
    std::vector<Fold> folds(static_cast<std::size_t>(k));
    for (Index i = 0; i < n; ++i)
        for (int f = 0; f < k; ++f)
            (fold_of[static_cast<std::size_t>(i)] == f ? folds[f].validate : folds[f].train).push_back(i);
    // Validation rows are scored in a seeded random order, so tied scores carry no label information.
    Rng mix(derive_seed(seed, 2));
    for (auto& f : folds) mix.shuffle(f.validate);
    return folds;
}

using Trainer = std::function<TrainedModel(const TripletDataset&, const ParamSet&)>;

/// What to train; the numeric hyperparameters come from a ParamSet.
struct TrainerSpec {
    ModelKind kind = ModelKind::svm;
    KernelKind kernel = KernelKind::linear;
    KernelSpec kernel_star = KernelSpec::linear();
    BiasMode bias_mode = BiasMode::none;
    std::shared_ptr<const TrainedModel> source;  ///< required by the adaptive kinds
};

inline TrainedModel train(const TrainerSpec& spec, const TripletDataset& data, const ParamSet& params) {
    KernelSpec kernel = KernelSpec::linear();
    if (spec.kernel == KernelKind::rbf) {
        if (!params.rbf_gamma) throw Error(ErrorCode::config_mismatch, "rbf kernel needs an rbf_gamma value");
        kernel = KernelSpec::rbf(*params.rbf_gamma);
    }
    const bool priv = uses_privileged(spec.kind);
    if (priv && !params.gamma) throw Error(ErrorCode::config_mismatch, to_string(spec.kind) + " needs a gamma value");
    if (priv && !data.Xstar)
        throw Error(ErrorCode::config_mismatch, to_string(spec.kind) + " needs privileged features");
    switch (spec.kind) {
        case ModelKind::svm: return fit_svm(data.X, data.y, params.C, kernel);
        case ModelKind::svm_plus:
            return fit_svm_plus(data.X, *data.Xstar, data.y, params.C, *params.gamma, kernel, spec.kernel_star);
        case ModelKind::adaptive_svm: return fit_adaptive_svm(data.X, data.y, params.C, kernel, spec.source);
        case ModelKind::adaptive_svm_plus:
            return fit_adaptive_svm_plus(data.X, *data.Xstar, data.y, params.C, *params.gamma, kernel,
                                         spec.kernel_star, spec.source, spec.bias_mode);
    }
    throw Error(ErrorCode::invalid_argument, "unknown model kind");
}

inline Trainer make_trainer(TrainerSpec spec) {
    return [spec = std::move(spec)](const TripletDataset& d, const ParamSet& p) { return train(spec, d, p); };
}

inline double score(const TrainedModel& model, const Matrix& X, const Labels& y, Metric metric) {
    const Vector f = decision_values(model, X);
    return metric == Metric::average_precision ? average_precision(f, y) : accuracy(sign_labels(f), y);
}

struct CVCell {
    ParamSet params;
    std::vector<double> fold_scores;
    double mean = -std::numeric_limits<double>::infinity();
    std::optional<std::string> error;  ///< set when a fold failed; mean is then -inf
};

struct GridResult {
    ParamSet best;
    double best_score = -std::numeric_limits<double>::infinity();
    std::vector<CVCell> table;  ///< C outermost, then gamma, then rbf_gamma, each ascending
};

namespace detail {

inline std::vector<double> sorted_unique(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

template <class T>
std::vector<std::optional<T>> optional_axis(const std::vector<T>& v) {
    std::vector<std::optional<T>> out;
    if (v.empty()) out.emplace_back();
    for (const auto& x : v) out.emplace_back(x);
    return out;
}

}  // namespace detail

/**
 * Evaluates every parameter combination on every fold and returns the best mean
 * score. Ties go to the smallest C, then gamma, then rbf_gamma. A cell whose
 * trainer or scorer throws scores -inf and the search continues.
 */
inline GridResult grid_search(const Trainer& trainer, const TripletDataset& data, const CVGrid& grid) {
    grid.validate();
    data.validate();
    const auto folds = kfold_indices(data.size(), grid.folds, data.y, grid.seed);
    std::vector<TripletDataset> train_parts, val_parts;
    for (const auto& f : folds) {
        train_parts.push_back(data.subset(f.train));
        val_parts.push_back(data.subset(f.validate));
    }
    GridResult result;
    std::optional<std::string> first_error;
    for (double C : detail::sorted_unique(grid.c_values))
        for (const auto& g : detail::optional_axis(detail::sorted_unique(grid.gamma_values)))
            for (const auto& r : detail::optional_axis(detail::sorted_unique(grid.rbf_gamma_values))) {
                CVCell cell;
                cell.params = ParamSet{C, g, r};
                try {
                    double sum = 0.0;
                    for (std::size_t f = 0; f < folds.size(); ++f) {
                        const TrainedModel m = trainer(train_parts[f], cell.params);
                        const double s = score(m, val_parts[f].X, val_parts[f].y, grid.metric);
                        if (!std::isfinite(s)) throw Error(ErrorCode::solver_failure, "non-finite fold score");
                        cell.fold_scores.push_back(s);
                        sum += s;
                    }
                    cell.mean = sum / static_cast<double>(folds.size());
                } catch (const std::exception& e) {
                    cell.error = e.what();
                    cell.mean = -std::numeric_limits<double>::infinity();
                    if (!first_error) first_error = e.what();
                }
                if (cell.mean > result.best_score) {
                    result.best_score = cell.mean;
                    result.best = cell.params;
                }
                result.table.push_back(std::move(cell));
            }
    if (!std::isfinite(result.best_score))
        throw Error(ErrorCode::solver_failure, "every grid cell failed; first error: " + first_error.value_or("none"));
    return result;
}

/// Single fit on all rows with the chosen parameters.
inline TrainedModel retrain_full(const Trainer& trainer, const TripletDataset& data, const ParamSet& best) {
    return trainer(data, best);
}

}  // namespace lupi
