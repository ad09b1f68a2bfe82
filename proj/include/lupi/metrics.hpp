#pragma once

#include "lupi/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace lupi {

struct ScoredPredictions {
    Vector scores;
    Labels labels;
    std::optional<Labels> predicted;
};

/**
 * Mean precision at the rank of each positive. Samples are ranked by descending
 * score; equal scores keep their original order.
 */
inline double average_precision(const Vector& scores, const Labels& labels) {
    if (scores.size() != labels.size())
        throw Error(ErrorCode::length_mismatch, std::to_string(scores.size()) + " scores but " +
                                                    std::to_string(labels.size()) + " labels");
    std::vector<Index> order(static_cast<std::size_t>(scores.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scores[a] > scores[b]; });
    // Extended accumulation keeps short sums correctly rounded once narrowed.
    long double sum = 0.0L;
    Index hits = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (labels[order[k]] == 1) {
            ++hits;
            sum += static_cast<long double>(hits) / static_cast<long double>(k + 1);
        }
    }
    if (hits == 0) throw Error(ErrorCode::no_positives, "average precision needs at least one positive label");
    return static_cast<double>(sum / static_cast<long double>(hits));
}

inline double average_precision(const ScoredPredictions& p) { return average_precision(p.scores, p.labels); }

inline double accuracy(const Labels& predicted, const Labels& truth) {
    if (predicted.size() != truth.size())
        throw Error(ErrorCode::length_mismatch, std::to_string(predicted.size()) + " predictions but " +
                                                    std::to_string(truth.size()) + " labels");
    if (truth.size() == 0) throw Error(ErrorCode::empty, "accuracy of an empty set");
    return static_cast<double>((predicted.array() == truth.array()).count()) / static_cast<double>(truth.size());
}

struct MeanStderr {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Sample mean and standard error (n - 1 in the variance; zero for a single value).
inline MeanStderr mean_and_stderr(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorCode::empty, "mean of an empty sequence");
    const double n = static_cast<double>(values.size());
    MeanStderr r;
    r.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - r.mean) * (v - r.mean);
        r.std_error = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return r;
}

struct ZTest {
    double z = 0.0;
    bool significant = false;  ///< |z| >= 1.96
};

inline ZTest z_test(double mean_a, double se_a, double mean_b, double se_b) {
    if (se_a < 0.0 || se_b < 0.0) throw Error(ErrorCode::invalid_argument, "standard errors must be nonnegative");
    if (se_a == 0.0 && se_b == 0.0) throw Error(ErrorCode::degenerate_variance, "both standard errors are zero");
    ZTest t;
    t.z = (mean_a - mean_b) / std::sqrt(se_a * se_a + se_b * se_b);
    t.significant = std::abs(t.z) >= 1.96;
    return t;
}

}  // namespace lupi
