#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <cmath>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lupi {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
/// Binary labels, each entry -1 or +1.
using Labels = Eigen::VectorXi;

enum class ErrorCode {
    invalid_argument,
    dimension_mismatch,
    not_psd,
    unbounded,
    degenerate_labels,
    solver_failure,
    missing_source,
    no_positives,
    length_mismatch,
    empty,
    degenerate_variance,
    too_few_samples,
    parse_error,
    row_count_mismatch,
    bad_label,
    version_mismatch,
    config_mismatch,
    empty_pool,
    empty_test_set,
    io_error,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "InvalidArgument";
        case ErrorCode::dimension_mismatch: return "DimensionMismatch";
        case ErrorCode::not_psd: return "NotPSD";
        case ErrorCode::unbounded: return "Unbounded";
        case ErrorCode::degenerate_labels: return "DegenerateLabels";
        case ErrorCode::solver_failure: return "SolverFailure";
        case ErrorCode::missing_source: return "MissingSource";
        case ErrorCode::no_positives: return "NoPositives";
        case ErrorCode::length_mismatch: return "LengthMismatch";
        case ErrorCode::empty: return "Empty";
        case ErrorCode::degenerate_variance: return "DegenerateVariance";
        case ErrorCode::too_few_samples: return "TooFewSamples";
        case ErrorCode::parse_error: return "ParseError";
        case ErrorCode::row_count_mismatch: return "RowCountMismatch";
        case ErrorCode::bad_label: return "BadLabel";
        case ErrorCode::version_mismatch: return "VersionMismatch";
        case ErrorCode::config_mismatch: return "ConfigMismatch";
        case ErrorCode::empty_pool: return "EmptyPool";
        case ErrorCode::empty_test_set: return "EmptyTestSet";
        case ErrorCode::io_error: return "IoError";
    }
    return "Unknown";
}

/**
 * Every failure raised by the library. The code identifies the failure class,
 * the message carries the human-readable detail.
 */
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

namespace detail {

inline std::function<void(std::string_view)>& warning_sink() {
    static std::function<void(std::string_view)> sink;
    return sink;
}

inline std::mutex& warning_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace detail

/// Installs a receiver for library warnings. Warnings are dropped when no sink is set.
inline void set_warning_sink(std::function<void(std::string_view)> sink) {
    std::lock_guard lock(detail::warning_mutex());
    detail::warning_sink() = std::move(sink);
}

inline void warn(std::string_view message) {
    std::lock_guard lock(detail::warning_mutex());
    if (detail::warning_sink()) detail::warning_sink()(message);
}

/// SplitMix64 finalizer; used to derive independent RNG streams from a master seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a) { return mix_seed(mix_seed(seed) ^ mix_seed(a + 1)); }

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(seed, a), b);
}

/// 64-bit FNV-1a of a string; stable across platforms.
inline std::uint64_t stable_hash(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/**
 * Seeded random stream with portable draws. std::mt19937_64 output is fully
 * specified, the standard distributions are not, so uniform, normal and shuffle
 * are implemented here to keep generated data identical across standard libraries.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do x = engine_();
        while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller; the second value of each pair is kept.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1;
        do u1 = uniform();
        while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Throws DegenerateLabels / BadLabel unless every entry is +-1 and both classes occur.
inline void require_binary_labels(const Labels& y) {
    bool pos = false, neg = false;
    for (Index i = 0; i < y.size(); ++i) {
        if (y[i] == 1) pos = true;
        else if (y[i] == -1) neg = true;
        else throw Error(ErrorCode::bad_label, "label at index " + std::to_string(i) + " is not -1 or +1");
    }
    if (!pos || !neg) throw Error(ErrorCode::degenerate_labels, "both classes must be present");
}

inline Matrix select_rows(const Matrix& X, const std::vector<Index>& rows) {
    Matrix out(static_cast<Index>(rows.size()), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = X.row(rows[i]);
    return out;
}

template <class V>
V select_entries(const V& v, const std::vector<Index>& idx) {
    V out(static_cast<Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Index>(i)] = v[idx[i]];
    return out;
}

}  // namespace lupi
