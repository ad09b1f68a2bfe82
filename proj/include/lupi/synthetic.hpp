#pragma once

// Seeded Gaussian data with a privileged channel and an easy/hard domain split.

#include "lupi/dataset.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace lupi {

struct SynthConfig {
    Index n_per_class = 50;
    Index dim = 10;
    double separation = 1.2;
    double priv_noise = 0.3;
    double target_shift = 0.8;
    double target_fraction = 0.5;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_per_class < 1) throw Error(ErrorCode::invalid_argument, "n_per_class must be at least 1");
        if (dim < 1) throw Error(ErrorCode::invalid_argument, "dim must be at least 1");
        if (!(separation > 0.0)) throw Error(ErrorCode::invalid_argument, "separation must be positive");
        if (!(priv_noise >= 0.0)) throw Error(ErrorCode::invalid_argument, "priv_noise must be nonnegative");
        if (!(target_shift >= 0.0)) throw Error(ErrorCode::invalid_argument, "target_shift must be nonnegative");
        if (!(target_fraction > 0.0 && target_fraction < 1.0))
            throw Error(ErrorCode::invalid_argument, "target_fraction must lie in (0, 1)");
    }
};

namespace detail {

inline Vector random_unit(Rng& rng, Index dim) {
    Vector u(dim);
    do {
        for (Index j = 0; j < dim; ++j) u[j] = rng.normal();
    } while (u.norm() == 0.0);
    return u.normalized();
}

/// Target-domain samples sit closer to the boundary by target_shift.
inline double domain_scale(const SynthConfig& c, Domain d) {
    if (d == Domain::source) return 1.0;
    return std::max(0.0, c.separation - c.target_shift) / c.separation;
}

inline Index target_count(const SynthConfig& c) {
    return static_cast<Index>(std::llround(c.target_fraction * static_cast<double>(c.n_per_class)));
}

}  // namespace detail

/// The seeded unit direction u used by make_synthetic.
inline Vector synthetic_direction(const SynthConfig& config) {
    Rng rng(config.seed);
    return detail::random_unit(rng, config.dim);
}

/**
 * Two Gaussian classes with unit covariance and means +-separation * u. Rows are
 * ordered positives first; within a class the first target_fraction share is
 * tagged target and drawn with its mean pulled toward the boundary. The single
 * privileged column is the row's signed distance to the boundary u.x = 0,
 * positive on its own class side, plus priv_noise Gaussian noise.
 */
inline TripletDataset make_synthetic(const SynthConfig& config) {
    config.validate();
    Rng rng(config.seed);
    const Vector u = detail::random_unit(rng, config.dim);
    const Index n = 2 * config.n_per_class;
    const Index n_target = detail::target_count(config);
    TripletDataset d;
    d.X.resize(n, config.dim);
    d.Xstar = Matrix(n, 1);
    d.y.resize(n);
    d.domain.emplace();
    for (Index i = 0; i < n; ++i) {
        const int c = i < config.n_per_class ? 1 : -1;
        const Domain dom = i % config.n_per_class < n_target ? Domain::target : Domain::source;
        const double s = config.separation * detail::domain_scale(config, dom);
        for (Index j = 0; j < config.dim; ++j) d.X(i, j) = c * s * u[j] + rng.normal();
        (*d.Xstar)(i, 0) = c * d.X.row(i).dot(u) + config.priv_noise * rng.normal();
        d.y[i] = c;
        d.domain->push_back(dom);
    }
    return d;
}

/**
 * One dataset per class for pairwise protocols. Class means form a regular
 * simplex centred at the origin with every pair 2 * separation apart, so each
 * pairwise boundary passes through the origin. Privileged column k of a sample
 * of class a describes its distance to the a-vs-k boundary, positive on a's
 * side (column a itself carries only noise). Labels are set to +1; the harness
 * assigns pair labels.
 */
inline std::vector<TripletDataset> make_synthetic_classes(const SynthConfig& config, Index n_classes) {
    config.validate();
    if (n_classes < 2) throw Error(ErrorCode::invalid_argument, "at least two classes are needed");
    if (config.dim < n_classes)
        throw Error(ErrorCode::invalid_argument, "dim must be at least the number of classes");
    Rng rng(config.seed);
    // Orthonormal frame for the simplex.
    Matrix G(config.dim, n_classes);
    for (Index i = 0; i < G.size(); ++i) G.data()[i] = rng.normal();
    const Matrix Q = Eigen::HouseholderQR<Matrix>(G).householderQ() * Matrix::Identity(config.dim, n_classes);
    const double scale = config.separation * std::sqrt(2.0);
    Matrix means(config.dim, n_classes);
    for (Index k = 0; k < n_classes; ++k) {
        Vector e = Vector::Constant(n_classes, -1.0 / static_cast<double>(n_classes));
        e[k] += 1.0;
        means.col(k) = scale * (Q * e);
    }
    const Index n_target = detail::target_count(config);
    std::vector<TripletDataset> out;
    for (Index a = 0; a < n_classes; ++a) {
        TripletDataset d;
        d.X.resize(config.n_per_class, config.dim);
        d.Xstar = Matrix(config.n_per_class, n_classes);
        d.y = Labels::Ones(config.n_per_class);
        d.domain.emplace();
        for (Index i = 0; i < config.n_per_class; ++i) {
            const Domain dom = i < n_target ? Domain::target : Domain::source;
            const double s = detail::domain_scale(config, dom);
            for (Index j = 0; j < config.dim; ++j) d.X(i, j) = s * means(j, a) + rng.normal();
            for (Index k = 0; k < n_classes; ++k) {
                const double own_side =
                    k == a ? 0.0 : d.X.row(i).dot(means.col(a) - means.col(k)) / (2.0 * config.separation);
                (*d.Xstar)(i, k) = own_side + config.priv_noise * rng.normal();
            }
            d.domain->push_back(dom);
        }
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace lupi
