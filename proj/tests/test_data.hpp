#pragma once

// Small seeded datasets for classifier tests.

#include "lupi/core.hpp"

#include <random>

namespace lupi::testdata {

struct Triplets {
    Matrix X;
    Matrix Xstar;
    Labels y;
};

/// Noisy linear concept in d dimensions; the privileged columns carry the clean margin plus noise.
inline Triplets random_triplets(std::mt19937_64& rng, Index n, Index d, Index d_star, double noise = 0.5) {
    std::normal_distribution<double> N(0.0, 1.0);
    Triplets t;
    t.X.resize(n, d);
    for (Index i = 0; i < t.X.size(); ++i) t.X.data()[i] = N(rng);
    Vector w(d);
    for (Index j = 0; j < d; ++j) w[j] = N(rng);
    w.normalize();
    const Vector margin = t.X * w;
    t.y.resize(n);
    for (Index i = 0; i < n; ++i) t.y[i] = margin[i] + noise * N(rng) >= 0.0 ? 1 : -1;
    // Both classes must be present.
    t.y[0] = 1;
    t.y[1] = -1;
    t.Xstar.resize(n, d_star);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d_star; ++j) t.Xstar(i, j) = (j == 0 ? margin[i] : 0.0) + 0.3 * N(rng);
    return t;
}

inline Vector random_vector(std::mt19937_64& rng, Index n) {
    std::normal_distribution<double> N(0.0, 1.0);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = N(rng);
    return v;
}

}  // namespace lupi::testdata
