#include "lupi/metrics.hpp"
#include "metric_oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lupi;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

Labels lab(std::initializer_list<int> v) {
    Labels out(static_cast<Index>(v.size()));
    Index i = 0;
    for (int x : v) out[i++] = x;
    return out;
}

}  // namespace

TEST(AveragePrecision, HandExample) {
    EXPECT_EQ(average_precision(vec({0.9, 0.8, 0.7}), lab({1, -1, 1})), 5.0 / 6.0);
}

TEST(AveragePrecision, PerfectRanking) {
    EXPECT_EQ(average_precision(vec({3, 2, 1, 0}), lab({1, 1, -1, -1})), 1.0);
}

TEST(AveragePrecision, NoPositives) {
    try {
        average_precision(vec({1, 2}), lab({-1, -1}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::no_positives);
    }
}

TEST(AveragePrecision, TiesKeepOriginalOrder) {
    // Equal scores: the negative at index 0 ranks ahead of the positive at index 1.
    EXPECT_EQ(average_precision(vec({1, 1}), lab({-1, 1})), 0.5);
    EXPECT_EQ(average_precision(vec({1, 1}), lab({1, -1})), 1.0);
}

TEST(AveragePrecision, MatchesBruteForceIntegrator) {
    std::mt19937_64 rng(31);
    Vector s;
    Labels y;
    for (int trial = 0; trial < 1000; ++trial) {
        oracle::random_ranking(rng, s, y);
        EXPECT_NEAR(average_precision(s, y), oracle::brute_force_pr_area(s, y), 1e-12) << "trial " << trial;
    }
}

TEST(AveragePrecision, InvariantUnderIncreasingTransform) {
    std::mt19937_64 rng(32);
    Vector s;
    Labels y;
    for (int trial = 0; trial < 200; ++trial) {
        oracle::random_ranking(rng, s, y);
        const Vector t = (s.array() * 3.0).exp() + 7.0;
        EXPECT_EQ(average_precision(s, y), average_precision(t, y));
    }
}

TEST(AveragePrecision, ReversedRankingWorstCase) {
    for (Index n = 2; n <= 12; ++n)
        for (Index P = 1; P < n; ++P) {
            Vector s(n);
            Labels y(n);
            for (Index i = 0; i < n; ++i) {
                s[i] = static_cast<double>(n - i);
                y[i] = i >= n - P ? 1 : -1;
            }
            double expect = 0.0;
            for (Index k = 1; k <= P; ++k) expect += static_cast<double>(k) / static_cast<double>(n - P + k);
            EXPECT_NEAR(average_precision(s, y), expect / static_cast<double>(P), 1e-15);
        }
}

TEST(Accuracy, Examples) {
    EXPECT_EQ(accuracy(lab({1, -1}), lab({1, -1})), 1.0);
    EXPECT_EQ(accuracy(lab({1, 1}), lab({-1, -1})), 0.0);
    EXPECT_EQ(accuracy(lab({1, -1, 1, -1}), lab({1, -1, -1, -1})), 0.75);
}

TEST(Accuracy, Errors) {
    try {
        accuracy(lab({1}), lab({1, -1}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::length_mismatch);
    }
    try {
        accuracy(Labels(0), Labels(0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::empty);
    }
}

TEST(MeanAndStderr, Examples) {
    const std::vector<double> ones{1, 1, 1};
    const auto a = mean_and_stderr(ones);
    EXPECT_EQ(a.mean, 1.0);
    EXPECT_EQ(a.std_error, 0.0);
    const std::vector<double> two{0, 2};
    const auto b = mean_and_stderr(two);
    EXPECT_DOUBLE_EQ(b.mean, 1.0);
    EXPECT_DOUBLE_EQ(b.std_error, 1.0);
    const std::vector<double> single{4.5};
    EXPECT_EQ(mean_and_stderr(single).std_error, 0.0);
    try {
        mean_and_stderr(std::vector<double>{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::empty);
    }
}

TEST(ZTest, Examples) {
    const auto t = z_test(0.90, 0.01, 0.85, 0.01);
    EXPECT_NEAR(t.z, 0.05 / std::sqrt(2e-4), 1e-12);
    EXPECT_NEAR(t.z, 3.536, 1e-3);
    EXPECT_TRUE(t.significant);
    const auto eq = z_test(0.7, 0.02, 0.7, 0.03);
    EXPECT_EQ(eq.z, 0.0);
    EXPECT_FALSE(eq.significant);
    try {
        z_test(0.5, 0.0, 0.5, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::degenerate_variance);
    }
}
