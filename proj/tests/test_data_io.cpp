#include "lupi/adaptive.hpp"
#include "lupi/data_io.hpp"
#include "test_data.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <filesystem>
#include <fstream>
#include <set>

using namespace lupi;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name) { return std::string(LUPI_FIXTURE_DIR) + "/" + name; }

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::invalid_argument;
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("lupi_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

/// 100-point probe grid over [-3, 3]^2 (10 x 10) padded with zeros to dimension d.
Matrix probe_grid(Index d) {
    Matrix P = Matrix::Zero(100, d);
    for (Index i = 0; i < 10; ++i)
        for (Index j = 0; j < 10; ++j) {
            P(i * 10 + j, 0) = -3.0 + 6.0 * i / 9.0;
            if (d > 1) P(i * 10 + j, 1) = -3.0 + 6.0 * j / 9.0 + 0.01 * i;
        }
    return P;
}

void expect_bitwise_equal(const Vector& a, const Vector& b) {
    ASSERT_EQ(a.size(), b.size());
    for (Index i = 0; i < a.size(); ++i) EXPECT_EQ(std::bit_cast<std::uint64_t>(a[i]), std::bit_cast<std::uint64_t>(b[i]));
}

}  // namespace

TEST(LoadDataset, ThreeRowHappyPath) {
    const auto d = load_dataset(fixture("features3.csv"), fixture("privileged3.csv"), fixture("labels3.txt"),
                                fixture("domains3.txt"));
    EXPECT_EQ(d.size(), 3);
    EXPECT_EQ(d.X.cols(), 2);
    EXPECT_EQ(d.X(1, 0), -1.25);
    EXPECT_EQ(d.X(2, 0), 0.3);
    EXPECT_EQ(d.y[0], 1);
    EXPECT_EQ(d.y[1], -1);
    EXPECT_EQ(d.y[2], 1);
    ASSERT_TRUE(d.Xstar.has_value());
    EXPECT_EQ((*d.Xstar)(2, 0), 0.3);
    ASSERT_TRUE(d.domain.has_value());
    EXPECT_EQ((*d.domain)[1], Domain::target);
}

TEST(LoadDataset, CountMismatch) {
    EXPECT_EQ(code_of([] { load_dataset(fixture("features3.csv"), std::nullopt, fixture("labels4.txt")); }),
              ErrorCode::row_count_mismatch);
}

TEST(LoadDataset, BadLabelNamesTheLine) {
    const auto f = [] { load_dataset(fixture("features3.csv"), std::nullopt, fixture("bad_label.txt")); };
    EXPECT_EQ(code_of(f), ErrorCode::bad_label);
    EXPECT_NE(message_of(f).find("bad_label.txt:2"), std::string::npos) << message_of(f);
}

TEST(LoadDataset, RaggedRowAndNonNumber) {
    const auto ragged = [] { load_csv_matrix(fixture("ragged.csv")); };
    EXPECT_EQ(code_of(ragged), ErrorCode::parse_error);
    EXPECT_NE(message_of(ragged).find("ragged.csv:2"), std::string::npos);
    const auto nan = [] { load_csv_matrix(fixture("not_a_number.csv")); };
    EXPECT_EQ(code_of(nan), ErrorCode::parse_error);
    EXPECT_NE(message_of(nan).find(":2"), std::string::npos);
    EXPECT_EQ(code_of([] { load_csv_matrix(fixture("non_finite.csv")); }), ErrorCode::parse_error);
}

TEST(LoadDataset, BadDomainAndMissingFile) {
    EXPECT_EQ(code_of([] { load_domains(fixture("bad_domain.txt")); }), ErrorCode::parse_error);
    EXPECT_EQ(code_of([] { load_csv_matrix(fixture("does_not_exist.csv")); }), ErrorCode::io_error);
}

TEST(LoadDataset, EveryMalformedFixtureIsRejected) {
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"features3.csv", "bad_label.txt"}, {"ragged.csv", "labels3.txt"},
        {"not_a_number.csv", "labels3.txt"}, {"features3.csv", "labels4.txt"}};
    for (const auto& [features, labels] : cases)
        EXPECT_THROW(load_dataset(fixture(features), std::nullopt, fixture(labels)), Error) << features << " " << labels;
    EXPECT_THROW(load_dataset(fixture("features3.csv"), std::nullopt, fixture("labels3.txt"), fixture("bad_domain.txt")),
                 Error);
}

TEST(SaveDataset, RoundTripIsExact) {
    TempDir tmp;
    std::mt19937_64 rng(3);
    const auto t = testdata::random_triplets(rng, 17, 3, 2);
    TripletDataset d;
    d.X = t.X;
    d.Xstar = t.Xstar;
    d.y = t.y;
    d.domain = std::vector<Domain>(17, Domain::source);
    (*d.domain)[4] = Domain::target;
    const auto paths = DatasetPaths::in_directory(tmp.file(""), "d_");
    save_dataset(d, paths);
    const auto back = load_dataset(paths.primary, paths.privileged, paths.labels, paths.domains);
    EXPECT_EQ(back.X, d.X);
    EXPECT_EQ(*back.Xstar, *d.Xstar);
    EXPECT_EQ(back.y, d.y);
    EXPECT_EQ(*back.domain, *d.domain);
}

class ModelRoundTrip : public ::testing::TestWithParam<ModelKind> {};

TEST_P(ModelRoundTrip, DecisionValuesBitwiseEqual) {
    const ModelKind kind = GetParam();
    std::mt19937_64 rng(11);
    const auto t = testdata::random_triplets(rng, 30, 2, 2);
    const auto src_t = testdata::random_triplets(rng, 30, 2, 2);
    const auto source =
        std::make_shared<const TrainedModel>(fit_svm_plus(src_t.X, src_t.Xstar, src_t.y, 1.0, 0.5, KernelSpec::rbf(0.7)));
    TrainedModel m;
    switch (kind) {
        case ModelKind::svm: m = fit_svm(t.X, t.y, 2.0, KernelSpec::rbf(0.3)); break;
        case ModelKind::svm_plus: m = fit_svm_plus(t.X, t.Xstar, t.y, 1.0, 0.1, KernelSpec::linear()); break;
        case ModelKind::adaptive_svm: m = fit_adaptive_svm(t.X, t.y, 1.0, KernelSpec::linear(), source); break;
        case ModelKind::adaptive_svm_plus:
            m = fit_adaptive_svm_plus(t.X, t.Xstar, t.y, 10.0, 1.0, KernelSpec::rbf(0.5), KernelSpec::linear(), source,
                                      BiasMode::constrained);
            break;
    }
    TempDir tmp;
    save_model(m, tmp.file("m.txt"));
    const auto back = load_model(tmp.file("m.txt"));
    EXPECT_EQ(back.kind, m.kind);
    EXPECT_EQ(back.C, m.C);
    EXPECT_EQ(back.gamma_priv, m.gamma_priv);
    EXPECT_EQ(back.bias_mode, m.bias_mode);
    EXPECT_EQ(back.correcting.has_value(), m.correcting.has_value());
    EXPECT_EQ(back.source != nullptr, m.source != nullptr);
    const Matrix P = probe_grid(2);
    expect_bitwise_equal(decision_values(back, P), decision_values(m, P));
    if (m.correcting)
        expect_bitwise_equal(back.correcting->values(t.Xstar), m.correcting->values(t.Xstar));
    // Serialising the loaded model reproduces the file.
    EXPECT_EQ(model_text(back), model_text(m));
}

INSTANTIATE_TEST_SUITE_P(AllKinds, ModelRoundTrip,
                         ::testing::Values(ModelKind::svm, ModelKind::svm_plus, ModelKind::adaptive_svm,
                                           ModelKind::adaptive_svm_plus),
                         [](const auto& info) { return to_string(info.param); });

TEST(ModelFile, FirstLineAndNestedSource) {
    std::mt19937_64 rng(12);
    const auto t = testdata::random_triplets(rng, 20, 2, 1);
    auto source = std::make_shared<const TrainedModel>(fit_svm(t.X, t.y, 1.0, KernelSpec::linear()));
    auto inner = std::make_shared<const TrainedModel>(fit_adaptive_svm(t.X, t.y, 1.0, KernelSpec::linear(), source));
    const auto outer = fit_adaptive_svm(t.X, t.y, 0.5, KernelSpec::linear(), inner);
    const std::string text = model_text(outer);
    EXPECT_EQ(text.substr(0, text.find('\n')), "lupi-margin-model v1");
    const auto back = parse_model(text);
    ASSERT_TRUE(back.source && back.source->source);
    expect_bitwise_equal(decision_values(back, probe_grid(2)), decision_values(outer, probe_grid(2)));
}

TEST(ModelFile, TruncatedFileIsParseError) {
    std::mt19937_64 rng(13);
    const auto t = testdata::random_triplets(rng, 20, 2, 1);
    const std::string text = model_text(fit_svm_plus(t.X, t.Xstar, t.y, 1.0, 1.0, KernelSpec::linear()));
    std::size_t cuts = 0;
    for (std::size_t len = 0; len + 1 < text.size(); len += 7) {
        const std::string prefix = text.substr(0, len);
        EXPECT_EQ(code_of([&] { parse_model(prefix); }), ErrorCode::parse_error) << "length " << len;
        ++cuts;
    }
    EXPECT_GT(cuts, 10u);
}

TEST(ModelFile, FutureVersionAndGarbage) {
    std::mt19937_64 rng(14);
    const auto t = testdata::random_triplets(rng, 12, 2, 1);
    std::string text = model_text(fit_svm(t.X, t.y, 1.0, KernelSpec::linear()));
    text.replace(text.find("v1"), 2, "v2");
    EXPECT_EQ(code_of([&] { parse_model(text); }), ErrorCode::version_mismatch);
    EXPECT_EQ(code_of([] { parse_model("hello\n"); }), ErrorCode::parse_error);
    std::string bad = model_text(fit_svm(t.X, t.y, 1.0, KernelSpec::linear()));
    bad.replace(bad.find("kind svm"), 8, "kind tree");
    EXPECT_EQ(code_of([&] { parse_model(bad); }), ErrorCode::parse_error);
}

TEST(ModelFile, ErrorNamesLine) {
    std::mt19937_64 rng(15);
    const auto t = testdata::random_triplets(rng, 12, 2, 1);
    std::string text = model_text(fit_svm(t.X, t.y, 1.0, KernelSpec::linear()));
    text.replace(text.find("C "), 2, "C x");
    const auto msg = message_of([&] { parse_model(text, "m.txt"); });
    EXPECT_NE(msg.find("m.txt:4"), std::string::npos) << msg;
}

TEST(FormatDouble, ShortestRoundTrip) {
    for (double v : {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0, -0.0}) {
        const auto s = format_double(v);
        EXPECT_EQ(std::bit_cast<std::uint64_t>(std::stod(s)), std::bit_cast<std::uint64_t>(v)) << s;
    }
    EXPECT_EQ(format_double(0.5), "0.5");
}

namespace {

TripletDataset tagged_pool(Index per_class, Index source_per_class) {
    TripletDataset d;
    d.X.resize(2 * per_class, 1);
    d.y.resize(2 * per_class);
    d.domain.emplace();
    for (Index i = 0; i < 2 * per_class; ++i) {
        d.X(i, 0) = static_cast<double>(i);
        d.y[i] = i < per_class ? 1 : -1;
        d.domain->push_back(i % per_class < source_per_class ? Domain::source : Domain::target);
    }
    return d;
}

std::set<double> ids(const TripletDataset& d) {
    std::set<double> s;
    for (Index i = 0; i < d.size(); ++i) s.insert(d.X(i, 0));
    return s;
}

}  // namespace

TEST(SplitTrainTest, FiftyTrainTwoHundredTest) {
    const auto d = tagged_pool(250, 125);
    const auto [train, test] = split_train_test(d, 50, 1, 200);
    EXPECT_EQ(train.size(), 100);
    EXPECT_EQ(test.size(), 400);
    EXPECT_EQ(train.rows_with_label(1).size(), 50u);
    EXPECT_EQ(test.rows_with_label(-1).size(), 200u);
    // Proportional over the domain tags.
    EXPECT_EQ(train.rows_in(Domain::source).size(), 50u);
    EXPECT_EQ(test.rows_in(Domain::target).size(), 200u);
    const auto a = ids(train), b = ids(test);
    for (double v : a) EXPECT_EQ(b.count(v), 0u);
}

TEST(SplitTrainTest, UncappedUsesEveryRemainingRow) {
    const auto d = tagged_pool(30, 10);
    const auto [train, test] = split_train_test(d, 5, 2);
    EXPECT_EQ(train.size() + test.size(), d.size());
}

TEST(SplitTrainTest, DeterministicInSeed) {
    const auto d = tagged_pool(40, 20);
    const auto a = split_train_test(d, 10, 9, 20);
    const auto b = split_train_test(d, 10, 9, 20);
    const auto c = split_train_test(d, 10, 10, 20);
    EXPECT_EQ(a.first.X, b.first.X);
    EXPECT_EQ(a.second.X, b.second.X);
    EXPECT_NE(a.first.X, c.first.X);
}

TEST(SplitTrainTest, TooFewSamples) {
    const auto d = tagged_pool(10, 5);
    EXPECT_EQ(code_of([&] { split_train_test(d, 10, 0); }), ErrorCode::too_few_samples);
    EXPECT_NO_THROW(split_train_test(d, 9, 0));
}

TEST(ProportionalCounts, LargestRemainder) {
    EXPECT_EQ(detail::proportional_counts({125, 125}, 50), (std::vector<Index>{25, 25}));
    EXPECT_EQ(detail::proportional_counts({1, 2}, 2), (std::vector<Index>{1, 1}));
    EXPECT_EQ(detail::proportional_counts({0, 7}, 3), (std::vector<Index>{0, 3}));
    EXPECT_EQ(detail::proportional_counts({3, 3}, 6), (std::vector<Index>{3, 3}));
}
