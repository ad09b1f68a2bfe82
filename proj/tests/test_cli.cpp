#include "lupi/cli.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace lupi;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out, err;
};

Run invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string fixture(const std::string& name) { return std::string(LUPI_FIXTURE_DIR) + "/" + name; }

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool single_line(const std::string& s) { return !s.empty() && s.find('\n') == s.size() - 1; }

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("lupi_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    /// Binary synthetic dataset written through the CLI.
    std::string synth(const std::string& name, const std::string& seed = "7") {
        const auto r = invoke({"synth", "--out", path(name), "--n-per-class", "40", "--dim", "3", "--seed", seed});
        EXPECT_EQ(r.code, 0) << r.err;
        return path(name);
    }

    fs::path dir_;
};

}  // namespace

TEST(CliHelp, EverySubcommandListsItsFlags) {
    const std::vector<std::string> run_flags{"--seed", "--jobs", "--out"};
    const std::vector<std::string> model_flags{"--kernel", "--rbf-gamma", "--c", "--gamma-priv", "--bias-mode", "--grid"};
    const std::map<std::string, std::vector<std::string>> extra{
        {"synth", {"--n-per-class", "--dim", "--separation", "--priv-noise", "--target-shift", "--target-fraction",
                   "--classes"}},
        {"train", {"--features", "--privileged", "--labels", "--domains", "--classifier", "--source-model"}},
        {"predict", {"--model", "--features"}},
        {"eval", {"--model", "--features", "--privileged", "--labels", "--domains"}},
        {"cv", {"--features", "--labels", "--classifier", "--source-model", "--folds"}},
        {"experiment", {"--protocol", "--data", "--source-data", "--classifiers", "--source-trainer", "--repeats",
                        "--n-train", "--n-test", "--ratios", "--metric", "--no-preserve-ratio", "--text-out"}}};
    for (const auto& [sub, flags] : extra) {
        const auto r = invoke({sub, "--help"});
        EXPECT_EQ(r.code, 0) << sub;
        auto expected = flags;
        expected.insert(expected.end(), run_flags.begin(), run_flags.end());
        if (sub == "train" || sub == "cv" || sub == "experiment")
            expected.insert(expected.end(), model_flags.begin(), model_flags.end());
        for (const auto& f : expected) EXPECT_NE(r.out.find(f), std::string::npos) << sub << " help lacks " << f;
    }
    const auto top = invoke({"--help"});
    EXPECT_EQ(top.code, 0);
    for (const char* sub : {"synth", "train", "predict", "eval", "cv", "experiment"})
        EXPECT_NE(top.out.find(sub), std::string::npos);
}

TEST(CliErrors, ParseErrorsExitOneWithOneLine) {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {}, {"bogus"}, {"synth"}, {"synth", "--out", "x", "--frobnicate"}, {"train", "--features", "/nonexistent"},
             {"experiment", "--data", "/nonexistent"}, {"train", "--kernel", "poly"}}) {
        const auto r = invoke(args);
        EXPECT_EQ(r.code, 1);
        EXPECT_TRUE(single_line(r.err)) << r.err;
    }
}

TEST_F(CliTest, SynthTwiceIdenticalFiles) {
    const auto a = synth("a"), b = synth("b");
    for (const char* f : {"features.csv", "privileged.csv", "labels.txt", "domains.txt"})
        EXPECT_EQ(slurp(a + "/" + f), slurp(b + "/" + f)) << f;
    EXPECT_NE(slurp(synth("c", "8") + "/features.csv"), slurp(a + "/features.csv"));
    const auto r = invoke({"synth", "--out", path("k"), "--classes", "3", "--n-per-class", "10", "--dim", "3"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(slurp(path("k/classes.txt")), "c0\nc1\nc2\n");
    EXPECT_TRUE(fs::exists(path("k/c2_privileged.csv")));
}

TEST_F(CliTest, AdaptiveTrainWithoutSourceModel) {
    const auto d = synth("d");
    const auto r = invoke({"train", "--classifier", "adaptive_svm_plus", "--features", d + "/features.csv", "--privileged",
                        d + "/privileged.csv", "--labels", d + "/labels.txt", "--out", path("m.txt")});
    EXPECT_EQ(r.code, 1);
    EXPECT_TRUE(single_line(r.err)) << r.err;
    EXPECT_NE(r.err.find("--source-model"), std::string::npos) << r.err;
    EXPECT_FALSE(fs::exists(path("m.txt")));
}

TEST_F(CliTest, TrainPredictEvalPipeline) {
    const auto d = synth("d");
    const std::vector<std::string> data{"--features", d + "/features.csv", "--privileged", d + "/privileged.csv",
                                        "--labels", d + "/labels.txt"};
    auto with = [&](std::vector<std::string> head) {
        head.insert(head.end(), data.begin(), data.end());
        return head;
    };
    auto r = invoke(with({"train", "--classifier", "svm_plus", "--out", path("src.txt")}));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("resolved configuration (train)"), std::string::npos);
    EXPECT_NE(r.out.find("cross-validation over 81 cells"), std::string::npos) << r.out;
    r = invoke(with({"train", "--classifier", "adaptive_svm_plus", "--source-model", path("src.txt"), "--c", "1",
                  "--gamma-priv", "0.5", "--bias-mode", "constrained", "--out", path("a.txt")}));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.find("cross-validation"), std::string::npos);
    const auto m = load_model(path("a.txt"));
    EXPECT_EQ(m.kind, ModelKind::adaptive_svm_plus);
    EXPECT_EQ(m.bias_mode, BiasMode::constrained);
    ASSERT_TRUE(m.source);
    EXPECT_EQ(m.source->kind, ModelKind::svm_plus);

    r = invoke({"predict", "--model", path("a.txt"), "--features", d + "/features.csv", "--out", path("p.txt")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto text = slurp(path("p.txt"));
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 80);
    const Vector f = decision_values(m, load_csv_matrix(d + "/features.csv"));
    EXPECT_EQ(text.substr(0, text.find(',')), format_double(f[0]));
    // Without --out the predictions follow the configuration echo on stdout.
    const auto r2 = invoke({"predict", "--model", path("a.txt"), "--features", d + "/features.csv"});
    EXPECT_NE(r2.out.find(text), std::string::npos);

    r = invoke({"eval", "--model", path("a.txt"), "--features", d + "/features.csv", "--labels", d + "/labels.txt", "--out",
             path("e.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = Json::parse(slurp(path("e.json")));
    const auto y = load_labels(d + "/labels.txt");
    EXPECT_EQ(j["average_precision"].get<double>(), average_precision(f, y));
    EXPECT_NE(r.out.find("average_precision " + detail::fixed4(average_precision(f, y))), std::string::npos);
}

TEST_F(CliTest, CvTableAndGridFile) {
    const auto d = synth("d");
    std::ofstream(path("grid.json")) << R"({"c_values": [0.1, 1], "gamma_values": [1, 10], "folds": 4})";
    auto r = invoke({"cv", "--classifier", "svm_plus", "--features", d + "/features.csv", "--privileged",
                  d + "/privileged.csv", "--labels", d + "/labels.txt", "--grid", path("grid.json"), "--out",
                  path("cv.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("= 4\n"), std::string::npos) << r.out;
    const auto j = Json::parse(slurp(path("cv.json")));
    EXPECT_EQ(j["cells"].size(), 4u);
    EXPECT_EQ(j["cells"][0]["fold_scores"].size(), 4u);

    std::ofstream(path("bad.json")) << R"({"c_values": [1], "colour": 3})";
    r = invoke({"cv", "--features", d + "/features.csv", "--labels", d + "/labels.txt", "--grid", path("bad.json")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("colour"), std::string::npos);
    std::ofstream(path("broken.json")) << "{";
    r = invoke({"cv", "--features", d + "/features.csv", "--labels", d + "/labels.txt", "--grid", path("broken.json")});
    EXPECT_EQ(r.code, 1);
    EXPECT_TRUE(single_line(r.err)) << r.err;
}

TEST_F(CliTest, ValidationErrorsExitOne) {
    auto r = invoke({"train", "--features", fixture("features3.csv"), "--labels", fixture("bad_label.txt"), "--c", "1",
                  "--out", path("m.txt")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("bad_label.txt:2"), std::string::npos) << r.err;
    r = invoke({"train", "--features", fixture("non_finite.csv"), "--labels", fixture("labels3.txt"), "--c", "1", "--out",
             path("m.txt")});
    EXPECT_EQ(r.code, 1);
    std::ofstream(path("v2.txt")) << "lupi-margin-model v2\n";
    r = invoke({"predict", "--model", path("v2.txt"), "--features", fixture("features3.csv")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("VersionMismatch"), std::string::npos) << r.err;
    r = invoke({"experiment", "--protocol", "one_vs_rest", "--data", LUPI_FIXTURE_DIR "/pairwise"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("--source-data"), std::string::npos);
    r = invoke({"experiment", "--data", LUPI_FIXTURE_DIR, "--repeats", "1"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("classes.txt"), std::string::npos);
}

TEST(CliExitCodes, InternalFailureMapping) {
    EXPECT_TRUE(cli::internal_failure(ErrorCode::solver_failure));
    EXPECT_TRUE(cli::internal_failure(ErrorCode::not_psd));
    EXPECT_FALSE(cli::internal_failure(ErrorCode::bad_label));
    EXPECT_FALSE(cli::internal_failure(ErrorCode::missing_source));
    EXPECT_EQ(cli::one_line("a\nb\n"), "a b");
}

TEST_F(CliTest, RatioSweepWritesTextAndJson) {
    const auto d = synth("d");
    const auto r = invoke({"experiment", "--protocol", "ratio_sweep", "--data", d, "--ratios", "0.5,1", "--repeats", "2",
                        "--n-train", "5", "--c", "1", "--gamma-priv", "1", "--out", path("r.json"), "--text-out",
                        path("r.txt")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = Json::parse(slurp(path("r.json")));
    EXPECT_EQ(j["tasks"].size(), 2u);
    EXPECT_EQ(j["records"].size(), 2u * 4u * 2u);
    EXPECT_EQ(j["excluded"].get<int>(), 4);
    EXPECT_FALSE(j["config"].contains("jobs"));
    const auto text = slurp(path("r.txt"));
    EXPECT_NE(text.find("ratio=1"), std::string::npos);
    EXPECT_NE(text.find("failed"), std::string::npos);
    EXPECT_NE(text.find("excluded (task, classifier) entries: 4"), std::string::npos);
    EXPECT_NE(r.out.find(text), std::string::npos);
}

TEST_F(CliTest, GoldenPairwiseReport) {
    const auto r = invoke({"experiment", "--protocol", "pairwise", "--repeats", "20", "--seed", "0", "--data",
                        LUPI_FIXTURE_DIR "/pairwise", "--out", path("report.json")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("resolved configuration (experiment)"), std::string::npos);
    EXPECT_EQ(slurp(path("report.json")), slurp(LUPI_GOLDEN_DIR "/pairwise_repeats20_seed0.json"));
}
