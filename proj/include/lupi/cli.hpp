#pragma once

// Command-line front end: synth, train, predict, eval, cv and experiment.
// Exit codes: 0 success, 1 validation error, 2 internal failure.

#include "lupi/report.hpp"
#include "lupi/synthetic.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace lupi {

namespace cli {

using Echo = std::vector<std::pair<std::string, std::string>>;

inline std::string join(const std::vector<std::string>& v, const char* sep = ",") {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : sep) + s;
    return out;
}

inline std::string join(const std::vector<double>& v) {
    std::vector<std::string> s;
    for (double x : v) s.push_back(format_double(x));
    return join(s);
}

inline std::string fixed4(double v) { return detail::fixed4(v); }

inline bool file_exists(const std::string& p) { return std::filesystem::is_regular_file(p); }

/// Flags shared by the subcommands.
struct Common {
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string out;
    std::string kernel = "linear";
    double rbf_gamma = 1.0;
    double c = 1.0;
    double gamma_priv = 1.0;
    std::string bias_mode = "none";
    std::string grid_file;
    CLI::Option* rbf_gamma_opt = nullptr;
    CLI::Option* c_opt = nullptr;
    CLI::Option* gamma_opt = nullptr;

    void add_run_flags(CLI::App* app, const std::string& out_help, bool out_required = false) {
        app->add_option("--seed", seed, "Master seed for every random draw")->capture_default_str();
        app->add_option("--jobs", jobs, "Worker threads; results do not depend on it")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        auto* o = app->add_option("--out", out, out_help);
        if (out_required) o->required();
    }

    void add_model_flags(CLI::App* app) {
        app->add_option("--kernel", kernel, "Primary-space kernel")
            ->capture_default_str()
            ->check(CLI::IsMember({"linear", "rbf"}));
        rbf_gamma_opt = app->add_option("--rbf-gamma", rbf_gamma, "RBF width; fixes the rbf_gamma grid axis")
                            ->check(CLI::PositiveNumber);
        c_opt = app->add_option("--c", c, "Regularisation C; fixes the C grid axis")->check(CLI::PositiveNumber);
        gamma_opt = app->add_option("--gamma-priv", gamma_priv, "Privileged-space weight gamma; fixes the gamma axis")
                        ->check(CLI::PositiveNumber);
        app->add_option("--bias-mode", bias_mode, "Offset handling for adaptive_svm_plus")
            ->capture_default_str()
            ->check(CLI::IsMember({"none", "constrained"}));
        app->add_option("--grid", grid_file, "JSON grid file (c_values, gamma_values, rbf_gamma_values, folds, metric)")
            ->check(CLI::ExistingFile);
    }

    KernelKind kernel_kind() const { return kernel == "rbf" ? KernelKind::rbf : KernelKind::linear; }

    /// Grid from --grid (or the decade defaults), with axes pinned by explicit flags.
    CVGrid grid() const {
        CVGrid g{decade_grid(-4, 4), decade_grid(-4, 4), {}, 5, Metric::average_precision, seed};
        bool file_rbf = false;
        if (!grid_file.empty()) {
            std::ifstream in(grid_file);
            Json j;
            try {
                j = Json::parse(in);
            } catch (const std::exception& e) {
                throw Error(ErrorCode::parse_error, grid_file + ": " + e.what());
            }
            if (!j.is_object()) throw Error(ErrorCode::parse_error, grid_file + ": expected a JSON object");
            for (const auto& [key, value] : j.items()) {
                try {
                    if (key == "c_values") g.c_values = value.get<std::vector<double>>();
                    else if (key == "gamma_values") g.gamma_values = value.get<std::vector<double>>();
                    else if (key == "rbf_gamma_values") {
                        g.rbf_gamma_values = value.get<std::vector<double>>();
                        file_rbf = true;
                    } else if (key == "folds") g.folds = value.get<int>();
                    else if (key == "metric") g.metric = metric_from_string(value.get<std::string>());
                    else throw Error(ErrorCode::config_mismatch, grid_file + ": unknown grid key '" + key + "'");
                } catch (const Json::exception& e) {
                    throw Error(ErrorCode::parse_error, grid_file + ": bad value for '" + key + "': " + e.what());
                }
            }
        }
        if (kernel_kind() == KernelKind::rbf && !file_rbf) g.rbf_gamma_values = decade_grid(-4, 4);
        if (kernel_kind() == KernelKind::linear && !g.rbf_gamma_values.empty())
            throw Error(ErrorCode::config_mismatch, "grid has rbf_gamma_values but --kernel is linear");
        if (*c_opt) g.c_values = {c};
        if (*gamma_opt) g.gamma_values = {gamma_priv};
        if (*rbf_gamma_opt) {
            if (kernel_kind() != KernelKind::rbf)
                throw Error(ErrorCode::config_mismatch, "--rbf-gamma needs --kernel rbf");
            g.rbf_gamma_values = {rbf_gamma};
        }
        g.validate();
        return g;
    }

    void echo_run(Echo& e) const {
        e.emplace_back("seed", std::to_string(seed));
        e.emplace_back("jobs", std::to_string(jobs));
        e.emplace_back("out", out.empty() ? "(stdout)" : out);
    }

    void echo_grid(Echo& e, const CVGrid& g) const {
        e.emplace_back("kernel", kernel);
        e.emplace_back("bias_mode", bias_mode);
        e.emplace_back("grid.c_values", join(g.c_values));
        e.emplace_back("grid.gamma_values", g.gamma_values.empty() ? "-" : join(g.gamma_values));
        e.emplace_back("grid.rbf_gamma_values", g.rbf_gamma_values.empty() ? "-" : join(g.rbf_gamma_values));
        e.emplace_back("grid.folds", std::to_string(g.folds));
        e.emplace_back("grid.metric", to_string(g.metric));
    }
};

/// Paths of a dataset given on the command line.
struct DataFlags {
    std::string features, privileged, labels, domains;

    void add(CLI::App* app, bool need_labels = true) {
        app->add_option("--features", features, "Primary features CSV (no header)")->required()->check(CLI::ExistingFile);
        app->add_option("--privileged", privileged, "Privileged features CSV")->check(CLI::ExistingFile);
        auto* l = app->add_option("--labels", labels, "Labels file, one of -1/+1/1 per line")->check(CLI::ExistingFile);
        if (need_labels) l->required();
        app->add_option("--domains", domains, "Domain tags file, one of source/target per line")
            ->check(CLI::ExistingFile);
    }

    TripletDataset load() const {
        return load_dataset(features, privileged.empty() ? std::nullopt : std::optional(privileged), labels,
                            domains.empty() ? std::nullopt : std::optional(domains));
    }

    void echo(Echo& e) const {
        e.emplace_back("features", features);
        e.emplace_back("privileged", privileged.empty() ? "-" : privileged);
        e.emplace_back("labels", labels.empty() ? "-" : labels);
        e.emplace_back("domains", domains.empty() ? "-" : domains);
    }
};

inline void print_echo(std::ostream& out, const std::string& command, const Echo& e) {
    out << "resolved configuration (" << command << "):\n";
    std::size_t w = 0;
    for (const auto& [k, v] : e) w = std::max(w, k.size());
    for (const auto& [k, v] : e) out << "  " << k << std::string(w - k.size(), ' ') << " = " << v << '\n';
}

inline void write_or_print(std::ostream& out, const std::string& path, const std::string& text) {
    if (path.empty()) out << text;
    else detail::write_file(path, text);
}

/// Loads a class collection: `classes.txt` names the classes, each stored with the prefix "<name>_".
inline std::vector<ClassData> load_collection(const std::string& dir) {
    const std::string list = dir + "/classes.txt";
    if (!file_exists(list))
        throw Error(ErrorCode::io_error, "'" + dir + "' is not a class collection (missing classes.txt)");
    std::vector<ClassData> out;
    for (const auto& line : detail::read_lines(list)) {
        const auto name = std::string(detail::trim(line));
        if (name.empty()) continue;
        auto p = DatasetPaths::in_directory(dir, name + "_");
        if (!file_exists(*p.privileged)) p.privileged.reset();
        if (!file_exists(*p.domains)) p.domains.reset();
        out.push_back({name, load_dataset(p.primary, p.privileged, p.labels, p.domains)});
    }
    return out;
}

inline TripletDataset load_directory(const std::string& dir) {
    auto p = DatasetPaths::in_directory(dir);
    if (!file_exists(*p.privileged)) p.privileged.reset();
    if (!file_exists(*p.domains)) p.domains.reset();
    return load_dataset(p.primary, p.privileged, p.labels, p.domains);
}

struct Classifier {
    std::string kind = "svm";
    std::string source_model;

    void add(CLI::App* app) {
        app->add_option("--classifier", kind, "Classifier kind")
            ->capture_default_str()
            ->check(CLI::IsMember({"svm", "svm_plus", "adaptive_svm", "adaptive_svm_plus"}));
        app->add_option("--source-model", source_model, "Serialized source model (adaptive kinds)")
            ->check(CLI::ExistingFile);
    }

    TrainerSpec spec(const Common& c) const {
        TrainerSpec s;
        s.kind = model_kind_from_string(kind);
        s.kernel = c.kernel_kind();
        s.bias_mode = bias_mode_from_string(c.bias_mode);
        if (is_adaptive(s.kind)) {
            if (source_model.empty())
                throw Error(ErrorCode::missing_source, "--source-model is required for --classifier " + kind);
            s.source = std::make_shared<const TrainedModel>(load_model(source_model));
        } else if (!source_model.empty()) {
            throw Error(ErrorCode::config_mismatch, "--source-model only applies to adaptive classifiers");
        }
        return s;
    }
};

/// Grid without axes the classifier does not use.
inline CVGrid trimmed(CVGrid g, ModelKind kind) {
    if (!uses_privileged(kind)) g.gamma_values.clear();
    return g;
}

inline bool single_cell(const CVGrid& g) {
    return g.c_values.size() == 1 && g.gamma_values.size() <= 1 && g.rbf_gamma_values.size() <= 1;
}

inline std::string describe(const ParamSet& p) {
    std::string s = "C=" + format_double(p.C);
    if (p.gamma) s += " gamma=" + format_double(*p.gamma);
    if (p.rbf_gamma) s += " rbf_gamma=" + format_double(*p.rbf_gamma);
    return s;
}

inline bool internal_failure(ErrorCode c) {
    return c == ErrorCode::solver_failure || c == ErrorCode::not_psd || c == ErrorCode::unbounded;
}

inline std::string one_line(std::string s) {
    for (char& ch : s)
        if (ch == '\n' || ch == '\r') ch = ' ';
    while (!s.empty() && s.back() == ' ') s.pop_back();
    return s;
}

}  // namespace cli

/**
 * Runs the command line given as args (without the program name). Normal output
 * goes to `out`; diagnostics go to `err` as a single line.
 */
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    using namespace cli;
    CLI::App app{"Margin classifiers with privileged information and domain adaptation", "lupi_cli"};
    app.require_subcommand(1);
    app.fallthrough(false);

    // synth
    Common sy_common;
    SynthConfig sy;
    Index sy_classes = 0;
    auto* synth = app.add_subcommand("synth", "Write a seeded synthetic dataset or class collection");
    sy_common.add_run_flags(synth, "Output directory", true);
    synth->add_option("--n-per-class", sy.n_per_class, "Samples per class")->capture_default_str();
    synth->add_option("--dim", sy.dim, "Primary feature dimension")->capture_default_str();
    synth->add_option("--separation", sy.separation, "Distance of each class mean from the boundary")
        ->capture_default_str();
    synth->add_option("--priv-noise", sy.priv_noise, "Noise scale of the privileged channel")->capture_default_str();
    synth->add_option("--target-shift", sy.target_shift, "How far target-domain means move toward the boundary")
        ->capture_default_str();
    synth->add_option("--target-fraction", sy.target_fraction, "Share of target-tagged rows")->capture_default_str();
    synth->add_option("--classes", sy_classes,
                      "0 writes one binary dataset; K >= 2 writes a K-class collection with classes.txt")
        ->capture_default_str();

    // train
    Common tr_common;
    DataFlags tr_data;
    Classifier tr_cls;
    auto* train_cmd = app.add_subcommand("train", "Fit a classifier; cross-validates any grid axis not pinned by a flag");
    tr_common.add_run_flags(train_cmd, "Model file to write", true);
    tr_common.add_model_flags(train_cmd);
    tr_data.add(train_cmd);
    tr_cls.add(train_cmd);

    // predict
    Common pr_common;
    std::string pr_model, pr_features;
    auto* predict_cmd = app.add_subcommand("predict", "Decision values and labels for a feature file");
    pr_common.add_run_flags(predict_cmd, "Predictions file (default: stdout)");
    predict_cmd->add_option("--model", pr_model, "Model file")->required()->check(CLI::ExistingFile);
    predict_cmd->add_option("--features", pr_features, "Features CSV")->required()->check(CLI::ExistingFile);

    // eval
    Common ev_common;
    std::string ev_model;
    DataFlags ev_data;
    auto* eval_cmd = app.add_subcommand("eval", "Average precision and accuracy of a model on labelled data");
    ev_common.add_run_flags(eval_cmd, "JSON file for the scores");
    eval_cmd->add_option("--model", ev_model, "Model file")->required()->check(CLI::ExistingFile);
    ev_data.add(eval_cmd);

    // cv
    Common cv_common;
    DataFlags cv_data;
    Classifier cv_cls;
    int cv_folds = 0;
    auto* cv_cmd = app.add_subcommand("cv", "Cross-validated grid search; prints the score table");
    cv_common.add_run_flags(cv_cmd, "JSON file for the full table");
    cv_common.add_model_flags(cv_cmd);
    cv_data.add(cv_cmd);
    cv_cls.add(cv_cmd);
    cv_cmd->add_option("--folds", cv_folds, "Fold count (overrides the grid file)")->check(CLI::Range(2, 1000));

    // experiment
    Common ex_common;
    std::string ex_protocol = "pairwise", ex_data, ex_source_data, ex_source_trainer = "svm_plus", ex_text_out;
    std::string ex_metric;
    std::vector<std::string> ex_classifiers{"svm", "svm_plus", "adaptive_svm", "adaptive_svm_plus"};
    ProtocolConfig ex;
    bool ex_no_pool = false;
    auto* exp_cmd = app.add_subcommand("experiment", "Run an evaluation protocol and write the report");
    ex_common.add_run_flags(exp_cmd, "JSON report file");
    ex_common.add_model_flags(exp_cmd);
    exp_cmd->add_option("--protocol", ex_protocol, "Evaluation protocol")
        ->capture_default_str()
        ->check(CLI::IsMember({"pairwise", "one_vs_rest", "ratio_sweep"}));
    exp_cmd->add_option("--data", ex_data, "Class collection (pairwise, one_vs_rest) or dataset directory (ratio_sweep)")
        ->required()
        ->check(CLI::ExistingDirectory);
    exp_cmd->add_option("--source-data", ex_source_data, "Source class collection (one_vs_rest)")
        ->check(CLI::ExistingDirectory);
    exp_cmd->add_option("--classifiers", ex_classifiers, "Comma-separated classifier kinds")
        ->delimiter(',')
        ->capture_default_str()
        ->check(CLI::IsMember({"svm", "svm_plus", "adaptive_svm", "adaptive_svm_plus"}));
    exp_cmd->add_option("--source-trainer", ex_source_trainer, "Trainer for source models")
        ->capture_default_str()
        ->check(CLI::IsMember({"svm", "svm_plus"}));
    exp_cmd->add_option("--repeats", ex.repeats, "Repeats per task")->capture_default_str();
    exp_cmd->add_option("--n-train", ex.n_train_per_class, "Training samples per class")->capture_default_str();
    exp_cmd->add_option("--n-test", ex.n_test_per_class, "Test samples per class (cap)")->capture_default_str();
    exp_cmd->add_option("--ratios", ex.ratios, "Comma-separated training ratios (ratio_sweep)")->delimiter(',');
    exp_cmd->add_option("--metric", ex_metric, "average_precision or accuracy (overrides the grid file)")
        ->check(CLI::IsMember({"average_precision", "accuracy"}));
    exp_cmd->add_flag("--no-preserve-ratio", ex_no_pool, "Score all test rows together instead of pooling by ratio");
    exp_cmd->add_option("--text-out", ex_text_out, "Also write the text report to this file");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << one_line(e.what()) << '\n';
        return 1;
    }

    try {
        if (*synth) {
            Echo e;
            sy_common.echo_run(e);
            sy.seed = sy_common.seed;
            e.emplace_back("n_per_class", std::to_string(sy.n_per_class));
            e.emplace_back("dim", std::to_string(sy.dim));
            e.emplace_back("separation", format_double(sy.separation));
            e.emplace_back("priv_noise", format_double(sy.priv_noise));
            e.emplace_back("target_shift", format_double(sy.target_shift));
            e.emplace_back("target_fraction", format_double(sy.target_fraction));
            e.emplace_back("classes", std::to_string(sy_classes));
            print_echo(out, "synth", e);
            std::filesystem::create_directories(sy_common.out);
            if (sy_classes == 0) {
                save_dataset(make_synthetic(sy), DatasetPaths::in_directory(sy_common.out));
                out << "wrote " << 2 * sy.n_per_class << " rows to " << sy_common.out << '\n';
            } else {
                const auto cls = make_synthetic_classes(sy, sy_classes);
                std::string names;
                for (Index k = 0; k < sy_classes; ++k) {
                    const std::string name = "c" + std::to_string(k);
                    names += name + '\n';
                    save_dataset(cls[static_cast<std::size_t>(k)], DatasetPaths::in_directory(sy_common.out, name + "_"));
                }
                detail::write_file(sy_common.out + "/classes.txt", names);
                out << "wrote " << sy_classes << " classes of " << sy.n_per_class << " rows to " << sy_common.out
                    << '\n';
            }
            return 0;
        }

        if (*train_cmd) {
            const TrainerSpec spec = tr_cls.spec(tr_common);
            const CVGrid grid = trimmed(tr_common.grid(), spec.kind);
            Echo e;
            tr_common.echo_run(e);
            e.emplace_back("classifier", tr_cls.kind);
            e.emplace_back("source_model", tr_cls.source_model.empty() ? "-" : tr_cls.source_model);
            tr_data.echo(e);
            tr_common.echo_grid(e, grid);
            print_echo(out, "train", e);
            const TripletDataset data = tr_data.load();
            const Trainer trainer = make_trainer(spec);
            ParamSet params;
            if (single_cell(grid)) {
                params = ParamSet{grid.c_values.front(),
                                  grid.gamma_values.empty() ? std::nullopt : std::optional(grid.gamma_values.front()),
                                  grid.rbf_gamma_values.empty() ? std::nullopt
                                                                : std::optional(grid.rbf_gamma_values.front())};
            } else {
                const auto res = grid_search(trainer, data, grid);
                params = res.best;
                out << "cross-validation over " << res.table.size() << " cells: best " << describe(params) << ", "
                    << to_string(grid.metric) << ' ' << fixed4(res.best_score) << '\n';
            }
            const TrainedModel m = retrain_full(trainer, data, params);
            save_model(m, tr_common.out);
            const Vector f = decision_values(m, data.X);
            out << "trained " << to_string(m.kind) << " with " << describe(params) << ": " << m.sv_X.rows()
                << " support vectors, training accuracy " << fixed4(accuracy(sign_labels(f), data.y)) << '\n';
            out << "model written to " << tr_common.out << '\n';
            return 0;
        }

        if (*predict_cmd) {
            Echo e;
            pr_common.echo_run(e);
            e.emplace_back("model", pr_model);
            e.emplace_back("features", pr_features);
            print_echo(out, "predict", e);
            const TrainedModel m = load_model(pr_model);
            const Vector f = decision_values(m, load_csv_matrix(pr_features));
            const Labels y = sign_labels(f);
            std::string text;
            for (Index i = 0; i < f.size(); ++i) text += format_double(f[i]) + (y[i] == 1 ? ",+1\n" : ",-1\n");
            write_or_print(out, pr_common.out, text);
            if (!pr_common.out.empty())
                out << "wrote " << f.size() << " predictions (" << (y.array() == 1).count() << " positive) to "
                    << pr_common.out << '\n';
            return 0;
        }

        if (*eval_cmd) {
            Echo e;
            ev_common.echo_run(e);
            e.emplace_back("model", ev_model);
            ev_data.echo(e);
            print_echo(out, "eval", e);
            const TrainedModel m = load_model(ev_model);
            const TripletDataset data = ev_data.load();
            const Vector f = decision_values(m, data.X);
            const double acc = accuracy(sign_labels(f), data.y);
            std::optional<double> ap;
            if ((data.y.array() == 1).any()) ap = average_precision(f, data.y);
            out << "n " << data.size() << "\naverage_precision " << (ap ? fixed4(*ap) : "-") << "\naccuracy "
                << fixed4(acc) << '\n';
            if (!ev_common.out.empty()) {
                Json j{{"n", data.size()}, {"average_precision", detail::optional_number(ap)}, {"accuracy", acc}};
                detail::write_file(ev_common.out, j.dump(2) + '\n');
            }
            return 0;
        }

        if (*cv_cmd) {
            const TrainerSpec spec = cv_cls.spec(cv_common);
            CVGrid grid = trimmed(cv_common.grid(), spec.kind);
            if (cv_folds) grid.folds = cv_folds;
            Echo e;
            cv_common.echo_run(e);
            e.emplace_back("classifier", cv_cls.kind);
            e.emplace_back("source_model", cv_cls.source_model.empty() ? "-" : cv_cls.source_model);
            cv_data.echo(e);
            cv_common.echo_grid(e, grid);
            print_echo(out, "cv", e);
            const auto res = grid_search(make_trainer(spec), cv_data.load(), grid);
            out << cv_table_text(res);
            if (!cv_common.out.empty()) detail::write_file(cv_common.out, cv_json(res).dump(2) + '\n');
            return 0;
        }

        if (*exp_cmd) {
            ex.mode = protocol_mode_from_string(ex_protocol);
            ex.classifiers.clear();
            for (const auto& k : ex_classifiers) ex.classifiers.push_back(model_kind_from_string(k));
            ex.source_trainer = model_kind_from_string(ex_source_trainer);
            ex.grid = ex_common.grid();
            if (!ex_metric.empty()) ex.grid.metric = metric_from_string(ex_metric);
            ex.kernel = ex_common.kernel_kind();
            ex.bias_mode = bias_mode_from_string(ex_common.bias_mode);
            ex.master_seed = ex_common.seed;
            ex.preserve_ratio = !ex_no_pool;
            ex.jobs = ex_common.jobs;
            if (ex.mode == ProtocolMode::one_vs_rest && ex_source_data.empty())
                throw Error(ErrorCode::config_mismatch, "--source-data is required for --protocol one_vs_rest");
            ex.validate();
            Echo e;
            ex_common.echo_run(e);
            e.emplace_back("protocol", ex_protocol);
            e.emplace_back("data", ex_data);
            e.emplace_back("source_data", ex_source_data.empty() ? "-" : ex_source_data);
            e.emplace_back("classifiers", join(ex_classifiers));
            e.emplace_back("source_trainer", ex_source_trainer);
            e.emplace_back("repeats", std::to_string(ex.repeats));
            e.emplace_back("n_train_per_class", std::to_string(ex.n_train_per_class));
            e.emplace_back("n_test_per_class", std::to_string(ex.n_test_per_class));
            e.emplace_back("ratios", ex.ratios.empty() ? "-" : join(ex.ratios));
            e.emplace_back("preserve_ratio", ex.preserve_ratio ? "true" : "false");
            ex_common.echo_grid(e, ex.grid);
            print_echo(out, "experiment", e);
            ExperimentReport rep;
            switch (ex.mode) {
                case ProtocolMode::pairwise: rep = run_pairwise(load_collection(ex_data), ex); break;
                case ProtocolMode::one_vs_rest:
                    rep = run_one_vs_rest(load_collection(ex_source_data), load_collection(ex_data), ex);
                    break;
                case ProtocolMode::ratio_sweep: rep = run_ratio_sweep(load_directory(ex_data), ex); break;
            }
            const std::string text = report_text(rep);
            out << '\n' << text;
            if (!ex_text_out.empty()) detail::write_file(ex_text_out, text);
            if (!ex_common.out.empty()) {
                detail::write_file(ex_common.out, report_json_text(rep));
                out << "report written to " << ex_common.out << '\n';
            }
            return 0;
        }
    } catch (const Error& e) {
        if (internal_failure(e.code())) {
            err << "internal error: " << one_line(e.what()) << '\n';
            return 2;
        }
        err << "error: " << one_line(e.what()) << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "internal error: " << one_line(e.what()) << '\n';
        return 2;
    }
    err << "internal error: no subcommand ran\n";
    return 2;
}

}  // namespace lupi
