#pragma once

// Report rendering: machine-readable JSON with full precision and aligned text
// tables with four decimals.

#include "lupi/experiment.hpp"

#include <json.hpp>

#include <cstdio>
#include <string>
#include <vector>

namespace lupi {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view report_format = "lupi-experiment-report v1";

namespace detail {

inline Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json params_json(const std::optional<ParamSet>& p) {
    if (!p) return nullptr;
    Json j;
    j["C"] = p->C;
    j["gamma"] = optional_number(p->gamma);
    j["rbf_gamma"] = optional_number(p->rbf_gamma);
    return j;
}

inline Json comparison_json(const Comparison& c) {
    Json j;
    if (!c.task.empty()) j["task"] = c.task;
    j["a"] = to_string(c.a);
    j["b"] = to_string(c.b);
    j["z"] = optional_number(c.z);
    j["significant"] = c.significant;
    return j;
}

inline std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

inline std::string fixed4(const std::optional<double>& v) { return v ? fixed4(*v) : "-"; }

/// Left-aligned first column, right-aligned others, two spaces between columns.
inline std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    if (rows.empty()) return "";
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    std::string out;
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t c = 0; c < r.size(); ++c) {
            const std::string pad(width[c] - r[c].size(), ' ');
            if (c) line += "  ";
            line += c == 0 ? r[c] + pad : pad + r[c];
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + '\n';
    }
    return out;
}

}  // namespace detail

/// Configuration echo. The worker count is left out: it never changes results.
inline Json config_json(const ProtocolConfig& cfg) {
    Json j;
    j["mode"] = to_string(cfg.mode);
    Json kinds = Json::array();
    for (auto k : cfg.classifiers) kinds.push_back(to_string(k));
    j["classifiers"] = kinds;
    j["source_trainer"] = to_string(cfg.source_trainer);
    j["n_train_per_class"] = cfg.n_train_per_class;
    j["n_test_per_class"] = cfg.n_test_per_class;
    j["repeats"] = cfg.repeats;
    j["kernel"] = cfg.kernel == KernelKind::linear ? "linear" : "rbf";
    j["bias_mode"] = to_string(cfg.bias_mode);
    j["preserve_ratio"] = cfg.preserve_ratio;
    j["ratios"] = cfg.ratios;
    j["grid"] = {{"c_values", cfg.grid.c_values},
                 {"gamma_values", cfg.grid.gamma_values},
                 {"rbf_gamma_values", cfg.grid.rbf_gamma_values},
                 {"folds", cfg.grid.folds},
                 {"metric", to_string(cfg.grid.metric)}};
    j["master_seed"] = cfg.master_seed;
    return j;
}

/// One record per task x classifier x repeat, plus the aggregates.
inline Json report_json(const ExperimentReport& rep) {
    Json j;
    j["format"] = report_format;
    j["master_seed"] = rep.config.master_seed;
    j["config"] = config_json(rep.config);
    j["test_sampling"] = rep.test_sampling;
    j["tasks"] = rep.tasks;
    Json records = Json::array();
    for (const auto& t : rep.per_task)
        for (std::size_t r = 0; r < t.repeats.size(); ++r) {
            const auto& rr = t.repeats[r];
            Json rec;
            rec["task"] = t.task;
            rec["classifier"] = to_string(t.classifier);
            rec["repeat"] = r;
            rec["value"] = detail::optional_number(rr.value);
            rec["source_domain"] = detail::optional_number(rr.source_domain);
            rec["target_domain"] = detail::optional_number(rr.target_domain);
            rec["params"] = detail::params_json(rr.params);
            rec["fallback"] = rr.fallback;
            rec["error"] = rr.error ? Json(*rr.error) : Json(nullptr);
            records.push_back(std::move(rec));
        }
    j["records"] = std::move(records);
    Json per_task = Json::array();
    for (const auto& t : rep.per_task)
        per_task.push_back({{"task", t.task},
                            {"classifier", to_string(t.classifier)},
                            {"failed", t.failed},
                            {"mean", detail::optional_number(t.mean)},
                            {"std_error", detail::optional_number(t.std_error)}});
    j["per_task"] = std::move(per_task);
    Json sig = Json::array();
    for (const auto& c : rep.significance) sig.push_back(detail::comparison_json(c));
    j["significance"] = std::move(sig);
    Json overall = Json::array();
    for (const auto& o : rep.overall)
        overall.push_back({{"classifier", to_string(o.classifier)},
                           {"mean", detail::optional_number(o.mean)},
                           {"std_error", detail::optional_number(o.std_error)},
                           {"tasks_used", o.tasks_used},
                           {"tasks_excluded", o.tasks_excluded}});
    j["overall"] = std::move(overall);
    Json osig = Json::array();
    for (const auto& c : rep.overall_significance) osig.push_back(detail::comparison_json(c));
    j["overall_significance"] = std::move(osig);
    j["excluded"] = rep.excluded;
    return j;
}

inline std::string report_json_text(const ExperimentReport& rep) { return report_json(rep).dump(2) + '\n'; }

/// Mean of the per-domain metric over the successful repeats of the used tasks.
inline std::optional<double> domain_mean(const ExperimentReport& rep, std::size_t classifier, Domain d) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < rep.tasks.size(); ++t) {
        const auto& res = rep.result(t, classifier);
        if (res.failed) continue;
        for (const auto& r : res.repeats) {
            const auto& v = d == Domain::source ? r.source_domain : r.target_domain;
            if (v) {
                sum += *v;
                ++n;
            }
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

/// Human-readable report: per-task means with standard errors, overall means,
/// per-domain breakdown and the overall z-tests.
inline std::string report_text(const ExperimentReport& rep) {
    const auto& kinds = rep.config.classifiers;
    const std::string metric = rep.config.grid.metric == Metric::average_precision ? "AP" : "accuracy";
    std::string out = "protocol " + to_string(rep.config.mode) + ", " + std::to_string(rep.config.repeats) +
                      " repeats, metric " + metric + " (mean +- stderr)\n\n";
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head{"task"};
    for (auto k : kinds) head.push_back(to_string(k));
    rows.push_back(head);
    for (std::size_t t = 0; t < rep.tasks.size(); ++t) {
        std::vector<std::string> row{rep.tasks[t]};
        for (std::size_t k = 0; k < kinds.size(); ++k) {
            const auto& res = rep.result(t, k);
            std::string cell = detail::fixed4(res.mean) + " +- " + detail::fixed4(res.std_error);
            if (res.failed) cell = "failed";
            row.push_back(cell);
        }
        rows.push_back(row);
    }
    std::vector<std::string> overall{"overall"};
    for (const auto& o : rep.overall) overall.push_back(detail::fixed4(o.mean) + " +- " + detail::fixed4(o.std_error));
    rows.push_back(overall);
    out += detail::render_table(rows);

    bool any_domain = false;
    std::vector<std::vector<std::string>> dom{{"domain"}};
    for (auto k : kinds) dom.front().push_back(to_string(k));
    for (Domain d : {Domain::source, Domain::target}) {
        std::vector<std::string> row{std::string(to_string(d))};
        for (std::size_t k = 0; k < kinds.size(); ++k) {
            const auto v = domain_mean(rep, k, d);
            any_domain = any_domain || v.has_value();
            row.push_back(detail::fixed4(v));
        }
        dom.push_back(row);
    }
    if (any_domain) out += "\nper-domain means\n" + detail::render_table(dom);

    if (!rep.overall_significance.empty()) {
        std::vector<std::vector<std::string>> sig{{"comparison", "z", "significant"}};
        for (const auto& c : rep.overall_significance)
            sig.push_back({to_string(c.a) + " vs " + to_string(c.b), detail::fixed4(c.z), c.significant ? "yes" : "no"});
        out += "\noverall z-tests (|z| >= 1.96)\n" + detail::render_table(sig);
    }
    out += "\nexcluded (task, classifier) entries: " + std::to_string(rep.excluded) + '\n';
    return out;
}

/// Cross-validation table: one row per grid cell.
inline std::string cv_table_text(const GridResult& g) {
    std::vector<std::vector<std::string>> rows{{"C", "gamma", "rbf_gamma", "mean", "folds"}};
    auto num = [](const std::optional<double>& v) {
        if (!v) return std::string("-");
        char buf[64];
        std::snprintf(buf, sizeof buf, "%g", *v);
        return std::string(buf);
    };
    for (const auto& c : g.table) {
        std::string folds;
        for (double s : c.fold_scores) folds += (folds.empty() ? "" : " ") + detail::fixed4(s);
        rows.push_back({num(c.params.C), num(c.params.gamma), num(c.params.rbf_gamma),
                        c.error ? "failed" : detail::fixed4(c.mean), c.error ? *c.error : folds});
    }
    return detail::render_table(rows) + "best: C=" + num(g.best.C) + " gamma=" + num(g.best.gamma) +
           " rbf_gamma=" + num(g.best.rbf_gamma) + " score=" + detail::fixed4(g.best_score) + '\n';
}

inline Json cv_json(const GridResult& g) {
    Json j;
    j["best"] = detail::params_json(g.best);
    j["best_score"] = g.best_score;
    Json cells = Json::array();
    for (const auto& c : g.table) {
        Json cell;
        cell["params"] = detail::params_json(c.params);
        cell["fold_scores"] = c.fold_scores;
        cell["mean"] = c.error ? Json(nullptr) : Json(c.mean);
        cell["error"] = c.error ? Json(*c.error) : Json(nullptr);
        cells.push_back(std::move(cell));
    }
    j["cells"] = std::move(cells);
    return j;
}

}  // namespace lupi
