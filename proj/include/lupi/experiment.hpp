#pragma once

// Evaluation protocols: pairwise easy-to-hard adaptation, one-vs-rest adaptation
// from a separate source collection, and a training-ratio sweep.

#include "lupi/data_io.hpp"
#include "lupi/model_selection.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace lupi {

enum class ProtocolMode { pairwise, one_vs_rest, ratio_sweep };

inline std::string to_string(ProtocolMode m) {
    switch (m) {
        case ProtocolMode::pairwise: return "pairwise";
        case ProtocolMode::one_vs_rest: return "one_vs_rest";
        case ProtocolMode::ratio_sweep: return "ratio_sweep";
    }
    return "unknown";
}

inline ProtocolMode protocol_mode_from_string(std::string_view s) {
    if (s == "pairwise") return ProtocolMode::pairwise;
    if (s == "one_vs_rest") return ProtocolMode::one_vs_rest;
    if (s == "ratio_sweep") return ProtocolMode::ratio_sweep;
    throw Error(ErrorCode::invalid_argument, "unknown protocol '" + std::string(s) + "'");
}

struct ProtocolConfig {
    ProtocolMode mode = ProtocolMode::pairwise;
    std::vector<ModelKind> classifiers{ModelKind::svm, ModelKind::svm_plus, ModelKind::adaptive_svm,
                                       ModelKind::adaptive_svm_plus};
    ModelKind source_trainer = ModelKind::svm_plus;
    Index n_train_per_class = 50;
    Index n_test_per_class = 200;
    int repeats = 20;
    CVGrid grid{decade_grid(-4, 4), decade_grid(-4, 4), {}, 5, Metric::average_precision, 0};
    KernelKind kernel = KernelKind::linear;
    BiasMode bias_mode = BiasMode::none;
    std::uint64_t master_seed = 0;
    bool preserve_ratio = true;
    std::vector<double> ratios;
    /// Worker threads. Results do not depend on it, so reports do not record it.
    int jobs = 1;

    void validate() const {
        if (repeats < 1) throw Error(ErrorCode::config_mismatch, "repeats must be at least 1");
        if (n_train_per_class < 1 || n_test_per_class < 1)
            throw Error(ErrorCode::config_mismatch, "per-class train and test counts must be at least 1");
        if (classifiers.empty()) throw Error(ErrorCode::config_mismatch, "no classifiers selected");
        if (source_trainer != ModelKind::svm && source_trainer != ModelKind::svm_plus)
            throw Error(ErrorCode::config_mismatch, "source trainer must be svm or svm_plus");
        if (kernel == KernelKind::rbf && grid.rbf_gamma_values.empty())
            throw Error(ErrorCode::config_mismatch, "rbf kernel needs rbf_gamma grid values");
        if (kernel == KernelKind::linear && !grid.rbf_gamma_values.empty())
            throw Error(ErrorCode::config_mismatch, "rbf_gamma grid values given for the linear kernel");
        bool priv = uses_privileged(source_trainer);
        for (auto k : classifiers) priv = priv || uses_privileged(k);
        if (priv && grid.gamma_values.empty())
            throw Error(ErrorCode::config_mismatch, "privileged classifiers need gamma grid values");
        if (mode == ProtocolMode::ratio_sweep) {
            if (ratios.empty()) throw Error(ErrorCode::config_mismatch, "ratio sweep needs at least one ratio");
            for (double r : ratios)
                if (!(r > 0.0 && r <= 1.0)) throw Error(ErrorCode::config_mismatch, "ratios must lie in (0, 1]");
        }
        try {
            grid.validate();
        } catch (const Error& e) {
            throw Error(ErrorCode::config_mismatch, e.what());
        }
    }
};

/// A named single-class sample collection; labels are assigned per task.
struct ClassData {
    std::string name;
    TripletDataset data;
};

struct RepeatResult {
    std::optional<double> value;          ///< headline metric; empty when the repeat failed
    std::optional<double> source_domain;  ///< metric on source-tagged test rows only
    std::optional<double> target_domain;  ///< metric on target-tagged test rows only
    std::optional<ParamSet> params;       ///< hyperparameters chosen for the target-side fit
    bool fallback = false;                ///< adaptive kind trained without a source model
    std::optional<std::string> error;
};

struct TaskResult {
    std::string task;
    ModelKind classifier = ModelKind::svm;
    std::vector<RepeatResult> repeats;
    bool failed = false;  ///< some repeat failed; excluded from overall means
    std::optional<double> mean;
    std::optional<double> std_error;
};

struct Comparison {
    std::string task;  ///< empty for the overall comparison
    ModelKind a = ModelKind::svm;
    ModelKind b = ModelKind::svm;
    std::optional<double> z;  ///< empty when both standard errors vanish
    bool significant = false;
};

struct OverallResult {
    ModelKind classifier = ModelKind::svm;
    std::optional<double> mean;
    std::optional<double> std_error;
    Index tasks_used = 0;
    Index tasks_excluded = 0;
};

struct ExperimentReport {
    ProtocolConfig config;
    std::vector<std::string> tasks;
    std::vector<TaskResult> per_task;  ///< task-major, classifier order as configured
    std::vector<Comparison> significance;
    std::vector<OverallResult> overall;
    std::vector<Comparison> overall_significance;
    Index excluded = 0;  ///< (task, classifier) entries left out of the overall means
    std::string test_sampling;

    const TaskResult& result(std::size_t task, std::size_t classifier) const {
        return per_task[task * config.classifiers.size() + classifier];
    }
};

/**
 * Pools predictions so that a source_fraction share comes from the source pool.
 * The pooled size is the smaller pool among those that contribute (the source
 * pool alone for fraction 1, the target pool alone for fraction 0); rows are
 * drawn without replacement, source picks first.
 */
inline ScoredPredictions ratio_preserving_pool(const ScoredPredictions& source_preds,
                                               const ScoredPredictions& target_preds, double source_fraction,
                                               std::uint64_t seed) {
    if (!(source_fraction >= 0.0 && source_fraction <= 1.0))
        throw Error(ErrorCode::invalid_argument, "source_fraction must lie in [0, 1]");
    const Index ns = source_preds.scores.size(), nt = target_preds.scores.size();
    if (source_preds.labels.size() != ns || target_preds.labels.size() != nt)
        throw Error(ErrorCode::length_mismatch, "scores and labels differ in length");
    if (source_fraction > 0.0 && ns == 0) throw Error(ErrorCode::empty_pool, "source prediction pool is empty");
    if (source_fraction < 1.0 && nt == 0) throw Error(ErrorCode::empty_pool, "target prediction pool is empty");
    const Index total = source_fraction == 1.0 ? ns : source_fraction == 0.0 ? nt : std::min(ns, nt);
    const Index take_s =
        std::min(ns, static_cast<Index>(std::floor(source_fraction * static_cast<double>(total))));
    const Index take_t = std::min(nt, total - take_s);
    Rng rng(seed);
    auto draw = [&](Index n, Index k) {
        std::vector<Index> idx(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
        rng.shuffle(idx);
        idx.resize(static_cast<std::size_t>(k));
        return idx;
    };
    const auto is = draw(ns, take_s);
    const auto it = draw(nt, take_t);
    ScoredPredictions out;
    out.scores.resize(take_s + take_t);
    out.labels.resize(take_s + take_t);
    Index at = 0;
    for (Index i : is) {
        out.scores[at] = source_preds.scores[i];
        out.labels[at++] = source_preds.labels[i];
    }
    for (Index i : it) {
        out.scores[at] = target_preds.scores[i];
        out.labels[at++] = target_preds.labels[i];
    }
    return out;
}

namespace detail {

struct FittedModel {
    std::shared_ptr<const TrainedModel> model;
    ParamSet params;
};

inline CVGrid grid_for(const ProtocolConfig& cfg, ModelKind kind, std::uint64_t seed) {
    CVGrid g = cfg.grid;
    if (!uses_privileged(kind)) g.gamma_values.clear();
    g.seed = seed;
    return g;
}

inline FittedModel fit_with_cv(const ProtocolConfig& cfg, ModelKind kind, const TripletDataset& data,
                               std::shared_ptr<const TrainedModel> source, std::uint64_t seed) {
    TrainerSpec spec;
    spec.kind = kind;
    spec.kernel = cfg.kernel;
    spec.bias_mode = cfg.bias_mode;
    spec.source = std::move(source);
    const Trainer trainer = make_trainer(spec);
    const auto best = grid_search(trainer, data, grid_for(cfg, kind, seed));
    return {std::make_shared<const TrainedModel>(retrain_full(trainer, data, best.best)), best.best};
}

inline bool has_cv_classes(const TripletDataset& d, int folds) {
    return static_cast<int>(d.rows_with_label(1).size()) >= folds &&
           static_cast<int>(d.rows_with_label(-1).size()) >= folds;
}

inline ModelKind fallback_kind(ModelKind k) {
    return k == ModelKind::adaptive_svm_plus ? ModelKind::svm_plus
           : k == ModelKind::adaptive_svm    ? ModelKind::svm
                                             : k;
}

inline double evaluate(Metric metric, const Vector& scores, const Labels& labels) {
    return metric == Metric::average_precision ? average_precision(scores, labels)
                                               : accuracy(sign_labels(scores), labels);
}

inline std::optional<double> evaluate_if_possible(Metric metric, const Vector& scores, const Labels& labels) {
    if (labels.size() == 0) return std::nullopt;
    if (metric == Metric::average_precision && (labels.array() == 1).count() == 0) return std::nullopt;
    return evaluate(metric, scores, labels);
}

/**
 * One repeat on a domain-tagged split. Every classifier answers target-tagged
 * test rows with a model fitted on the target-tagged training rows (adaptive
 * kinds on top of the source model) and source-tagged test rows with its
 * source-side partner: the same kind fitted on the source-tagged training rows,
 * or the source model itself for adaptive kinds. Without enough source rows for
 * cross-validation all fits use the target rows and adaptive kinds fall back to
 * their non-adaptive counterparts.
 */
inline std::vector<RepeatResult> evaluate_domain_split(const ProtocolConfig& cfg, const TripletDataset& train,
                                                       const TripletDataset& test, double source_fraction,
                                                       std::uint64_t seed) {
    const Metric metric = cfg.grid.metric;
    const TripletDataset train_s = train.subset(train.rows_in(Domain::source));
    const TripletDataset train_t = train.subset(train.rows_in(Domain::target));
    const TripletDataset test_s = test.subset(test.rows_in(Domain::source));
    const TripletDataset test_t = test.subset(test.rows_in(Domain::target));
    const bool with_source = has_cv_classes(train_s, cfg.grid.folds);
    const std::uint64_t seed_s = derive_seed(seed, 1), seed_t = derive_seed(seed, 2), seed_pool = derive_seed(seed, 3);

    // Source-side fits are shared: the source model doubles as the partner of its own kind.
    std::vector<std::pair<ModelKind, FittedModel>> source_side;
    std::vector<std::pair<ModelKind, std::string>> source_side_error;
    auto source_fit = [&](ModelKind k) -> const FittedModel& {
        for (const auto& [kind, what] : source_side_error)
            if (kind == k) throw Error(ErrorCode::solver_failure, "source-side fit failed: " + what);
        for (const auto& [kind, fit] : source_side)
            if (kind == k) return fit;
        try {
            source_side.emplace_back(k, fit_with_cv(cfg, k, train_s, nullptr, seed_s));
            return source_side.back().second;
        } catch (const std::exception& e) {
            source_side_error.emplace_back(k, e.what());
            throw;
        }
    };

    std::vector<RepeatResult> out;
    for (ModelKind kind : cfg.classifiers) {
        RepeatResult r;
        try {
            FittedModel for_source_rows, for_target_rows;
            if (is_adaptive(kind) && with_source) {
                for_source_rows = source_fit(cfg.source_trainer);
                for_target_rows = fit_with_cv(cfg, kind, train_t, for_source_rows.model, seed_t);
            } else {
                const ModelKind k = fallback_kind(kind);
                r.fallback = is_adaptive(kind);
                for_target_rows = fit_with_cv(cfg, k, train_t, nullptr, seed_t);
                for_source_rows = with_source ? source_fit(k) : for_target_rows;
            }
            r.params = for_target_rows.params;
            ScoredPredictions ps{decision_values(*for_source_rows.model, test_s.X), test_s.y, std::nullopt};
            ScoredPredictions pt{decision_values(*for_target_rows.model, test_t.X), test_t.y, std::nullopt};
            r.source_domain = evaluate_if_possible(metric, ps.scores, ps.labels);
            r.target_domain = evaluate_if_possible(metric, pt.scores, pt.labels);
            if (cfg.preserve_ratio) {
                const double f = ps.scores.size() == 0 ? 0.0 : pt.scores.size() == 0 ? 1.0 : source_fraction;
                const auto pooled = ratio_preserving_pool(ps, pt, f, seed_pool);
                r.value = evaluate(metric, pooled.scores, pooled.labels);
            } else {
                Vector sc(ps.scores.size() + pt.scores.size());
                sc << ps.scores, pt.scores;
                Labels y(sc.size());
                y << ps.labels, pt.labels;
                r.value = evaluate(metric, sc, y);
            }
        } catch (const std::exception& e) {
            r.value.reset();
            r.error = e.what();
        }
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<RepeatResult> failed_unit(const ProtocolConfig& cfg, const std::string& what) {
    RepeatResult r;
    r.error = what;
    return std::vector<RepeatResult>(cfg.classifiers.size(), r);
}

inline TripletDataset labelled(const TripletDataset& d, int label) {
    TripletDataset out = d;
    out.y = Labels::Constant(d.size(), label);
    return out;
}

/// Seed of one (task, repeat) unit. Keyed by task name so tasks do not depend on each other's presence.
inline std::uint64_t unit_seed(const ProtocolConfig& cfg, const std::string& task, std::size_t repeat) {
    return derive_seed(cfg.master_seed, stable_hash(task), repeat);
}

inline double source_share(const TripletDataset& d) {
    return static_cast<double>(d.rows_in(Domain::source).size()) / static_cast<double>(d.size());
}

/// Runs fn(unit) for every unit on `jobs` threads; output slots are keyed by unit.
template <class F>
std::vector<std::vector<RepeatResult>> run_units(std::size_t n_units, int jobs, F fn) {
    std::vector<std::vector<RepeatResult>> results(n_units);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t u = next++; u < n_units; u = next++) results[u] = fn(u);
    };
    const std::size_t n_threads = std::min<std::size_t>(std::max(jobs, 1), std::max<std::size_t>(n_units, 1));
    if (n_threads <= 1) {
        worker();
        return results;
    }
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return results;
}

inline ExperimentReport assemble(const ProtocolConfig& cfg, std::vector<std::string> tasks,
                                 const std::vector<std::vector<RepeatResult>>& units, std::string test_sampling) {
    ExperimentReport rep;
    rep.config = cfg;
    rep.tasks = std::move(tasks);
    rep.test_sampling = std::move(test_sampling);
    const std::size_t K = cfg.classifiers.size(), R = static_cast<std::size_t>(cfg.repeats);
    for (std::size_t t = 0; t < rep.tasks.size(); ++t)
        for (std::size_t k = 0; k < K; ++k) {
            TaskResult tr;
            tr.task = rep.tasks[t];
            tr.classifier = cfg.classifiers[k];
            std::vector<double> values;
            for (std::size_t r = 0; r < R; ++r) {
                const RepeatResult& rr = units[t * R + r][k];
                tr.repeats.push_back(rr);
                if (rr.value) values.push_back(*rr.value);
                else tr.failed = true;
            }
            if (!values.empty()) {
                const auto ms = mean_and_stderr(values);
                tr.mean = ms.mean;
                tr.std_error = ms.std_error;
            }
            rep.per_task.push_back(std::move(tr));
        }
    auto compare = [](const std::string& task, ModelKind a, ModelKind b, std::optional<double> ma,
                      std::optional<double> sa, std::optional<double> mb, std::optional<double> sb) {
        Comparison c{task, a, b, std::nullopt, false};
        if (!ma || !mb) return c;
        try {
            const auto z = z_test(*ma, *sa, *mb, *sb);
            c.z = z.z;
            c.significant = z.significant;
        } catch (const Error&) {
        }
        return c;
    };
    for (std::size_t t = 0; t < rep.tasks.size(); ++t)
        for (std::size_t a = 0; a < K; ++a)
            for (std::size_t b = a + 1; b < K; ++b) {
                const auto& ra = rep.result(t, a);
                const auto& rb = rep.result(t, b);
                if (ra.failed || rb.failed) continue;
                rep.significance.push_back(
                    compare(rep.tasks[t], ra.classifier, rb.classifier, ra.mean, ra.std_error, rb.mean, rb.std_error));
            }
    for (std::size_t k = 0; k < K; ++k) {
        OverallResult o;
        o.classifier = cfg.classifiers[k];
        std::vector<std::size_t> used;
        for (std::size_t t = 0; t < rep.tasks.size(); ++t) {
            if (rep.result(t, k).failed) ++o.tasks_excluded;
            else used.push_back(t);
        }
        o.tasks_used = static_cast<Index>(used.size());
        rep.excluded += o.tasks_excluded;
        if (!used.empty()) {
            // Per-repeat averages over the used tasks; their spread gives the standard error.
            std::vector<double> per_repeat(R, 0.0);
            for (std::size_t r = 0; r < R; ++r) {
                for (std::size_t t : used) per_repeat[r] += *rep.result(t, k).repeats[r].value;
                per_repeat[r] /= static_cast<double>(used.size());
            }
            const auto ms = mean_and_stderr(per_repeat);
            o.mean = ms.mean;
            o.std_error = ms.std_error;
        }
        rep.overall.push_back(o);
    }
    for (std::size_t a = 0; a < K; ++a)
        for (std::size_t b = a + 1; b < K; ++b) {
            const auto& oa = rep.overall[a];
            const auto& ob = rep.overall[b];
            rep.overall_significance.push_back(
                compare("", oa.classifier, ob.classifier, oa.mean, oa.std_error, ob.mean, ob.std_error));
        }
    return rep;
}

inline void check_mode(const ProtocolConfig& cfg, ProtocolMode expected) {
    cfg.validate();
    if (cfg.mode != expected)
        throw Error(ErrorCode::config_mismatch,
                    "protocol mode is " + to_string(cfg.mode) + ", expected " + to_string(expected));
}

inline void check_classes(const std::vector<ClassData>& classes, bool need_privileged) {
    if (classes.size() < 2) throw Error(ErrorCode::config_mismatch, "at least two classes are needed");
    for (const auto& c : classes) {
        c.data.validate();
        if (c.data.X.cols() != classes.front().data.X.cols())
            throw Error(ErrorCode::dimension_mismatch, "class '" + c.name + "' has a different feature dimension");
        if (need_privileged && !c.data.Xstar)
            throw Error(ErrorCode::config_mismatch, "class '" + c.name + "' has no privileged features");
    }
}

inline bool needs_privileged(const ProtocolConfig& cfg) {
    for (auto k : cfg.classifiers)
        if (uses_privileged(k)) return true;
    return uses_privileged(cfg.source_trainer);
}

}  // namespace detail

/**
 * Every unordered pair of classes is a task; the first class of the pair is the
 * positive one. Each repeat draws a per-class train/test split (proportional
 * over the domain tags) and evaluates with evaluate_domain_split.
 */
inline ExperimentReport run_pairwise(const std::vector<ClassData>& classes, const ProtocolConfig& cfg) {
    detail::check_mode(cfg, ProtocolMode::pairwise);
    detail::check_classes(classes, detail::needs_privileged(cfg));
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::string> names;
    for (std::size_t a = 0; a < classes.size(); ++a)
        for (std::size_t b = a + 1; b < classes.size(); ++b) {
            pairs.emplace_back(a, b);
            names.push_back(classes[a].name + " vs " + classes[b].name);
        }
    const std::size_t R = static_cast<std::size_t>(cfg.repeats);
    auto units = detail::run_units(pairs.size() * R, cfg.jobs, [&](std::size_t u) {
        const std::size_t t = u / R, r = u % R;
        const std::uint64_t seed = detail::unit_seed(cfg, names[t], r);
        try {
            const auto pos = detail::labelled(classes[pairs[t].first].data, 1);
            const auto neg = detail::labelled(classes[pairs[t].second].data, -1);
            const TripletDataset pair = concatenate({&pos, &neg});
            const auto [train, test] =
                split_train_test(pair, cfg.n_train_per_class, derive_seed(seed, 0), cfg.n_test_per_class);
            return detail::evaluate_domain_split(cfg, train, test, detail::source_share(pair), seed);
        } catch (const std::exception& e) {
            return detail::failed_unit(cfg, e.what());
        }
    });
    return detail::assemble(cfg, std::move(names), units, "per class, proportional over source/target tags");
}

/**
 * One task per target class: n_train positives against n_train negatives drawn
 * from the other classes, tested on the remaining positives balanced by as many
 * unused negatives. The source model for the class is fitted on the source
 * collection (the class against an equal-sized draw from the other classes).
 */
inline ExperimentReport run_one_vs_rest(const std::vector<ClassData>& source_classes,
                                        const std::vector<ClassData>& target_classes, const ProtocolConfig& cfg) {
    detail::check_mode(cfg, ProtocolMode::one_vs_rest);
    detail::check_classes(target_classes, detail::needs_privileged(cfg));
    if (source_classes.size() != target_classes.size())
        throw Error(ErrorCode::config_mismatch, "source and target collections list different classes");
    for (const auto& c : source_classes) c.data.validate();
    std::vector<std::string> names;
    for (const auto& c : target_classes) names.push_back(c.name + " vs rest");
    const std::size_t R = static_cast<std::size_t>(cfg.repeats), C = target_classes.size();

    // Draws `count` rows of class `c` (as +1) and of the other classes (as -1).
    auto one_vs_rest = [](const std::vector<ClassData>& cls, std::size_t c, Rng& rng) {
        std::vector<const TripletDataset*> parts;
        std::vector<TripletDataset> neg_parts;
        for (std::size_t o = 0; o < cls.size(); ++o)
            if (o != c) neg_parts.push_back(detail::labelled(cls[o].data, -1));
        for (const auto& p : neg_parts) parts.push_back(&p);
        TripletDataset neg = concatenate(parts);
        std::vector<Index> order(static_cast<std::size_t>(neg.size()));
        for (Index i = 0; i < neg.size(); ++i) order[static_cast<std::size_t>(i)] = i;
        rng.shuffle(order);
        return std::make_pair(detail::labelled(cls[c].data, 1), neg.subset(order));
    };

    auto units = detail::run_units(C * R, cfg.jobs, [&](std::size_t u) {
        const std::size_t c = u / R, r = u % R;
        const std::uint64_t seed = detail::unit_seed(cfg, names[c], r);
        try {
            Rng rng(derive_seed(seed, 0));
            auto [pos, neg] = one_vs_rest(target_classes, c, rng);
            const Index n = cfg.n_train_per_class;
            if (pos.size() < n + 1)
                throw Error(ErrorCode::too_few_samples, "class '" + target_classes[c].name + "' has " +
                                                            std::to_string(pos.size()) + " samples, need " +
                                                            std::to_string(n + 1));
            std::vector<Index> pos_order(static_cast<std::size_t>(pos.size()));
            for (Index i = 0; i < pos.size(); ++i) pos_order[static_cast<std::size_t>(i)] = i;
            rng.shuffle(pos_order);
            if (neg.size() < n) throw Error(ErrorCode::too_few_samples, "not enough negatives for training");
            const Index n_test = std::min(pos.size() - n, neg.size() - n);
            if (n_test < 1) throw Error(ErrorCode::empty_test_set, "no rows left for testing");
            auto range = [](const std::vector<Index>& v, Index from, Index count) {
                return std::vector<Index>(v.begin() + from, v.begin() + from + count);
            };
            std::vector<Index> neg_order(static_cast<std::size_t>(neg.size()));
            for (Index i = 0; i < neg.size(); ++i) neg_order[static_cast<std::size_t>(i)] = i;
            const auto ptr = pos.subset(range(pos_order, 0, n)), pte = pos.subset(range(pos_order, n, n_test));
            const auto ntr = neg.subset(range(neg_order, 0, n)), nte = neg.subset(range(neg_order, n, n_test));
            const TripletDataset train = concatenate({&ptr, &ntr});
            const TripletDataset stacked = concatenate({&pte, &nte});
            std::vector<Index> mix(static_cast<std::size_t>(stacked.size()));
            for (Index i = 0; i < stacked.size(); ++i) mix[static_cast<std::size_t>(i)] = i;
            rng.shuffle(mix);
            const TripletDataset test = stacked.subset(mix);

            std::optional<detail::FittedModel> source;
            std::optional<std::string> source_error;
            bool need_source = false;
            for (auto k : cfg.classifiers) need_source = need_source || is_adaptive(k);
            if (need_source) {
                try {
                    Rng srng(derive_seed(seed, 4));
                    auto [spos, sneg] = one_vs_rest(source_classes, c, srng);
                    std::vector<Index> take(static_cast<std::size_t>(std::min(spos.size(), sneg.size())));
                    for (std::size_t i = 0; i < take.size(); ++i) take[i] = static_cast<Index>(i);
                    const auto sn = sneg.subset(take);
                    const TripletDataset src = concatenate({&spos, &sn});
                    source = detail::fit_with_cv(cfg, cfg.source_trainer, src, nullptr, derive_seed(seed, 1));
                } catch (const std::exception& e) {
                    source_error = e.what();
                }
            }
            std::vector<RepeatResult> out;
            for (ModelKind kind : cfg.classifiers) {
                RepeatResult res;
                try {
                    detail::FittedModel fit;
                    if (is_adaptive(kind) && source) {
                        fit = detail::fit_with_cv(cfg, kind, train, source->model, derive_seed(seed, 2));
                    } else {
                        res.fallback = is_adaptive(kind);
                        fit = detail::fit_with_cv(cfg, detail::fallback_kind(kind), train, nullptr,
                                                  derive_seed(seed, 2));
                    }
                    res.params = fit.params;
                    res.value = detail::evaluate(cfg.grid.metric, decision_values(*fit.model, test.X), test.y);
                } catch (const std::exception& e) {
                    res.value.reset();
                    res.error = e.what();
                }
                out.push_back(std::move(res));
            }
            return out;
        } catch (const std::exception& e) {
            return detail::failed_unit(cfg, e.what());
        }
    });
    return detail::assemble(cfg, std::move(names), units, "remaining positives balanced by unused negatives");
}

namespace detail {

/// Per class and domain stratum, a `ratio` share of the rows for training and the rest for testing.
inline std::pair<TripletDataset, TripletDataset> split_by_ratio(const TripletDataset& data, double ratio,
                                                                std::uint64_t seed) {
    std::vector<Index> train, test;
    std::uint64_t stream = 0;
    for (int label : {1, -1})
        for (Domain dom : {Domain::source, Domain::target}) {
            std::vector<Index> rows;
            for (Index i : data.rows_with_label(label)) {
                const Domain tag = data.domain ? (*data.domain)[static_cast<std::size_t>(i)] : Domain::target;
                if (tag == dom) rows.push_back(i);
            }
            Rng rng(derive_seed(seed, stream++));
            rng.shuffle(rows);
            const auto k = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(rows.size())));
            train.insert(train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k));
            test.insert(test.end(), rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end());
        }
    if (test.empty()) throw Error(ErrorCode::empty_test_set, "no held-out rows at this training ratio");
    Rng mix(derive_seed(seed, stream));
    mix.shuffle(train);
    mix.shuffle(test);
    return {data.subset(train), data.subset(test)};
}

inline std::string ratio_name(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ratio=%g", r);
    return buf;
}

}  // namespace detail

/// One task per training ratio; each repeat trains on that share of the rows and tests on the rest.
inline ExperimentReport run_ratio_sweep(const TripletDataset& data, const ProtocolConfig& cfg) {
    detail::check_mode(cfg, ProtocolMode::ratio_sweep);
    data.validate();
    require_binary_labels(data.y);
    if (detail::needs_privileged(cfg) && !data.Xstar)
        throw Error(ErrorCode::config_mismatch, "dataset has no privileged features");
    std::vector<std::string> names;
    for (double r : cfg.ratios) names.push_back(detail::ratio_name(r));
    const std::size_t R = static_cast<std::size_t>(cfg.repeats);
    auto units = detail::run_units(cfg.ratios.size() * R, cfg.jobs, [&](std::size_t u) {
        const std::size_t t = u / R, r = u % R;
        const std::uint64_t seed = detail::unit_seed(cfg, names[t], r);
        try {
            const auto [train, test] = detail::split_by_ratio(data, cfg.ratios[t], derive_seed(seed, 0));
            return detail::evaluate_domain_split(cfg, train, test, detail::source_share(data), seed);
        } catch (const std::exception& e) {
            return detail::failed_unit(cfg, e.what());
        }
    });
    return detail::assemble(cfg, std::move(names), units, "per class and domain, held-out remainder");
}

}  // namespace lupi
