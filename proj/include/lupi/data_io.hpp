#pragma once

// File formats: CSV feature matrices, label and domain lists, the versioned
// model text format, and seeded train/test splitting.

#include "lupi/dataset.hpp"
#include "lupi/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace lupi {

inline constexpr std::string_view model_magic = "lupi-margin-model";
inline constexpr int model_version = 1;

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline Error parse_error(const std::string& where, std::size_t line, const std::string& what) {
    return Error(ErrorCode::parse_error, where + ":" + std::to_string(line) + ": " + what);
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

/// Lines of a text file without terminators. A final empty line is not reported.
inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write '" + path + "'");
    out << content;
    if (!out) throw Error(ErrorCode::io_error, "write to '" + path + "' failed");
}

}  // namespace detail

/// Dense comma-separated matrix, one row per line, no header.
inline Matrix load_csv_matrix(const std::string& path) {
    const auto lines = detail::read_lines(path);
    std::vector<std::vector<double>> rows;
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        std::string_view text = detail::trim(lines[ln]);
        if (text.empty()) throw detail::parse_error(path, ln + 1, "empty row");
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = text.find(',', start);
            const auto field = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
            const auto v = detail::parse_double(field);
            if (!v || !std::isfinite(*v))
                throw detail::parse_error(path, ln + 1,
                                          "field " + std::to_string(row.size() + 1) + " is not a finite number: '" +
                                              std::string(detail::trim(field)) + "'");
            row.push_back(*v);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw detail::parse_error(path, ln + 1,
                                      "ragged row: " + std::to_string(row.size()) + " fields, expected " +
                                          std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorCode::parse_error, path + ": no rows");
    Matrix M(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) M(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    return M;
}

inline Labels load_labels(const std::string& path) {
    const auto lines = detail::read_lines(path);
    Labels y(static_cast<Index>(lines.size()));
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const auto t = detail::trim(lines[ln]);
        if (t == "1" || t == "+1") y[static_cast<Index>(ln)] = 1;
        else if (t == "-1") y[static_cast<Index>(ln)] = -1;
        else
            throw Error(ErrorCode::bad_label,
                        path + ":" + std::to_string(ln + 1) + ": label '" + std::string(t) + "' is not -1, +1 or 1");
    }
    return y;
}

inline std::vector<Domain> load_domains(const std::string& path) {
    const auto lines = detail::read_lines(path);
    std::vector<Domain> out;
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const auto t = detail::trim(lines[ln]);
        if (t == "source") out.push_back(Domain::source);
        else if (t == "target") out.push_back(Domain::target);
        else throw detail::parse_error(path, ln + 1, "domain '" + std::string(t) + "' is not source or target");
    }
    return out;
}

inline TripletDataset load_dataset(const std::string& primary_path, const std::optional<std::string>& privileged_path,
                                   const std::string& labels_path,
                                   const std::optional<std::string>& domain_path = std::nullopt) {
    TripletDataset d;
    d.X = load_csv_matrix(primary_path);
    if (privileged_path) d.Xstar = load_csv_matrix(*privileged_path);
    d.y = load_labels(labels_path);
    if (domain_path) d.domain = load_domains(*domain_path);
    d.validate();
    return d;
}

inline std::string csv_text(const Matrix& M) {
    std::string out;
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) {
            if (j) out += ',';
            out += format_double(M(i, j));
        }
        out += '\n';
    }
    return out;
}

/// Paths of the four files making up a dataset on disk.
struct DatasetPaths {
    std::string primary;
    std::optional<std::string> privileged;
    std::string labels;
    std::optional<std::string> domains;

    static DatasetPaths in_directory(const std::string& dir, const std::string& prefix = "") {
        const std::string base = dir.empty() ? prefix : dir + "/" + prefix;
        return {base + "features.csv", base + "privileged.csv", base + "labels.txt", base + "domains.txt"};
    }
};

/// Writes every field the dataset has; absent optional fields are not written.
inline void save_dataset(const TripletDataset& d, const DatasetPaths& paths) {
    detail::write_file(paths.primary, csv_text(d.X));
    if (d.Xstar && paths.privileged) detail::write_file(*paths.privileged, csv_text(*d.Xstar));
    std::string labels;
    for (Index i = 0; i < d.y.size(); ++i) labels += d.y[i] == 1 ? "+1\n" : "-1\n";
    detail::write_file(paths.labels, labels);
    if (d.domain && paths.domains) {
        std::string dom;
        for (Domain t : *d.domain) (dom += to_string(t)) += '\n';
        detail::write_file(*paths.domains, dom);
    }
}

// Model text format. Every record is one line of space-separated tokens:
//
//   lupi-margin-model v1
//   kind <svm|svm_plus|adaptive_svm|adaptive_svm_plus>
//   kernel <linear|rbf> [rbf_gamma]
//   C <value>
//   gamma_priv <value|none>
//   bias_mode <none|constrained>
//   bias <value>
//   support_vectors <count> <dim>
//   <coeff> <x_1> ... <x_dim>            (count lines)
//   correcting none | correcting <count> <dim>
//     kernel ... / bias <value> / <coeff> <x*_1> ... (count lines)
//   source none | source begin, a nested model without the header line, source end
//   end

namespace detail {

inline std::string kernel_record(const KernelSpec& k) {
    return k.kind == KernelKind::linear ? "kernel linear" : "kernel rbf " + format_double(k.rbf_gamma);
}

inline void write_rows(std::string& out, const Vector& coeff, const Matrix& rows) {
    for (Index i = 0; i < rows.rows(); ++i) {
        out += format_double(coeff[i]);
        for (Index j = 0; j < rows.cols(); ++j) (out += ' ') += format_double(rows(i, j));
        out += '\n';
    }
}

inline void write_model_body(std::string& out, const TrainedModel& m) {
    out += "kind " + to_string(m.kind) + '\n';
    out += kernel_record(m.kernel) + '\n';
    out += "C " + format_double(m.C) + '\n';
    out += "gamma_priv " + (m.gamma_priv ? format_double(*m.gamma_priv) : std::string("none")) + '\n';
    out += "bias_mode " + to_string(m.bias_mode) + '\n';
    out += "bias " + format_double(m.bias) + '\n';
    out += "support_vectors " + std::to_string(m.sv_coeff.size()) + ' ' + std::to_string(m.sv_X.cols()) + '\n';
    write_rows(out, m.sv_coeff, m.sv_X);
    if (m.correcting) {
        const auto& c = *m.correcting;
        out += "correcting " + std::to_string(c.coeff.size()) + ' ' + std::to_string(c.sv_Xstar.cols()) + '\n';
        out += kernel_record(c.kernel) + '\n';
        out += "bias " + format_double(c.bias) + '\n';
        write_rows(out, c.coeff, c.sv_Xstar);
    } else {
        out += "correcting none\n";
    }
    if (m.source) {
        out += "source begin\n";
        write_model_body(out, *m.source);
        out += "source end\n";
    } else {
        out += "source none\n";
    }
}

/// Line-oriented token reader with positions for diagnostics.
class ModelReader {
public:
    ModelReader(std::string where, std::vector<std::string> lines) : where_(std::move(where)), lines_(std::move(lines)) {}

    std::vector<std::string_view> next() {
        if (at_ >= lines_.size()) throw parse_error(where_, at_ + 1, "unexpected end of file");
        std::vector<std::string_view> tokens;
        std::string_view s = lines_[at_++];
        while (!s.empty()) {
            const std::size_t b = s.find_first_not_of(" \t\r");
            if (b == s.npos) break;
            s.remove_prefix(b);
            const std::size_t e = s.find_first_of(" \t\r");
            tokens.push_back(s.substr(0, e));
            if (e == s.npos) break;
            s.remove_prefix(e);
        }
        if (tokens.empty()) throw fail("empty line");
        return tokens;
    }

    std::vector<std::string_view> expect(std::string_view key, std::size_t n_values) {
        auto t = next();
        if (t[0] != key) throw fail("expected '" + std::string(key) + "', found '" + std::string(t[0]) + "'");
        if (t.size() != n_values + 1)
            throw fail("'" + std::string(key) + "' takes " + std::to_string(n_values) + " value(s)");
        return t;
    }

    double number(std::string_view token) const {
        const auto v = parse_double(token);
        if (!v) throw fail("'" + std::string(token) + "' is not a number");
        return *v;
    }

    Index count(std::string_view token) const {
        Index v = 0;
        const auto r = std::from_chars(token.data(), token.data() + token.size(), v);
        if (r.ec != std::errc() || r.ptr != token.data() + token.size() || v < 0)
            throw fail("'" + std::string(token) + "' is not a count");
        return v;
    }

    template <class F>
    auto guarded(F&& f) const -> decltype(f()) {
        try {
            return f();
        } catch (const Error& e) {
            if (e.code() == ErrorCode::parse_error) throw;
            throw fail(e.what());
        }
    }

    Error fail(const std::string& what) const { return parse_error(where_, at_, what); }
    bool done() const { return at_ >= lines_.size(); }
    std::size_t line() const { return at_; }

private:
    std::string where_;
    std::vector<std::string> lines_;
    std::size_t at_ = 0;
};

inline KernelSpec read_kernel(ModelReader& r) {
    auto t = r.next();
    if (t[0] != "kernel" || t.size() < 2) throw r.fail("expected a kernel record");
    const auto kind = r.guarded([&] { return kernel_kind_from_string(t[1]); });
    if (kind == KernelKind::linear) {
        if (t.size() != 2) throw r.fail("linear kernel takes no parameter");
        return KernelSpec::linear();
    }
    if (t.size() != 3) throw r.fail("rbf kernel takes one parameter");
    const double g = r.number(t[2]);
    return r.guarded([&] { return KernelSpec::rbf(g); });
}

inline void read_rows(ModelReader& r, Index n, Index d, Vector& coeff, Matrix& rows) {
    coeff.resize(n);
    rows.resize(n, d);
    for (Index i = 0; i < n; ++i) {
        auto t = r.next();
        if (static_cast<Index>(t.size()) != d + 1)
            throw r.fail("expected " + std::to_string(d + 1) + " values, found " + std::to_string(t.size()));
        coeff[i] = r.number(t[0]);
        for (Index j = 0; j < d; ++j) rows(i, j) = r.number(t[static_cast<std::size_t>(j + 1)]);
    }
}

inline TrainedModel read_model_body(ModelReader& r) {
    TrainedModel m;
    m.kind = r.guarded([&] { return model_kind_from_string(r.expect("kind", 1)[1]); });
    m.kernel = read_kernel(r);
    m.C = r.number(r.expect("C", 1)[1]);
    const auto g = r.expect("gamma_priv", 1)[1];
    if (g != "none") m.gamma_priv = r.number(g);
    m.bias_mode = r.guarded([&] { return bias_mode_from_string(r.expect("bias_mode", 1)[1]); });
    m.bias = r.number(r.expect("bias", 1)[1]);
    const auto sv = r.expect("support_vectors", 2);
    read_rows(r, r.count(sv[1]), r.count(sv[2]), m.sv_coeff, m.sv_X);
    auto c = r.next();
    if (c[0] != "correcting") throw r.fail("expected a correcting record");
    if (c.size() == 3) {
        CorrectingFunction cf;
        const Index n = r.count(c[1]), d = r.count(c[2]);
        cf.kernel = read_kernel(r);
        cf.bias = r.number(r.expect("bias", 1)[1]);
        read_rows(r, n, d, cf.coeff, cf.sv_Xstar);
        m.correcting = std::move(cf);
    } else if (c.size() != 2 || c[1] != "none") {
        throw r.fail("malformed correcting record");
    }
    const auto s = r.expect("source", 1);
    if (s[1] == "begin") {
        m.source = std::make_shared<const TrainedModel>(read_model_body(r));
        if (r.expect("source", 1)[1] != "end") throw r.fail("expected 'source end'");
    } else if (s[1] != "none") {
        throw r.fail("source must be 'begin' or 'none'");
    }
    if (is_adaptive(m.kind) && !m.source) throw r.fail("adaptive model without a source record");
    return m;
}

}  // namespace detail

inline std::string model_text(const TrainedModel& m) {
    std::string out = std::string(model_magic) + " v" + std::to_string(model_version) + '\n';
    detail::write_model_body(out, m);
    out += "end\n";
    return out;
}

inline TrainedModel parse_model(const std::string& text, const std::string& where = "<model>") {
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    detail::ModelReader r(where, std::move(lines));
    const auto head = r.next();
    if (head.size() != 2 || head[0] != model_magic || head[1].size() < 2 || head[1][0] != 'v')
        throw r.fail("not a model file (expected '" + std::string(model_magic) + " v" +
                     std::to_string(model_version) + "')");
    const Index version = r.count(head[1].substr(1));
    if (version != model_version)
        throw Error(ErrorCode::version_mismatch, where + ": model format v" + std::to_string(version) +
                                                     " is not supported (expected v" +
                                                     std::to_string(model_version) + ")");
    TrainedModel m = detail::read_model_body(r);
    r.expect("end", 0);
    return m;
}

inline void save_model(const TrainedModel& m, const std::string& path) { detail::write_file(path, model_text(m)); }

inline TrainedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str(), path);
}

namespace detail {

/// Splits `total` over strata proportionally to `sizes` (largest remainder, earlier strata win ties).
inline std::vector<Index> proportional_counts(const std::vector<Index>& sizes, Index total) {
    Index sum = 0;
    for (Index s : sizes) sum += s;
    std::vector<Index> out(sizes.size(), 0);
    if (sum == 0 || total == 0) return out;
    std::vector<std::pair<double, std::size_t>> rem;
    Index given = 0;
    for (std::size_t j = 0; j < sizes.size(); ++j) {
        const double exact = static_cast<double>(total) * static_cast<double>(sizes[j]) / static_cast<double>(sum);
        out[j] = std::min(sizes[j], static_cast<Index>(exact));
        given += out[j];
        rem.emplace_back(exact - static_cast<double>(out[j]), j);
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; given < total && k < rem.size() * 2; ++k) {
        const std::size_t j = rem[k % rem.size()].second;
        if (out[j] < sizes[j]) {
            ++out[j];
            ++given;
        }
    }
    return out;
}

}  // namespace detail

/**
 * Per-class sampling without replacement. Inside each class the draw is spread
 * over the domain strata in proportion to their sizes. n_test_per_class caps the
 * test side; by default every remaining row is used. Both parts come back in a
 * seeded random row order.
 */
inline std::pair<TripletDataset, TripletDataset> split_train_test(const TripletDataset& data, Index n_train_per_class,
                                                                  std::uint64_t seed,
                                                                  std::optional<Index> n_test_per_class = std::nullopt) {
    data.validate();
    if (n_train_per_class < 1) throw Error(ErrorCode::invalid_argument, "n_train_per_class must be positive");
    std::vector<Index> train, test;
    for (int label : {1, -1}) {
        std::vector<std::vector<Index>> strata(2);
        for (Index i : data.rows_with_label(label)) {
            const bool src = data.domain && (*data.domain)[static_cast<std::size_t>(i)] == Domain::source;
            strata[src ? 0 : 1].push_back(i);
        }
        const Index size = static_cast<Index>(strata[0].size() + strata[1].size());
        if (size < n_train_per_class + 1)
            throw Error(ErrorCode::too_few_samples, "class " + std::to_string(label) + " has " + std::to_string(size) +
                                                        " samples, need at least " +
                                                        std::to_string(n_train_per_class + 1));
        Rng rng(derive_seed(seed, label == 1 ? 0 : 1));
        for (auto& s : strata) rng.shuffle(s);
        const auto tr = detail::proportional_counts({static_cast<Index>(strata[0].size()),
                                                     static_cast<Index>(strata[1].size())},
                                                    n_train_per_class);
        const Index left = size - n_train_per_class;
        const Index n_test = n_test_per_class ? std::min(*n_test_per_class, left) : left;
        const auto te = detail::proportional_counts(
            {static_cast<Index>(strata[0].size()) - tr[0], static_cast<Index>(strata[1].size()) - tr[1]}, n_test);
        for (std::size_t s = 0; s < 2; ++s) {
            for (Index k = 0; k < tr[s]; ++k) train.push_back(strata[s][static_cast<std::size_t>(k)]);
            for (Index k = 0; k < te[s]; ++k) test.push_back(strata[s][static_cast<std::size_t>(tr[s] + k)]);
        }
    }
    // Row order is randomised so that tied scores carry no label information.
    Rng mix(derive_seed(seed, 2));
    mix.shuffle(train);
    mix.shuffle(test);
    return {data.subset(train), data.subset(test)};
}

}  // namespace lupi
