#pragma once

#include "lupi/core.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lupi {

enum class Domain : unsigned char { source, target };

inline std::string_view to_string(Domain d) { return d == Domain::source ? "source" : "target"; }

/// Primary features, optional privileged features, labels, optional domain tags and ids.
struct TripletDataset {
    Matrix X;
    std::optional<Matrix> Xstar;
    Labels y;
    std::optional<std::vector<Domain>> domain;
    std::optional<std::vector<std::string>> ids;

    Index size() const { return y.size(); }
    bool has_privileged() const { return Xstar.has_value(); }

    /// Throws unless every per-sample field has the same length and labels are +-1.
    void validate() const {
        const Index n = y.size();
        if (n < 1) throw Error(ErrorCode::empty, "dataset has no samples");
        if (X.rows() != n)
            throw Error(ErrorCode::row_count_mismatch,
                        std::to_string(X.rows()) + " feature rows but " + std::to_string(n) + " labels");
        if (X.cols() < 1) throw Error(ErrorCode::dimension_mismatch, "feature matrix has no columns");
        if (Xstar && Xstar->rows() != n)
            throw Error(ErrorCode::row_count_mismatch,
                        std::to_string(Xstar->rows()) + " privileged rows but " + std::to_string(n) + " labels");
        if (Xstar && Xstar->cols() < 1) throw Error(ErrorCode::dimension_mismatch, "privileged matrix has no columns");
        if (domain && static_cast<Index>(domain->size()) != n)
            throw Error(ErrorCode::row_count_mismatch,
                        std::to_string(domain->size()) + " domain tags but " + std::to_string(n) + " labels");
        if (ids && static_cast<Index>(ids->size()) != n)
            throw Error(ErrorCode::row_count_mismatch,
                        std::to_string(ids->size()) + " ids but " + std::to_string(n) + " labels");
        for (Index i = 0; i < n; ++i)
            if (y[i] != 1 && y[i] != -1)
                throw Error(ErrorCode::bad_label, "label at index " + std::to_string(i) + " is not -1 or +1");
    }

    const Matrix& privileged() const {
        if (!Xstar) throw Error(ErrorCode::config_mismatch, "dataset has no privileged features");
        return *Xstar;
    }

    TripletDataset subset(const std::vector<Index>& rows) const {
        TripletDataset out;
        out.X = select_rows(X, rows);
        if (Xstar) out.Xstar = select_rows(*Xstar, rows);
        out.y = select_entries(y, rows);
        if (domain) {
            std::vector<Domain> d;
            d.reserve(rows.size());
            for (Index r : rows) d.push_back((*domain)[static_cast<std::size_t>(r)]);
            out.domain = std::move(d);
        }
        if (ids) {
            std::vector<std::string> s;
            s.reserve(rows.size());
            for (Index r : rows) s.push_back((*ids)[static_cast<std::size_t>(r)]);
            out.ids = std::move(s);
        }
        return out;
    }

    /// Row indices carrying the given domain tag; untagged data counts as target.
    std::vector<Index> rows_in(Domain d) const {
        std::vector<Index> out;
        for (Index i = 0; i < size(); ++i) {
            const Domain tag = domain ? (*domain)[static_cast<std::size_t>(i)] : Domain::target;
            if (tag == d) out.push_back(i);
        }
        return out;
    }

    std::vector<Index> rows_with_label(int label) const {
        std::vector<Index> out;
        for (Index i = 0; i < size(); ++i)
            if (y[i] == label) out.push_back(i);
        return out;
    }
};

/// Stacks datasets row-wise. Optional fields survive only when every part has them.
inline TripletDataset concatenate(const std::vector<const TripletDataset*>& parts) {
    TripletDataset out;
    if (parts.empty()) return out;
    Index n = 0;
    bool priv = true, dom = true, ids = true;
    for (const auto* p : parts) {
        n += p->size();
        priv = priv && p->Xstar.has_value();
        dom = dom && p->domain.has_value();
        ids = ids && p->ids.has_value();
        if (p->X.cols() != parts.front()->X.cols() ||
            (priv && p->Xstar->cols() != parts.front()->Xstar->cols()))
            throw Error(ErrorCode::dimension_mismatch, "datasets have different feature dimensions");
    }
    out.X.resize(n, parts.front()->X.cols());
    out.y.resize(n);
    if (priv) out.Xstar = Matrix(n, parts.front()->Xstar->cols());
    if (dom) out.domain.emplace();
    if (ids) out.ids.emplace();
    Index at = 0;
    for (const auto* p : parts) {
        out.X.middleRows(at, p->size()) = p->X;
        out.y.segment(at, p->size()) = p->y;
        if (priv) out.Xstar->middleRows(at, p->size()) = *p->Xstar;
        if (dom) out.domain->insert(out.domain->end(), p->domain->begin(), p->domain->end());
        if (ids) out.ids->insert(out.ids->end(), p->ids->begin(), p->ids->end());
        at += p->size();
    }
    return out;
}

}  // namespace lupi
