#pragma once

// Weighted integral feature extractors used by the splitting rules:
// weighted mean f_mu, weighted variance f_var and weighted cosine
// similarity rho_w against a template curve (node mean or class mean).
// Also builds the whole-domain FE baseline feature matrix.

#include <optional>

#include "fdata.hpp"
#include "weights.hpp"

namespace mucart {

struct FeatureKind {
    enum class Type { Mu, Var, CosNode, CosClass };
    Type type = Type::Mu;
    int class_label = -1;  // only for CosClass

    bool operator==(const FeatureKind&) const = default;
};

struct TemplateCurve {
    enum class Origin { NodeMean, ClassMean };
    Origin origin = Origin::NodeMean;
    int class_label = -1;
    std::vector<double> values;
};

// (1/|I|) h sum_j x_j w_j
inline double f_mu(std::span<const double> x, std::span<const double> w, const Grid& grid) {
    if (x.size() != grid.p || w.size() != grid.p) throw DimensionError("f_mu: length mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < grid.p; ++j) s += x[j] * w[j];
    return grid.h() * s / grid.length();
}

// h sum_j (x_j - xbar)^2 w_j with xbar the w-weighted mean of x.
inline double f_var(std::span<const double> x, std::span<const double> w, const Grid& grid) {
    if (x.size() != grid.p || w.size() != grid.p) throw DimensionError("f_var: length mismatch");
    const double xbar = f_mu(x, w, grid);
    double s = 0.0;
    for (std::size_t j = 0; j < grid.p; ++j) {
        const double d = x[j] - xbar;
        s += d * d * w[j];
    }
    return grid.h() * s;
}

// Weighted cosine similarity; requires w >= 0 elementwise. Returns nullopt
// when either weighted norm vanishes (DegenerateNorm).
inline std::optional<double> rho_w(std::span<const double> x, std::span<const double> z,
                                   std::span<const double> w, const Grid& grid) {
    if (x.size() != grid.p || z.size() != grid.p || w.size() != grid.p)
        throw DimensionError("rho_w: length mismatch");
    for (double v : w)
        if (v < -1e-9) throw std::invalid_argument("rho_w: weights must be nonnegative");
    double xz = 0.0, xx = 0.0, zz = 0.0;
    for (std::size_t j = 0; j < grid.p; ++j) {
        xz += x[j] * z[j] * w[j];
        xx += x[j] * x[j] * w[j];
        zz += z[j] * z[j] * w[j];
    }
    if (xx <= 0.0 || zz <= 0.0) return std::nullopt;
    const double h = grid.h();
    return (h * xz) / (std::sqrt(h * xx) * std::sqrt(h * zz));
}

struct FeatureColumn {
    FeatureKind kind;
    std::optional<TemplateCurve> tmpl;  // for CosNode / CosClass
    std::vector<double> values;         // one entry per node sample
};

struct FeatureBlock {
    std::vector<FeatureColumn> columns;
    std::vector<std::string> notes;  // omitted degenerate columns
};

namespace features_detail {

inline std::vector<double> mean_curve(std::span<const double> curves, std::size_t p,
                                      std::span<const std::size_t> rows) {
    std::vector<double> m(p, 0.0);
    for (std::size_t i : rows)
        for (std::size_t j = 0; j < p; ++j) m[j] += curves[i * p + j];
    for (double& v : m) v /= static_cast<double>(rows.size());
    return m;
}

inline std::span<const double> crow(std::span<const double> curves, std::size_t p, std::size_t i) {
    return curves.subspan(i * p, p);
}

}  // namespace features_detail

// Feature columns for one (covariate, weight) pair at a node. Curves are
// the node's unstandardized M x p rows. For Pos/NegAbs/Uniform: Mu, Var,
// CosNode and (classification) CosClass(k) per class present; for Sgn only
// Mu and Var. Degenerate cosine columns are omitted with a note.
inline FeatureBlock extract_features(std::span<const double> curves, const Grid& grid,
                                     const NodeWeights::Entry& entry, Task task,
                                     std::span<const int> node_labels = {}) {
    const std::size_t p = grid.p;
    if (p == 0 || curves.size() % p != 0) throw DimensionError("extract_features: shape mismatch");
    const std::size_t m = curves.size() / p;
    if (task == Task::Classification && node_labels.size() != m)
        throw DimensionError("extract_features: label count mismatch");
    std::span<const double> w(entry.w);

    FeatureBlock block;
    auto add_scalar = [&](FeatureKind::Type type, auto&& fn) {
        FeatureColumn col;
        col.kind.type = type;
        col.values.reserve(m);
        for (std::size_t i = 0; i < m; ++i)
            col.values.push_back(fn(features_detail::crow(curves, p, i)));
        block.columns.push_back(std::move(col));
    };
    add_scalar(FeatureKind::Type::Mu, [&](auto x) { return f_mu(x, w, grid); });
    add_scalar(FeatureKind::Type::Var, [&](auto x) { return f_var(x, w, grid); });

    if (entry.kind == WeightKind::Sgn) return block;  // cosine undefined for signed weights

    auto add_cosine = [&](const TemplateCurve& tmpl, FeatureKind kind, const std::string& desc) {
        FeatureColumn col;
        col.kind = kind;
        col.tmpl = tmpl;
        col.values.reserve(m);
        for (std::size_t i = 0; i < m; ++i) {
            auto v = rho_w(features_detail::crow(curves, p, i), tmpl.values, w, grid);
            if (!v) {
                block.notes.push_back(desc + ": degenerate weighted norm, column omitted");
                return;
            }
            col.values.push_back(*v);
        }
        block.columns.push_back(std::move(col));
    };

    std::vector<std::size_t> all(m);
    for (std::size_t i = 0; i < m; ++i) all[i] = i;
    TemplateCurve node_tmpl{TemplateCurve::Origin::NodeMean, -1,
                            features_detail::mean_curve(curves, p, all)};
    add_cosine(node_tmpl, {FeatureKind::Type::CosNode, -1}, "cos_node");

    if (task == Task::Classification) {
        int max_label = 0;
        for (int y : node_labels) max_label = std::max(max_label, y);
        for (int k = 0; k <= max_label; ++k) {
            std::vector<std::size_t> rows;
            for (std::size_t i = 0; i < m; ++i)
                if (node_labels[i] == k) rows.push_back(i);
            if (rows.empty()) continue;  // class absent from the node
            TemplateCurve tmpl{TemplateCurve::Origin::ClassMean, k,
                               features_detail::mean_curve(curves, p, rows)};
            add_cosine(tmpl, {FeatureKind::Type::CosClass, k},
                       "cos_class(" + std::to_string(k) + ")");
        }
    }
    return block;
}

// FE baseline: uniform-weight features over the whole domain, per covariate,
// with templates taken from the full dataset. Columns are concatenated
// across covariates in covariate order.
struct FeBaseline {
    struct Column {
        std::size_t covariate;
        FeatureKind kind;
        std::optional<TemplateCurve> tmpl;
        std::vector<double> values;  // length N
    };
    std::vector<Column> columns;
    std::vector<std::string> notes;
};

inline FeBaseline fe_baseline_features(const FunctionalDataset& ds) {
    ds.validate();
    const Task task =
        ds.response.kind == Response::Kind::Categorical ? Task::Classification : Task::Regression;
    FeBaseline out;
    for (std::size_t q = 0; q < ds.n_covariates(); ++q) {
        const auto& cov = ds.covariates[q];
        NodeWeights::Entry uniform{WeightKind::Uniform, std::vector<double>(cov.grid.p, 1.0)};
        auto block = extract_features(cov.values, cov.grid, uniform, task,
                                      task == Task::Classification
                                          ? std::span<const int>(ds.response.labels)
                                          : std::span<const int>{});
        for (auto& col : block.columns)
            out.columns.push_back({q, col.kind, std::move(col.tmpl), std::move(col.values)});
        for (auto& n : block.notes) out.notes.push_back(cov.name + " " + n);
    }
    return out;
}

}  // namespace mucart
