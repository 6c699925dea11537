#pragma once

// Node losses, optimal-threshold scanning and best-split selection over all
// (covariate, weight, feature) candidates, plus the axis-parallel baseline.
// Children losses are count-weighted sums, so L(left)+L(right) compares
// directly against the parent loss.

#include <algorithm>
#include <numeric>

#include "features.hpp"
#include "weights.hpp"

namespace mucart {

enum class LossKind { Gini, MSE };

// Gini: n * (1 - sum_k q_k^2) = n - sum_k c_k^2 / n.
inline double node_loss(std::span<const int> labels) {
    if (labels.empty()) throw std::invalid_argument("node_loss: empty node");
    std::vector<std::size_t> counts;
    for (int y : labels) {
        if (static_cast<std::size_t>(y) >= counts.size()) counts.resize(y + 1, 0);
        ++counts[y];
    }
    double sq = 0.0;
    for (std::size_t c : counts) sq += static_cast<double>(c) * static_cast<double>(c);
    const double n = static_cast<double>(labels.size());
    return n - sq / n;
}

// MSE: sum_i (y_i - ybar)^2.
inline double node_loss(std::span<const double> targets) {
    if (targets.empty()) throw std::invalid_argument("node_loss: empty node");
    double mean = 0.0;
    for (double y : targets) mean += y;
    mean /= static_cast<double>(targets.size());
    double s = 0.0;
    for (double y : targets) {
        const double d = y - mean;
        s += d * d;
    }
    return s;
}

struct ThresholdResult {
    double threshold;
    double impurity;  // L(left) + L(right)
    std::size_t left_count;
};

namespace split_detail {

inline std::vector<std::size_t> sorted_order(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    return order;
}

}  // namespace split_detail

// Gini threshold scan: single incremental sweep over the sorted values.
// Boundaries keeping fewer than min_count samples on either side are
// skipped; ties on impurity keep the smallest threshold.
inline std::optional<ThresholdResult> best_threshold(std::span<const double> values,
                                                     std::span<const int> labels,
                                                     std::size_t min_count = 1) {
    const std::size_t m = values.size();
    if (m != labels.size()) throw DimensionError("best_threshold: length mismatch");
    if (m < 2) throw std::invalid_argument("best_threshold: need M >= 2");
    auto order = split_detail::sorted_order(values);

    int max_label = 0;
    for (int y : labels) max_label = std::max(max_label, y);
    std::vector<std::size_t> total(max_label + 1, 0), left(max_label + 1, 0);
    for (int y : labels) ++total[y];
    // Maintain sum of squared counts exactly in integers.
    unsigned long long left_sq = 0, right_sq = 0;
    for (std::size_t c : total) right_sq += 1ULL * c * c;

    std::optional<ThresholdResult> best;
    for (std::size_t i = 1; i < m; ++i) {
        const int y = labels[order[i - 1]];
        left_sq += 2ULL * left[y] + 1;
        right_sq -= 2ULL * total[y] - 2ULL * left[y] - 1;
        ++left[y];
        const double lo = values[order[i - 1]], hi = values[order[i]];
        if (lo == hi) continue;
        if (i < min_count || m - i < min_count) continue;
        const double nl = static_cast<double>(i), nr = static_cast<double>(m - i);
        const double imp = (nl - static_cast<double>(left_sq) / nl) +
                           (nr - static_cast<double>(right_sq) / nr);
        if (!best || imp < best->impurity) best = {(lo + hi) / 2.0, imp, i};
    }
    return best;
}

// MSE threshold scan via running sums.
inline std::optional<ThresholdResult> best_threshold(std::span<const double> values,
                                                     std::span<const double> targets,
                                                     std::size_t min_count = 1) {
    const std::size_t m = values.size();
    if (m != targets.size()) throw DimensionError("best_threshold: length mismatch");
    if (m < 2) throw std::invalid_argument("best_threshold: need M >= 2");
    auto order = split_detail::sorted_order(values);

    double total_sum = 0.0, total_sq = 0.0;
    for (double y : targets) {
        total_sum += y;
        total_sq += y * y;
    }
    double left_sum = 0.0, left_sq = 0.0;
    std::optional<ThresholdResult> best;
    for (std::size_t i = 1; i < m; ++i) {
        const double y = targets[order[i - 1]];
        left_sum += y;
        left_sq += y * y;
        const double lo = values[order[i - 1]], hi = values[order[i]];
        if (lo == hi) continue;
        if (i < min_count || m - i < min_count) continue;
        const double nl = static_cast<double>(i), nr = static_cast<double>(m - i);
        const double ls = std::max(0.0, left_sq - left_sum * left_sum / nl);
        const double rs = std::max(0.0, (total_sq - left_sq) -
                                            (total_sum - left_sum) * (total_sum - left_sum) / nr);
        const double imp = ls + rs;
        if (!best || imp < best->impurity) best = {(lo + hi) / 2.0, imp, i};
    }
    return best;
}

struct SplitRule {
    std::size_t covariate = 0;
    WeightKind wkind = WeightKind::Uniform;
    std::vector<double> w;
    FeatureKind fkind;
    std::optional<TemplateCurve> tmpl;
    double threshold = 0.0;
};

struct SplitCandidate {
    SplitRule rule;
    double impurity = 0.0;
    std::size_t left_count = 0, right_count = 0;
};

struct AxisRule {
    std::size_t covariate = 0;
    std::size_t grid_index = 0;
    double threshold = 0.0;
};

struct AxisSplitCandidate {
    AxisRule rule;
    double impurity = 0.0;
    std::size_t left_count = 0, right_count = 0;
};

// Feature value of one sample curve under a stored rule. nullopt signals a
// degenerate cosine norm (routed left by convention).
inline std::optional<double> rule_feature(const SplitRule& rule, std::span<const double> curve,
                                          const Grid& grid) {
    switch (rule.fkind.type) {
        case FeatureKind::Type::Mu: return f_mu(curve, rule.w, grid);
        case FeatureKind::Type::Var: return f_var(curve, rule.w, grid);
        default: return rho_w(curve, rule.tmpl->values, rule.w, grid);
    }
}

inline bool route_left(const SplitRule& rule, std::span<const double> curve, const Grid& grid) {
    const auto v = rule_feature(rule, curve, grid);
    if (!v) return true;  // degenerate cosine norm
    return *v <= rule.threshold;
}

namespace split_detail {

inline std::optional<ThresholdResult> scan(std::span<const double> values,
                                           std::span<const int> labels,
                                           std::span<const double> targets, LossKind kind,
                                           std::size_t min_count) {
    return kind == LossKind::Gini ? best_threshold(values, labels, min_count)
                                  : best_threshold(values, targets, min_count);
}

}  // namespace split_detail

// Best split over every (covariate, weight kind, feature kind) candidate.
// Enumeration is in canonical order (covariate, then Pos < NegAbs < Sgn <
// Uniform, then Mu < Var < CosNode < CosClass(0) < ...), with strictly
// better impurity required to displace an earlier candidate.
inline std::optional<SplitCandidate> best_split(const FunctionalDataset& ds,
                                                std::span<const std::size_t> indices,
                                                const NodeWeights& weights, LossKind loss,
                                                std::size_t min_count = 1) {
    const std::size_t m = indices.size();
    if (m < 2) throw std::invalid_argument("best_split: need at least 2 samples");
    const Task task = loss == LossKind::Gini ? Task::Classification : Task::Regression;

    std::vector<int> labels;
    std::vector<double> targets;
    if (task == Task::Classification) {
        labels.reserve(m);
        for (std::size_t i : indices) labels.push_back(ds.response.labels[i]);
    } else {
        targets.reserve(m);
        for (std::size_t i : indices) targets.push_back(ds.response.targets[i]);
    }

    std::optional<SplitCandidate> best;
    for (std::size_t q = 0; q < ds.n_covariates(); ++q) {
        const auto& cov = ds.covariates[q];
        const std::size_t p = cov.grid.p;
        std::vector<double> curves(m * p);
        for (std::size_t i = 0; i < m; ++i) {
            auto r = cov.row(indices[i]);
            std::copy(r.begin(), r.end(), curves.begin() + i * p);
        }
        for (const auto& entry : weights.per_covariate[q]) {
            auto block = extract_features(curves, cov.grid, entry, task, labels);
            for (auto& col : block.columns) {
                auto tr = split_detail::scan(col.values, labels, targets, loss, min_count);
                if (!tr) continue;
                if (!best || tr->impurity < best->impurity) {
                    SplitCandidate cand;
                    cand.rule = {q, entry.kind, entry.w, col.kind, std::move(col.tmpl),
                                 tr->threshold};
                    cand.impurity = tr->impurity;
                    cand.left_count = tr->left_count;
                    cand.right_count = m - tr->left_count;
                    best = std::move(cand);
                }
            }
        }
    }
    return best;
}

// Axis-parallel CART baseline over the raw grid evaluations.
inline std::optional<AxisSplitCandidate> axis_best_split(const FunctionalDataset& ds,
                                                         std::span<const std::size_t> indices,
                                                         LossKind loss,
                                                         std::size_t min_count = 1) {
    const std::size_t m = indices.size();
    if (m < 2) throw std::invalid_argument("axis_best_split: need at least 2 samples");

    std::vector<int> labels;
    std::vector<double> targets;
    if (loss == LossKind::Gini)
        for (std::size_t i : indices) labels.push_back(ds.response.labels[i]);
    else
        for (std::size_t i : indices) targets.push_back(ds.response.targets[i]);

    std::optional<AxisSplitCandidate> best;
    std::vector<double> col(m);
    for (std::size_t q = 0; q < ds.n_covariates(); ++q) {
        const auto& cov = ds.covariates[q];
        for (std::size_t j = 0; j < cov.grid.p; ++j) {
            for (std::size_t i = 0; i < m; ++i) col[i] = cov.row(indices[i])[j];
            auto tr = split_detail::scan(col, labels, targets, loss, min_count);
            if (!tr) continue;
            if (!best || tr->impurity < best->impurity)
                best = {{q, j, tr->threshold}, tr->impurity, tr->left_count, m - tr->left_count};
        }
    }
    return best;
}

}  // namespace mucart
