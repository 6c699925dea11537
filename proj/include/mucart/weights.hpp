#pragma once

// Per-node weight learning: OvR relabeling of the modal class, one solve
// per constraint set per covariate, the |w_neg| convention, and the always
// available uniform weight.

#include "fdata.hpp"
#include "optim.hpp"

namespace mucart {

enum class WeightKind { Pos, NegAbs, Sgn, Uniform };

inline const char* weight_kind_name(WeightKind k) {
    switch (k) {
        case WeightKind::Pos: return "w_pos";
        case WeightKind::NegAbs: return "w_neg";
        case WeightKind::Sgn: return "w_sgn";
        default: return "w_uni";
    }
}

struct NodeWeights {
    struct Entry {
        WeightKind kind;
        std::vector<double> w;
    };
    // Entries per covariate, in canonical order Pos, NegAbs, Sgn, Uniform
    // (failed solves dropped, Uniform always present).
    std::vector<std::vector<Entry>> per_covariate;
};

namespace weights_detail {

// Modal class of the node, ties broken by the smaller label.
inline int modal_class(std::span<const int> labels) {
    std::vector<std::size_t> counts;
    for (int y : labels) {
        if (static_cast<std::size_t>(y) >= counts.size()) counts.resize(y + 1, 0);
        ++counts[y];
    }
    int best = 0;
    for (int k = 1; k < static_cast<int>(counts.size()); ++k)
        if (counts[k] > counts[best]) best = k;
    return best;
}

constexpr double kAcceptableViolation = 1e-6;

}  // namespace weights_detail

// Learns the three constrained weights per covariate on the node's samples
// (standardized with the global training stats) and appends the uniform
// weight. Degenerate nodes (single class, constant target) or failed solves
// simply lose the learned candidates.
inline NodeWeights learn_node_weights(std::span<const std::size_t> node_indices,
                                      const FunctionalDataset& ds,
                                      const StandardizationStats& stats, Task task,
                                      const SolverConfig& config) {
    const std::size_t m = node_indices.size();
    if (m < 2) throw std::invalid_argument("learn_node_weights: need at least 2 samples");

    // Response for the solver: OvR binary labels or raw targets.
    std::vector<double> y(m);
    bool degenerate = false;
    if (task == Task::Classification) {
        std::vector<int> labels(m);
        for (std::size_t i = 0; i < m; ++i) labels[i] = ds.response.labels[node_indices[i]];
        const int modal = weights_detail::modal_class(labels);
        bool has_rest = false;
        for (std::size_t i = 0; i < m; ++i) {
            y[i] = labels[i] == modal ? 1.0 : 0.0;
            if (y[i] == 0.0) has_rest = true;
        }
        degenerate = !has_rest;
    } else {
        for (std::size_t i = 0; i < m; ++i) y[i] = ds.response.targets[node_indices[i]];
        degenerate = true;
        for (double v : y)
            if (v != y[0]) degenerate = false;
    }

    NodeWeights out;
    out.per_covariate.resize(ds.n_covariates());
    for (std::size_t q = 0; q < ds.n_covariates(); ++q) {
        const auto& cov = ds.covariates[q];
        const std::size_t p = cov.grid.p;
        auto& entries = out.per_covariate[q];

        if (!degenerate) {
            std::vector<double> curves(m * p);
            for (std::size_t i = 0; i < m; ++i) {
                auto r = cov.row(node_indices[i]);
                std::copy(r.begin(), r.end(), curves.begin() + i * p);
                standardize_apply(std::span<double>{curves.data() + i * p, p}, stats, q);
            }

            auto attempt = [&](ConstraintKind ck, WeightKind wk) {
                SolverResult res =
                    task == Task::Classification
                        ? solve_logistic_weights(curves, y, cov.grid, ck, config)
                        : solve_ls_weights(curves, y, cov.grid, ck, config);
                if (res.status != SolverStatus::Converged &&
                    constraint_violation(res.w, ck) > weights_detail::kAcceptableViolation)
                    return;  // drop the candidate, uniform remains
                if (wk == WeightKind::NegAbs)
                    for (double& v : res.w) v = std::abs(v);
                entries.push_back({wk, std::move(res.w)});
            };
            attempt(ConstraintKind::NonNegative, WeightKind::Pos);
            attempt(ConstraintKind::NonPositive, WeightKind::NegAbs);
            attempt(ConstraintKind::SignFree, WeightKind::Sgn);
        }
        entries.push_back({WeightKind::Uniform, std::vector<double>(p, 1.0)});
    }
    return out;
}

}  // namespace mucart
