#pragma once

// Repeated k-fold cross-validation with an inner grid search over
// (lambda, min_samples_leaf). Folds are seeded and stratified by class for
// classification, so reports are byte-identical across runs with the same
// seed and all splitters see the same outer folds.

#include <cstdio>
#include <random>

#include "sim.hpp"
#include "tree.hpp"

namespace mucart {

struct CvSpec {
    std::size_t outer_folds = 5;
    std::size_t inner_folds = 3;
    std::size_t repeats = 5;
    std::vector<double> lambda_grid{0.01, 0.1, 1.0, 10.0};
    std::vector<std::size_t> min_leaf_grid{2, 5, 10};
    bool stratified = true;  // classification only
    std::uint64_t seed = 0;

    void validate() const {
        if (outer_folds < 2 || inner_folds < 2)
            throw std::invalid_argument("CvSpec: folds must be >= 2");
        if (lambda_grid.empty() || min_leaf_grid.empty())
            throw std::invalid_argument("CvSpec: hyperparameter grids must be non-empty");
        if (repeats < 1) throw std::invalid_argument("CvSpec: repeats must be >= 1");
    }
};

struct CvFoldResult {
    std::size_t repeat = 0;
    std::size_t fold = 0;
    double chosen_lambda = 0.0;
    std::size_t chosen_min_leaf = 0;
    double test_metric = 0.0;  // accuracy (classification) or mse (regression)
    std::size_t tree_height = 0;
    std::string error;  // non-empty when the fold failed
};

struct CvReport {
    std::vector<CvFoldResult> rows;
    // fold_assignments[r][i] = outer fold of sample i in repeat r
    std::vector<std::vector<int>> fold_assignments;
    Task task = Task::Classification;

    double mean_metric() const { return column_mean([](const CvFoldResult& r) { return r.test_metric; }); }
    double mean_height() const {
        return column_mean([](const CvFoldResult& r) { return static_cast<double>(r.tree_height); });
    }

    template <class F>
    double column_mean(F&& get) const {
        double s = 0.0;
        std::size_t n = 0;
        for (const auto& r : rows)
            if (r.error.empty()) {
                s += get(r);
                ++n;
            }
        return n ? s / static_cast<double>(n) : 0.0;
    }
    template <class F>
    double column_sd(F&& get) const {
        const double m = column_mean(get);
        double s = 0.0;
        std::size_t n = 0;
        for (const auto& r : rows)
            if (r.error.empty()) {
                const double d = get(r) - m;
                s += d * d;
                ++n;
            }
        return n > 1 ? std::sqrt(s / static_cast<double>(n - 1)) : 0.0;
    }

    std::string to_csv() const;
    std::string folds_to_csv() const;
};

namespace cv_detail {

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    return sim_detail::splitmix64(a ^ sim_detail::splitmix64(b + 0x51ed2701a4d1e8c5ULL));
}

// Fold id per sample. Stratified assignment shuffles within each class and
// deals round-robin, keeping per-class counts within 1 across folds.
inline std::vector<int> make_folds(std::size_t n, std::size_t k, std::uint64_t seed,
                                   const std::vector<int>* labels) {
    std::mt19937_64 rng(seed);
    std::vector<int> fold(n, 0);
    auto deal = [&](std::vector<std::size_t>& idx) {
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t i = 0; i < idx.size(); ++i) fold[idx[i]] = static_cast<int>(i % k);
    };
    if (labels) {
        int n_classes = 0;
        for (int y : *labels) n_classes = std::max(n_classes, y + 1);
        for (int c = 0; c < n_classes; ++c) {
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < n; ++i)
                if ((*labels)[i] == c) idx.push_back(i);
            deal(idx);
        }
    } else {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        deal(idx);
    }
    return fold;
}

inline double fit_and_score(const FunctionalDataset& train, const FunctionalDataset& test,
                            const TreeConfig& cfg, std::size_t* height_out = nullptr) {
    MuCartModel model = fit(train, cfg);
    if (height_out) *height_out = model.height;
    return cfg.task == Task::Classification ? evaluate_accuracy(model, test)
                                            : evaluate_mse(model, test);
}

}  // namespace cv_detail

inline CvReport run_cv(const FunctionalDataset& ds, const TreeConfig& base, const CvSpec& spec) {
    ds.validate();
    spec.validate();
    const std::size_t n = ds.n_samples();
    const bool classification = base.task == Task::Classification;
    const bool stratify = spec.stratified && classification;

    CvReport report;
    report.task = base.task;
    for (std::size_t r = 0; r < spec.repeats; ++r) {
        auto outer = cv_detail::make_folds(n, spec.outer_folds, cv_detail::mix(spec.seed, r),
                                           stratify ? &ds.response.labels : nullptr);
        report.fold_assignments.push_back(outer);
        for (std::size_t f = 0; f < spec.outer_folds; ++f) {
            CvFoldResult row;
            row.repeat = r;
            row.fold = f;
            try {
                std::vector<std::size_t> train_idx, test_idx;
                for (std::size_t i = 0; i < n; ++i)
                    (outer[i] == static_cast<int>(f) ? test_idx : train_idx).push_back(i);
                FunctionalDataset train = subset(ds, train_idx);
                FunctionalDataset test = subset(ds, test_idx);

                auto inner = cv_detail::make_folds(
                    train_idx.size(), spec.inner_folds,
                    cv_detail::mix(spec.seed, 1000003 * (r + 1) + f),
                    stratify ? &train.response.labels : nullptr);

                // Inner grid search: accuracy maximized / mse minimized; ties
                // prefer the smaller lambda, then the larger min_samples_leaf.
                double best_score = classification ? -1.0 : std::numeric_limits<double>::infinity();
                double best_lambda = spec.lambda_grid.front();
                std::size_t best_min_leaf = spec.min_leaf_grid.front();
                for (double lambda : spec.lambda_grid) {
                    std::vector<std::size_t> leaves(spec.min_leaf_grid);
                    std::sort(leaves.rbegin(), leaves.rend());
                    for (std::size_t min_leaf : leaves) {
                        TreeConfig cfg = base;
                        cfg.solver.lambda = lambda;
                        cfg.min_samples_leaf = min_leaf;
                        double score = 0.0;
                        std::size_t used = 0;
                        for (std::size_t g = 0; g < spec.inner_folds; ++g) {
                            std::vector<std::size_t> tr, va;
                            for (std::size_t i = 0; i < train_idx.size(); ++i)
                                (inner[i] == static_cast<int>(g) ? va : tr).push_back(i);
                            if (tr.size() < 2 || va.empty()) continue;
                            score += cv_detail::fit_and_score(subset(train, tr), subset(train, va),
                                                              cfg);
                            ++used;
                        }
                        if (!used) continue;
                        score /= static_cast<double>(used);
                        const bool better =
                            classification ? score > best_score : score < best_score;
                        if (better) {
                            best_score = score;
                            best_lambda = lambda;
                            best_min_leaf = min_leaf;
                        }
                    }
                }

                TreeConfig cfg = base;
                cfg.solver.lambda = best_lambda;
                cfg.min_samples_leaf = best_min_leaf;
                row.chosen_lambda = best_lambda;
                row.chosen_min_leaf = best_min_leaf;
                row.test_metric = cv_detail::fit_and_score(train, test, cfg, &row.tree_height);
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

inline std::string CvReport::to_csv() const {
    auto fmt = [](double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    std::string out = "repeat,fold,chosen_lambda,chosen_min_leaf,test_metric,tree_height\n";
    for (const auto& r : rows) {
        out += std::to_string(r.repeat) + "," + std::to_string(r.fold) + ",";
        if (r.error.empty()) {
            out += fmt(r.chosen_lambda) + "," + std::to_string(r.chosen_min_leaf) + "," +
                   fmt(r.test_metric) + "," + std::to_string(r.tree_height);
        } else {
            out += ",,error," + r.error;
        }
        out += "\n";
    }
    auto lam = [](const CvFoldResult& r) { return r.chosen_lambda; };
    auto ml = [](const CvFoldResult& r) { return static_cast<double>(r.chosen_min_leaf); };
    auto met = [](const CvFoldResult& r) { return r.test_metric; };
    auto hgt = [](const CvFoldResult& r) { return static_cast<double>(r.tree_height); };
    out += "mean,," + fmt(column_mean(lam)) + "," + fmt(column_mean(ml)) + "," +
           fmt(column_mean(met)) + "," + fmt(column_mean(hgt)) + "\n";
    out += "sd,," + fmt(column_sd(lam)) + "," + fmt(column_sd(ml)) + "," + fmt(column_sd(met)) +
           "," + fmt(column_sd(hgt)) + "\n";
    return out;
}

inline std::string CvReport::folds_to_csv() const {
    std::string out = "repeat,sample_index,fold\n";
    for (std::size_t r = 0; r < fold_assignments.size(); ++r)
        for (std::size_t i = 0; i < fold_assignments[r].size(); ++i)
            out += std::to_string(r) + "," + std::to_string(i) + "," +
                   std::to_string(fold_assignments[r][i]) + "\n";
    return out;
}

}  // namespace mucart
