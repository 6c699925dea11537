#pragma once

// Gridded functional datasets: evaluation grids, discretized integration,
// standardization and CSV ingestion.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mucart {

enum class Task { Classification, Regression };

struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IngestionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Evaluation grid over a closed interval [domain_start, domain_end],
// discretized into p cells of width h. The j-th curve value is treated as
// the value of the function on the j-th cell (rectangle rule), matching the
// piecewise-constant weight basis used by the solvers.
struct Grid {
    double domain_start = 0.0;
    double domain_end = 1.0;
    std::size_t p = 2;

    double length() const { return domain_end - domain_start; }
    double h() const { return length() / static_cast<double>(p); }

    void validate() const {
        if (!(domain_end > domain_start))
            throw std::invalid_argument("Grid: domain_end must exceed domain_start");
        if (p < 2)
            throw std::invalid_argument("Grid: p must be >= 2");
    }

    // Evaluation point of cell j, as written in CSV headers: p equispaced
    // points from domain_start to domain_end inclusive.
    double point(std::size_t j) const {
        return domain_start + length() * static_cast<double>(j) / static_cast<double>(p - 1);
    }

    bool operator==(const Grid&) const = default;
};

// N x p row-major matrix of curve evaluations for one covariate.
struct FunctionalCovariate {
    std::string name;
    Grid grid;
    std::size_t n_samples = 0;
    std::vector<double> values;  // n_samples * grid.p, row-major

    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * grid.p, grid.p};
    }
    std::span<double> row(std::size_t i) {
        return {values.data() + i * grid.p, grid.p};
    }

    void validate() const {
        grid.validate();
        if (values.size() != n_samples * grid.p)
            throw DimensionError("FunctionalCovariate: values size mismatch");
        for (double v : values)
            if (!std::isfinite(v))
                throw std::invalid_argument("FunctionalCovariate: non-finite value");
    }
};

struct Response {
    enum class Kind { Categorical, Numeric };
    Kind kind = Kind::Numeric;
    int n_classes = 0;                // valid for Categorical
    std::vector<int> labels;          // Categorical: values in [0, n_classes)
    std::vector<double> targets;      // Numeric

    std::size_t size() const {
        return kind == Kind::Categorical ? labels.size() : targets.size();
    }

    void validate() const {
        if (kind == Kind::Categorical) {
            if (n_classes < 2)
                throw std::invalid_argument("Response: need K >= 2 classes");
            for (int y : labels)
                if (y < 0 || y >= n_classes)
                    throw std::invalid_argument("Response: label out of range");
        } else {
            for (double y : targets)
                if (!std::isfinite(y))
                    throw std::invalid_argument("Response: non-finite target");
        }
    }
};

struct FunctionalDataset {
    std::vector<FunctionalCovariate> covariates;
    Response response;

    std::size_t n_samples() const {
        return covariates.empty() ? 0 : covariates.front().n_samples;
    }
    std::size_t n_covariates() const { return covariates.size(); }

    void validate() const {
        if (covariates.empty())
            throw std::invalid_argument("FunctionalDataset: need at least one covariate");
        const std::size_t n = covariates.front().n_samples;
        for (const auto& c : covariates) {
            c.validate();
            if (c.n_samples != n)
                throw DimensionError("FunctionalDataset: covariate sample counts differ");
        }
        response.validate();
        if (response.size() != n)
            throw DimensionError("FunctionalDataset: response length mismatch");
    }
};

// Per-covariate pointwise mean and population standard deviation.
// Grid points with zero variance are flagged and use std = 1 on application.
struct StandardizationStats {
    struct PerCovariate {
        std::vector<double> mean;
        std::vector<double> std;        // 1.0 where flagged
        std::vector<bool> zero_variance;
    };
    std::vector<PerCovariate> per_covariate;
};

// Rectangle-rule integral h * sum(values), exact for the indicator basis.
inline double integrate(std::span<const double> values, const Grid& grid) {
    if (values.size() != grid.p)
        throw DimensionError("integrate: length mismatch");
    double s = 0.0;
    for (double v : values) s += v;
    return grid.h() * s;
}

inline StandardizationStats standardize_fit(const FunctionalDataset& ds) {
    const std::size_t n = ds.n_samples();
    if (n < 2)
        throw std::invalid_argument("standardize_fit: need at least 2 samples");
    StandardizationStats stats;
    stats.per_covariate.reserve(ds.n_covariates());
    for (const auto& cov : ds.covariates) {
        const std::size_t p = cov.grid.p;
        StandardizationStats::PerCovariate sc;
        sc.mean.assign(p, 0.0);
        sc.std.assign(p, 0.0);
        sc.zero_variance.assign(p, false);
        for (std::size_t i = 0; i < n; ++i) {
            auto r = cov.row(i);
            for (std::size_t j = 0; j < p; ++j) sc.mean[j] += r[j];
        }
        for (std::size_t j = 0; j < p; ++j) sc.mean[j] /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto r = cov.row(i);
            for (std::size_t j = 0; j < p; ++j) {
                const double d = r[j] - sc.mean[j];
                sc.std[j] += d * d;
            }
        }
        for (std::size_t j = 0; j < p; ++j) {
            sc.std[j] = std::sqrt(sc.std[j] / static_cast<double>(n));
            if (sc.std[j] == 0.0) {
                sc.zero_variance[j] = true;
                sc.std[j] = 1.0;
            }
        }
        stats.per_covariate.push_back(std::move(sc));
    }
    return stats;
}

// In-place (x - mean) / std on one curve of covariate `cov_index`.
inline void standardize_apply(std::span<double> curve, const StandardizationStats& stats,
                              std::size_t cov_index) {
    const auto& sc = stats.per_covariate.at(cov_index);
    if (curve.size() != sc.mean.size())
        throw DimensionError("standardize_apply: shape mismatch");
    for (std::size_t j = 0; j < curve.size(); ++j)
        curve[j] = (curve[j] - sc.mean[j]) / sc.std[j];
}

// Standardizes an M x p row-major matrix of curves, returning a copy.
inline std::vector<double> standardize_apply(std::span<const double> curves, std::size_t p,
                                             const StandardizationStats& stats,
                                             std::size_t cov_index) {
    if (p == 0 || curves.size() % p != 0)
        throw DimensionError("standardize_apply: shape mismatch");
    std::vector<double> out(curves.begin(), curves.end());
    const std::size_t m = curves.size() / p;
    for (std::size_t i = 0; i < m; ++i)
        standardize_apply(std::span<double>{out.data() + i * p, p}, stats, cov_index);
    return out;
}

// Row subset of a dataset (copying), preserving covariate order and grids.
inline FunctionalDataset subset(const FunctionalDataset& ds, std::span<const std::size_t> indices) {
    FunctionalDataset out;
    out.covariates.reserve(ds.n_covariates());
    for (const auto& cov : ds.covariates) {
        FunctionalCovariate c;
        c.name = cov.name;
        c.grid = cov.grid;
        c.n_samples = indices.size();
        c.values.reserve(indices.size() * cov.grid.p);
        for (std::size_t i : indices) {
            auto r = cov.row(i);
            c.values.insert(c.values.end(), r.begin(), r.end());
        }
        out.covariates.push_back(std::move(c));
    }
    out.response.kind = ds.response.kind;
    out.response.n_classes = ds.response.n_classes;
    if (ds.response.kind == Response::Kind::Categorical) {
        out.response.labels.reserve(indices.size());
        for (std::size_t i : indices) out.response.labels.push_back(ds.response.labels[i]);
    } else {
        out.response.targets.reserve(indices.size());
        for (std::size_t i : indices) out.response.targets.push_back(ds.response.targets[i]);
    }
    return out;
}

}  // namespace mucart
