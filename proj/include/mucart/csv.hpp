#pragma once

// CSV ingestion and writing for functional datasets.
//
// Covariate file: header row `t=<v1>,...,t=<vp>` listing the p equispaced
// evaluation points (domain endpoints included), then one row of p decimal
// values per sample. Response file: single column, header `label` for
// classification or `target` for regression.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "fdata.hpp"

namespace mucart {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& tok, std::size_t row, const std::string& path) {
    double v = 0.0;
    const char* b = tok.data();
    const char* e = tok.data() + tok.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || ptr != e)
        throw IngestionError(path + ": malformed number '" + tok + "' at row " + std::to_string(row));
    if (!std::isfinite(v))
        throw IngestionError(path + ": non-finite value at row " + std::to_string(row));
    return v;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// Reads one covariate file. If `expected` is given, the header points are
// validated against it (within 1e-9); otherwise the grid is inferred from
// the header, which must be equispaced.
inline FunctionalCovariate load_covariate_csv(const std::string& path, const std::string& name,
                                              std::optional<Grid> expected = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IngestionError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    auto header = detail::split_csv_line(line);
    std::vector<double> points;
    points.reserve(header.size());
    for (auto& tok : header) {
        if (tok.rfind("t=", 0) != 0)
            throw IngestionError(path + ": header entry '" + tok + "' must start with t=");
        points.push_back(detail::parse_double(tok.substr(2), 0, path));
    }
    const std::size_t p = points.size();
    if (p < 2) throw IngestionError(path + ": need at least 2 grid points");

    Grid grid;
    if (expected) {
        grid = *expected;
        grid.validate();
        if (grid.p != p)
            throw IngestionError(path + ": header has " + std::to_string(p) +
                                 " points, expected " + std::to_string(grid.p));
    } else {
        grid.domain_start = points.front();
        grid.domain_end = points.back();
        grid.p = p;
        grid.validate();
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(grid.length()));
    for (std::size_t j = 0; j < p; ++j)
        if (std::abs(points[j] - grid.point(j)) > tol)
            throw IngestionError(path + ": header point " + std::to_string(j + 1) +
                                 " is not equispaced on the declared grid");

    FunctionalCovariate cov;
    cov.name = name;
    cov.grid = grid;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        auto toks = detail::split_csv_line(line);
        if (toks.size() != p)
            throw IngestionError(path + ": row " + std::to_string(row) + " has " +
                                 std::to_string(toks.size()) + " values, expected " +
                                 std::to_string(p));
        for (auto& tok : toks) cov.values.push_back(detail::parse_double(tok, row, path));
    }
    cov.n_samples = row;
    cov.validate();
    return cov;
}

inline Response load_response_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IngestionError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    Response resp;
    if (line == "label") {
        resp.kind = Response::Kind::Categorical;
    } else if (line == "target") {
        resp.kind = Response::Kind::Numeric;
    } else {
        throw IngestionError(path + ": response header must be 'label' or 'target'");
    }
    std::size_t row = 0;
    int max_label = -1;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const double v = detail::parse_double(line, row, path);
        if (resp.kind == Response::Kind::Categorical) {
            const int y = static_cast<int>(v);
            if (static_cast<double>(y) != v || y < 0)
                throw IngestionError(path + ": row " + std::to_string(row) +
                                     " label must be a nonnegative integer");
            resp.labels.push_back(y);
            max_label = std::max(max_label, y);
        } else {
            resp.targets.push_back(v);
        }
    }
    if (resp.kind == Response::Kind::Categorical) resp.n_classes = max_label + 1;
    resp.validate();
    return resp;
}

inline FunctionalDataset load_csv(const std::vector<std::pair<std::string, std::string>>& covariate_paths,
                                  const std::string& response_path,
                                  const std::vector<Grid>& grid_specs = {}) {
    FunctionalDataset ds;
    for (std::size_t q = 0; q < covariate_paths.size(); ++q) {
        std::optional<Grid> expected;
        if (!grid_specs.empty()) expected = grid_specs.at(q);
        ds.covariates.push_back(
            load_covariate_csv(covariate_paths[q].second, covariate_paths[q].first, expected));
    }
    ds.response = load_response_csv(response_path);
    ds.validate();
    return ds;
}

inline void write_covariate_csv(const FunctionalCovariate& cov, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write " + path);
    for (std::size_t j = 0; j < cov.grid.p; ++j) {
        if (j) out << ',';
        out << "t=" << detail::format_double(cov.grid.point(j));
    }
    out << '\n';
    for (std::size_t i = 0; i < cov.n_samples; ++i) {
        auto r = cov.row(i);
        for (std::size_t j = 0; j < cov.grid.p; ++j) {
            if (j) out << ',';
            out << detail::format_double(r[j]);
        }
        out << '\n';
    }
}

inline void write_response_csv(const Response& resp, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write " + path);
    if (resp.kind == Response::Kind::Categorical) {
        out << "label\n";
        for (int y : resp.labels) out << y << '\n';
    } else {
        out << "target\n";
        for (double y : resp.targets) out << detail::format_double(y) << '\n';
    }
}

}  // namespace mucart
