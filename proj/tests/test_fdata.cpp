#include <doctest.h>

#include <filesystem>
#include <mucart/csv.hpp>
#include <mucart/fdata.hpp>
#include <random>

using namespace mucart;

TEST_CASE("integrate: rectangle rule") {
    Grid unit{0.0, 1.0, 10};
    std::vector<double> ones(10, 1.0);
    CHECK(integrate(ones, unit) == doctest::Approx(1.0).epsilon(1e-15));

    std::vector<double> zeros(7, 0.0);
    CHECK(integrate(zeros, Grid{-2.0, 5.0, 7}) == 0.0);

    std::vector<double> v{1.0, 3.0};
    CHECK(integrate(v, Grid{0.0, 1.0, 2}) == doctest::Approx(2.0).epsilon(1e-15));

    CHECK_THROWS_AS(integrate(v, unit), DimensionError);
}

TEST_CASE("integrate: linearity") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> nd;
    Grid g{0.0, 3.0, 17};
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> u(g.p), v(g.p), comb(g.p);
        const double a = nd(rng), b = nd(rng);
        for (std::size_t j = 0; j < g.p; ++j) {
            u[j] = nd(rng);
            v[j] = nd(rng);
            comb[j] = a * u[j] + b * v[j];
        }
        const double lhs = integrate(comb, g);
        const double rhs = a * integrate(u, g) + b * integrate(v, g);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
    }
}

namespace {

FunctionalDataset one_cov_dataset(std::vector<std::vector<double>> rows, Grid grid) {
    FunctionalDataset ds;
    FunctionalCovariate cov;
    cov.name = "x";
    cov.grid = grid;
    cov.n_samples = rows.size();
    for (auto& r : rows) cov.values.insert(cov.values.end(), r.begin(), r.end());
    ds.covariates.push_back(std::move(cov));
    ds.response.kind = Response::Kind::Numeric;
    ds.response.targets.assign(rows.size(), 0.0);
    return ds;
}

}  // namespace

TEST_CASE("standardize_fit: means and population sd") {
    auto ds = one_cov_dataset({{0.0, 0.0}, {2.0, 2.0}}, Grid{0.0, 1.0, 2});
    auto stats = standardize_fit(ds);
    CHECK(stats.per_covariate[0].mean == std::vector<double>{1.0, 1.0});
    CHECK(stats.per_covariate[0].std == std::vector<double>{1.0, 1.0});
    CHECK_FALSE(stats.per_covariate[0].zero_variance[0]);

    auto same = one_cov_dataset({{5.0, 5.0}, {5.0, 5.0}}, Grid{0.0, 1.0, 2});
    auto s2 = standardize_fit(same);
    CHECK(s2.per_covariate[0].zero_variance == std::vector<bool>{true, true});
    CHECK(s2.per_covariate[0].std == std::vector<double>{1.0, 1.0});

    auto three = one_cov_dataset({{0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}}, Grid{0.0, 1.0, 2});
    auto s3 = standardize_fit(three);
    CHECK(s3.per_covariate[0].mean[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s3.per_covariate[0].std[0] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));

    auto single = one_cov_dataset({{0.0, 0.0}}, Grid{0.0, 1.0, 2});
    CHECK_THROWS_AS(standardize_fit(single), std::invalid_argument);
}

TEST_CASE("standardize_apply") {
    StandardizationStats stats;
    stats.per_covariate.push_back({{1.0, 1.0}, {2.0, 2.0}, {false, false}});

    std::vector<double> curve{3.0, 3.0};
    standardize_apply(curve, stats, 0);
    CHECK(curve == std::vector<double>{1.0, 1.0});

    // curve equal to the mean maps to exactly zero
    std::vector<double> mean_curve{1.0, 1.0};
    standardize_apply(mean_curve, stats, 0);
    CHECK(mean_curve == std::vector<double>{0.0, 0.0});

    // flagged zero-variance column only shifts by the mean
    StandardizationStats flagged;
    flagged.per_covariate.push_back({{4.0, 0.0}, {1.0, 2.0}, {true, false}});
    std::vector<double> c2{5.0, 2.0};
    standardize_apply(c2, flagged, 0);
    CHECK(c2 == std::vector<double>{1.0, 1.0});

    std::vector<double> wrong{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(standardize_apply(wrong, stats, 0), DimensionError);
}

TEST_CASE("csv: write/load round trip is bit exact") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "mucart_fdata_test";
    fs::create_directories(dir);

    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    FunctionalCovariate cov;
    cov.name = "x";
    cov.grid = Grid{0.0, 2.0, 5};
    cov.n_samples = 4;
    for (std::size_t i = 0; i < 20; ++i) cov.values.push_back(nd(rng));

    Response resp;
    resp.kind = Response::Kind::Categorical;
    resp.n_classes = 2;
    resp.labels = {0, 1, 1, 0};

    const auto cov_path = (dir / "x.csv").string();
    const auto resp_path = (dir / "y.csv").string();
    write_covariate_csv(cov, cov_path);
    write_response_csv(resp, resp_path);

    auto ds = load_csv({{"x", cov_path}}, resp_path, {cov.grid});
    CHECK(ds.covariates[0].values == cov.values);
    CHECK(ds.response.labels == resp.labels);
    CHECK(ds.covariates[0].grid == cov.grid);

    // numeric response round trip
    Response num;
    num.kind = Response::Kind::Numeric;
    num.targets = {0.1, -2.5, 1e-17, 3.0};
    write_response_csv(num, resp_path);
    auto back = load_response_csv(resp_path);
    CHECK(back.targets == num.targets);

    fs::remove_all(dir);
}

TEST_CASE("csv: malformed input is rejected with context") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "mucart_fdata_bad";
    fs::create_directories(dir);
    const auto path = (dir / "bad.csv").string();

    auto write = [&](const std::string& text) {
        std::ofstream out(path);
        out << text;
    };

    write("t=0,t=1\n1.0,oops\n");
    CHECK_THROWS_AS(load_covariate_csv(path, "x"), IngestionError);

    write("u=0,u=1\n1.0,2.0\n");
    CHECK_THROWS_AS(load_covariate_csv(path, "x"), IngestionError);

    write("t=0,t=1\n1.0,2.0,3.0\n");
    CHECK_THROWS_AS(load_covariate_csv(path, "x"), IngestionError);

    // header not equispaced
    write("t=0,t=0.3,t=1\n1.0,2.0,3.0\n");
    CHECK_THROWS_AS(load_covariate_csv(path, "x"), IngestionError);

    write("wrong\n1\n");
    CHECK_THROWS_AS(load_response_csv(path), IngestionError);

    write("label\n1.5\n");
    CHECK_THROWS_AS(load_response_csv(path), IngestionError);

    fs::remove_all(dir);
}

TEST_CASE("subset preserves order and grids") {
    auto ds = one_cov_dataset({{0.0, 1.0}, {2.0, 3.0}, {4.0, 5.0}}, Grid{0.0, 1.0, 2});
    ds.response.targets = {10.0, 20.0, 30.0};
    std::vector<std::size_t> idx{2, 0};
    auto sub = subset(ds, idx);
    CHECK(sub.n_samples() == 2);
    CHECK(sub.covariates[0].values == std::vector<double>{4.0, 5.0, 0.0, 1.0});
    CHECK(sub.response.targets == std::vector<double>{30.0, 10.0});
    CHECK(sub.covariates[0].grid == ds.covariates[0].grid);
}
