#include <doctest.h>

#include <mucart/features.hpp>
#include <random>

using namespace mucart;

TEST_CASE("f_mu examples") {
    Grid g{0.0, 1.0, 2};
    std::vector<double> x{1.0, 3.0}, w{2.0, 0.0};
    CHECK(f_mu(x, w, g) == doctest::Approx(1.0).epsilon(1e-15));

    std::vector<double> constant{4.2, 4.2}, uniform{1.0, 1.0};
    CHECK(f_mu(constant, uniform, g) == doctest::Approx(4.2).epsilon(1e-15));

    // uniform weight reduces to the plain mean / integrate(x)/|I|
    std::vector<double> any{0.5, -1.25};
    CHECK(f_mu(any, uniform, g) == doctest::Approx(integrate(any, g) / g.length()).epsilon(1e-15));

    std::vector<double> wrong{1.0};
    CHECK_THROWS_AS(f_mu(wrong, uniform, g), DimensionError);
}

TEST_CASE("f_var examples") {
    Grid g{0.0, 1.0, 2};
    std::vector<double> uniform{1.0, 1.0};
    std::vector<double> constant{3.0, 3.0};
    CHECK(f_var(constant, uniform, g) == 0.0);

    std::vector<double> x{0.0, 2.0};
    CHECK(f_var(x, uniform, g) == doctest::Approx(1.0).epsilon(1e-15));

    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    Grid g5{0.0, 3.0, 5};
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> xr(5), wr(5);
        for (auto& v : xr) v = nd(rng);
        for (auto& v : wr) v = std::abs(nd(rng));
        CHECK(f_var(xr, wr, g5) >= 0.0);

        // internal consistency: f_var(x, w) = |I| * f_mu((x - xbar)^2, w)
        const double xbar = f_mu(xr, wr, g5);
        std::vector<double> dev2(5);
        for (std::size_t j = 0; j < 5; ++j) dev2[j] = (xr[j] - xbar) * (xr[j] - xbar);
        const double rhs = g5.length() * f_mu(dev2, wr, g5);
        CHECK(std::abs(f_var(xr, wr, g5) - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("f_mu linearity in x and w") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> nd;
    Grid g{0.0, 2.0, 6};
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> x(6), z(6), w(6), u(6);
        const double a = nd(rng), b = nd(rng);
        for (std::size_t j = 0; j < 6; ++j) {
            x[j] = nd(rng);
            z[j] = nd(rng);
            w[j] = nd(rng);
            u[j] = nd(rng);
        }
        std::vector<double> xc(6), wc(6);
        for (std::size_t j = 0; j < 6; ++j) {
            xc[j] = a * x[j] + b * z[j];
            wc[j] = a * w[j] + b * u[j];
        }
        const double in_x = f_mu(xc, w, g) - (a * f_mu(x, w, g) + b * f_mu(z, w, g));
        const double in_w = f_mu(x, wc, g) - (a * f_mu(x, w, g) + b * f_mu(x, u, g));
        CHECK(std::abs(in_x) <= 1e-12);
        CHECK(std::abs(in_w) <= 1e-12);
    }
}

TEST_CASE("rho_w examples and properties") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> nd;
    Grid g{0.0, 1.0, 4};

    std::vector<double> x{1.0, 0.0, 0.0, 0.0}, z{0.0, 1.0, 0.0, 0.0}, uniform(4, 1.0);
    CHECK(*rho_w(x, z, uniform, g) == 0.0);

    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> xr(4), w(4);
        for (auto& v : xr) v = nd(rng);
        for (auto& v : w) v = std::abs(nd(rng)) + 0.01;
        auto self = rho_w(xr, xr, w, g);
        REQUIRE(self.has_value());
        CHECK(std::abs(*self - 1.0) <= 1e-12);

        std::vector<double> neg = xr;
        for (auto& v : neg) v = -v;
        CHECK(std::abs(*rho_w(xr, neg, w, g) + 1.0) <= 1e-12);

        // scale invariance up to the sign of the scalars
        std::vector<double> zr(4);
        for (auto& v : zr) v = nd(rng);
        const double a = -2.5, b = 0.75;
        std::vector<double> ax = xr, bz = zr;
        for (auto& v : ax) v *= a;
        for (auto& v : bz) v *= b;
        const double base = *rho_w(xr, zr, w, g);
        CHECK(std::abs(*rho_w(ax, bz, w, g) - (a * b < 0 ? -base : base)) <= 1e-12);
        CHECK(std::abs(base) <= 1.0 + 1e-12);
    }

    std::vector<double> zero(4, 0.0);
    CHECK_FALSE(rho_w(zero, x, uniform, g).has_value());

    std::vector<double> signed_w{1.0, -1.0, 1.0, 1.0};
    CHECK_THROWS_AS(rho_w(x, z, signed_w, g), std::invalid_argument);
}

TEST_CASE("extract_features column counts") {
    std::mt19937_64 rng(44);
    std::normal_distribution<double> nd;
    Grid g{0.0, 1.0, 3};
    const std::size_t m = 8;
    std::vector<double> curves(m * 3);
    for (auto& v : curves) v = nd(rng) + 1.0;

    NodeWeights::Entry pos{WeightKind::Pos, {0.5, 2.0, 0.5}};
    NodeWeights::Entry sgn{WeightKind::Sgn, {2.0, -1.0, 2.0}};

    std::vector<int> binary(m);
    for (std::size_t i = 0; i < m; ++i) binary[i] = i % 2;
    auto block = extract_features(curves, g, pos, Task::Classification, binary);
    CHECK(block.columns.size() == 5);  // Mu, Var, CosNode, CosClass(0), CosClass(1)
    CHECK(block.columns[0].kind.type == FeatureKind::Type::Mu);
    CHECK(block.columns[1].kind.type == FeatureKind::Type::Var);
    CHECK(block.columns[2].kind.type == FeatureKind::Type::CosNode);
    CHECK(block.columns[3].kind == FeatureKind{FeatureKind::Type::CosClass, 0});
    CHECK(block.columns[4].kind == FeatureKind{FeatureKind::Type::CosClass, 1});
    for (const auto& col : block.columns) CHECK(col.values.size() == m);

    auto reg = extract_features(curves, g, sgn, Task::Regression);
    CHECK(reg.columns.size() == 2);  // Sgn keeps only Mu and Var

    // K = 3 labels but only classes 0 and 2 present in the node
    std::vector<int> partial(m);
    for (std::size_t i = 0; i < m; ++i) partial[i] = i % 2 ? 2 : 0;
    auto part = extract_features(curves, g, pos, Task::Classification, partial);
    CHECK(part.columns.size() == 5);
    CHECK(part.columns[3].kind == FeatureKind{FeatureKind::Type::CosClass, 0});
    CHECK(part.columns[4].kind == FeatureKind{FeatureKind::Type::CosClass, 2});
}

TEST_CASE("templates come from unstandardized node curves") {
    Grid g{0.0, 1.0, 2};
    std::vector<double> curves{1.0, 3.0, 3.0, 5.0};
    NodeWeights::Entry uni{WeightKind::Uniform, {1.0, 1.0}};
    std::vector<int> labels{0, 1};
    auto block = extract_features(curves, g, uni, Task::Classification, labels);
    const auto& cos_node = block.columns[2];
    REQUIRE(cos_node.tmpl.has_value());
    CHECK(cos_node.tmpl->origin == TemplateCurve::Origin::NodeMean);
    CHECK(cos_node.tmpl->values == std::vector<double>{2.0, 4.0});
    const auto& cos_c1 = block.columns[4];
    REQUIRE(cos_c1.tmpl.has_value());
    CHECK(cos_c1.tmpl->origin == TemplateCurve::Origin::ClassMean);
    CHECK(cos_c1.tmpl->class_label == 1);
    CHECK(cos_c1.tmpl->values == std::vector<double>{3.0, 5.0});
}

TEST_CASE("degenerate cosine columns are omitted with a note") {
    Grid g{0.0, 1.0, 2};
    std::vector<double> curves{0.0, 0.0, 1.0, 1.0};  // first row has zero norm
    NodeWeights::Entry uni{WeightKind::Uniform, {1.0, 1.0}};
    auto block = extract_features(curves, g, uni, Task::Regression);
    CHECK(block.columns.size() == 2);  // only Mu and Var survive
    CHECK_FALSE(block.notes.empty());
}

TEST_CASE("fe_baseline_features") {
    std::mt19937_64 rng(88);
    std::normal_distribution<double> nd;
    FunctionalDataset ds;
    for (int q = 0; q < 2; ++q) {
        FunctionalCovariate cov;
        cov.name = "x" + std::to_string(q + 1);
        cov.grid = Grid{0.0, 1.0, 4};
        cov.n_samples = 6;
        for (int i = 0; i < 24; ++i) cov.values.push_back(nd(rng) + 2.0);
        ds.covariates.push_back(std::move(cov));
    }
    ds.response.kind = Response::Kind::Numeric;
    ds.response.targets.assign(6, 0.0);
    for (int i = 0; i < 6; ++i) ds.response.targets[i] = nd(rng);

    auto fe = fe_baseline_features(ds);
    CHECK(fe.columns.size() == 6);  // (Mu, Var, CosNode) x 2 covariates

    // Mu column equals the row means
    for (std::size_t i = 0; i < 6; ++i) {
        auto r = ds.covariates[0].row(i);
        double mean = 0.0;
        for (double v : r) mean += v;
        mean /= 4.0;
        CHECK(fe.columns[0].values[i] == doctest::Approx(mean).epsilon(1e-14));
    }

    // a constant row has Var feature 0
    FunctionalDataset flat = ds;
    for (std::size_t j = 0; j < 4; ++j) flat.covariates[0].values[j] = 3.0;
    auto fe2 = fe_baseline_features(flat);
    CHECK(fe2.columns[1].values[0] == 0.0);

    // classification adds per-class cosine columns
    FunctionalDataset cls = ds;
    cls.response.kind = Response::Kind::Categorical;
    cls.response.n_classes = 2;
    cls.response.targets.clear();
    cls.response.labels = {0, 1, 0, 1, 0, 1};
    auto fe3 = fe_baseline_features(cls);
    CHECK(fe3.columns.size() == 10);  // (Mu, Var, CosNode, CosClass(0), CosClass(1)) x 2
}
