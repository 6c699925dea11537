#include <doctest.h>

#include <mucart/sim.hpp>
#include <mucart/tree.hpp>
#include <random>

using namespace mucart;

namespace {

std::size_t leaf_count(const TreeNode& n) {
    return n.is_leaf() ? 1 : leaf_count(*n.left) + leaf_count(*n.right);
}

std::size_t internal_count(const TreeNode& n) {
    return n.is_leaf() ? 0 : 1 + internal_count(*n.left) + internal_count(*n.right);
}

std::size_t max_leaf_depth(const TreeNode& n) {
    return n.is_leaf() ? n.depth : std::max(max_leaf_depth(*n.left), max_leaf_depth(*n.right));
}

std::size_t leaf_count_sum(const TreeNode& n) {
    return n.is_leaf() ? n.count : leaf_count_sum(*n.left) + leaf_count_sum(*n.right);
}

bool predictions_equal(const std::vector<Prediction>& a, const std::vector<Prediction>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].label != b[i].label || a[i].value != b[i].value ||
            a[i].proportions != b[i].proportions)
            return false;
    return true;
}

}  // namespace

TEST_CASE("stopping rules produce single leaves") {
    auto ds = generate(SimConfig{20, 12, 3});
    TreeConfig cfg;
    cfg.task = Task::Classification;
    cfg.splitter = Splitter::Axis;

    cfg.min_samples_leaf = 20;
    auto m1 = fit(ds, cfg);
    CHECK(m1.height == 0);
    CHECK(m1.root->is_leaf());

    // pure dataset
    auto pure = ds;
    std::fill(pure.response.labels.begin(), pure.response.labels.end(), 1);
    cfg.min_samples_leaf = 1;
    auto m2 = fit(pure, cfg);
    CHECK(m2.root->is_leaf());
    CHECK(m2.root->label == 1);
    CHECK(m2.height == 0);

    // a single-leaf model predicts the training modal class everywhere
    auto preds = predict(m1, ds);
    std::vector<std::size_t> counts(2, 0);
    for (int y : ds.response.labels) ++counts[y];
    const int modal = counts[1] > counts[0] ? 1 : 0;
    for (const auto& pr : preds) CHECK(pr.label == modal);
}

TEST_CASE("structural invariants on a grown tree") {
    auto ds = generate(SimConfig{60, 16, 7});
    for (auto splitter : {Splitter::MuCart, Splitter::Axis, Splitter::AxisOnFE}) {
        TreeConfig cfg;
        cfg.task = Task::Classification;
        cfg.splitter = splitter;
        cfg.min_samples_leaf = 4;
        cfg.solver.lambda = 1.0;
        auto model = fit(ds, cfg);

        CHECK(model.height == max_leaf_depth(*model.root));
        CHECK(leaf_count_sum(*model.root) == ds.n_samples());
        CHECK(internal_node_weights(model).size() ==
              (splitter == Splitter::Axis ? 0 : internal_count(*model.root)));
    }
}

TEST_CASE("axis splitter with min_leaf 1 memorizes distinct patterns") {
    auto ds = generate(SimConfig{40, 10, 11});
    TreeConfig cfg;
    cfg.task = Task::Classification;
    cfg.splitter = Splitter::Axis;
    cfg.min_samples_leaf = 1;
    auto model = fit(ds, cfg);
    CHECK(evaluate_accuracy(model, ds) == 1.0);
}

TEST_CASE("resubstitution loss is non-increasing in max_height") {
    auto ds = generate(SimConfig{80, 20, 19});
    double prev = 0.0;
    for (std::size_t d = 0; d <= 4; ++d) {
        TreeConfig cfg;
        cfg.task = Task::Classification;
        cfg.splitter = Splitter::Axis;
        cfg.min_samples_leaf = 2;
        cfg.max_height = d;
        auto model = fit(ds, cfg);
        const double err = 1.0 - evaluate_accuracy(model, ds);
        if (d > 0) CHECK(err <= prev + 1e-12);
        CHECK(model.height <= d);
        prev = err;
    }
}

TEST_CASE("regression fit predicts leaf means") {
    std::mt19937_64 rng(29);
    std::normal_distribution<double> nd;
    FunctionalDataset ds;
    FunctionalCovariate cov;
    cov.name = "x";
    cov.grid = Grid{0.0, 1.0, 6};
    cov.n_samples = 30;
    cov.values.resize(180);
    for (auto& v : cov.values) v = nd(rng);
    ds.covariates.push_back(std::move(cov));
    ds.response.kind = Response::Kind::Numeric;
    ds.response.targets.resize(30);
    for (std::size_t i = 0; i < 30; ++i)
        ds.response.targets[i] = ds.covariates[0].row(i)[2] > 0 ? 5.0 + 0.01 * nd(rng)
                                                                : -5.0 + 0.01 * nd(rng);

    TreeConfig cfg;
    cfg.task = Task::Regression;
    cfg.splitter = Splitter::MuCart;
    cfg.min_samples_leaf = 5;
    auto model = fit(ds, cfg);
    CHECK(evaluate_mse(model, ds) < 1.0);

    // single-leaf regression model predicts the global mean
    cfg.min_samples_leaf = 30;
    auto leaf_model = fit(ds, cfg);
    double mean = 0.0;
    for (double y : ds.response.targets) mean += y;
    mean /= 30.0;
    std::vector<std::span<const double>> sample{ds.covariates[0].row(0)};
    CHECK(predict(leaf_model, sample).value == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("serialize/deserialize round trip preserves predictions") {
    auto ds = generate(SimConfig{60, 16, 31});
    for (auto splitter : {Splitter::MuCart, Splitter::Axis, Splitter::AxisOnFE}) {
        TreeConfig cfg;
        cfg.task = Task::Classification;
        cfg.splitter = splitter;
        cfg.min_samples_leaf = 4;
        auto model = fit(ds, cfg);
        auto payload = serialize(model);
        auto back = deserialize(payload);

        auto fresh = generate(SimConfig{100, 16, 32});
        CHECK(predictions_equal(predict(model, fresh), predict(back, fresh)));
        CHECK(back.height == model.height);
        CHECK(serialize(back) == payload);  // stable re-serialization
    }
}

TEST_CASE("serialization schema and corruption handling") {
    auto ds = generate(SimConfig{40, 12, 41});
    TreeConfig cfg;
    cfg.task = Task::Classification;
    cfg.splitter = Splitter::MuCart;
    cfg.min_samples_leaf = 4;
    auto model = fit(ds, cfg);
    auto j = nlohmann::json::parse(serialize(model));

    CHECK(j.at("format_version") == 1);
    // every stored rule carries its weight vector (and template for cosines)
    auto walk = [&](auto&& self, const nlohmann::json& node) -> void {
        if (node.at("type") == "leaf") return;
        const auto& rule = node.at("rule");
        CHECK(rule.at("weights").size() == 12);
        const std::string f = rule.at("feature");
        if (f == "cos_node" || f == "cos_class") CHECK(rule.contains("template"));
        self(self, node.at("children")[0]);
        self(self, node.at("children")[1]);
    };
    walk(walk, j.at("root"));

    CHECK_THROWS_AS(deserialize(""), SerializationError);
    CHECK_THROWS_AS(deserialize("{\"format_version\": 99}"), SerializationError);
    CHECK_THROWS_AS(deserialize("{\"format_version\": 1}"), SerializationError);

    std::vector<std::span<const double>> bad{std::span<const double>{}};
    CHECK_THROWS_AS(predict(model, bad), DimensionError);
}

TEST_CASE("DOT export") {
    auto ds = generate(SimConfig{40, 12, 53});
    TreeConfig cfg;
    cfg.task = Task::Classification;
    cfg.splitter = Splitter::MuCart;
    cfg.min_samples_leaf = 4;
    auto model = fit(ds, cfg);
    const std::string dot = export_dot(model);

    CHECK(dot.rfind("digraph", 0) == 0);
    // binary tree identity: nodes = 2 * internal + 1, edges = nodes - 1
    const std::size_t internal = internal_count(*model.root);
    std::size_t node_lines = 0, edge_lines = 0;
    for (std::size_t pos = 0; (pos = dot.find("\n  n", pos)) != std::string::npos; ++pos) {
        const std::size_t arrow = dot.find("->", pos + 1);
        const std::size_t eol = dot.find('\n', pos + 1);
        if (arrow != std::string::npos && arrow < eol)
            ++edge_lines;
        else
            ++node_lines;
    }
    CHECK(node_lines == 2 * internal + 1);
    CHECK(edge_lines == 2 * internal);
    if (internal > 0) {
        CHECK(dot.find("w_") != std::string::npos);
        CHECK(dot.find("f_") != std::string::npos);
    }

    // single leaf: exactly one node, no edges
    cfg.min_samples_leaf = 40;
    auto leaf_model = fit(ds, cfg);
    const std::string leaf_dot = export_dot(leaf_model);
    CHECK(leaf_dot.find("->") == std::string::npos);
    CHECK(leaf_dot.find("n0") != std::string::npos);

    for (const auto& [id, w] : internal_node_weights(model)) CHECK(w.size() == 12);
}
