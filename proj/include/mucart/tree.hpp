#pragma once

// Greedy recursive tree growth for the three splitters (MuCart, Axis,
// AxisOnFE), prediction, versioned JSON persistence and DOT export.

#include <json.hpp>
#include <memory>
#include <sstream>

#include "split.hpp"

namespace mucart {

enum class Splitter { MuCart, Axis, AxisOnFE };

struct TreeConfig {
    Task task = Task::Classification;
    Splitter splitter = Splitter::MuCart;
    std::size_t min_samples_leaf = 1;
    SolverConfig solver;
    std::optional<std::size_t> max_height;

    LossKind loss() const {
        return task == Task::Classification ? LossKind::Gini : LossKind::MSE;
    }
    void validate() const {
        if (min_samples_leaf < 1)
            throw std::invalid_argument("TreeConfig: min_samples_leaf must be >= 1");
        solver.validate();
    }
};

struct TreeNode {
    std::size_t depth = 0;
    std::size_t count = 0;
    // Internal node: exactly one of rule/axis_rule is set, both children present.
    std::optional<SplitRule> rule;
    std::optional<AxisRule> axis_rule;
    std::unique_ptr<TreeNode> left, right;
    // Leaf payload.
    int label = -1;
    std::vector<double> proportions;  // classification, length K
    double value = 0.0;               // regression mean

    bool is_leaf() const { return !left; }
};

struct MuCartModel {
    std::unique_ptr<TreeNode> root;
    TreeConfig config;
    std::vector<std::string> covariate_names;
    std::vector<Grid> grids;
    StandardizationStats stats;
    std::size_t height = 0;  // max leaf depth; 0 for a lone leaf
    std::size_t n_train = 0;
    int n_classes = 0;                          // classification
    double target_min = 0.0, target_max = 0.0;  // regression
};

struct Prediction {
    int label = -1;
    std::vector<double> proportions;
    double value = 0.0;
};

struct SerializationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace tree_detail {

inline void make_leaf(TreeNode& node, const FunctionalDataset& ds,
                      std::span<const std::size_t> indices, Task task, int n_classes) {
    if (task == Task::Classification) {
        std::vector<std::size_t> counts(n_classes, 0);
        for (std::size_t i : indices) ++counts[ds.response.labels[i]];
        node.proportions.resize(n_classes);
        int best = 0;
        for (int k = 0; k < n_classes; ++k) {
            node.proportions[k] =
                static_cast<double>(counts[k]) / static_cast<double>(indices.size());
            if (counts[k] > counts[best]) best = k;  // tie keeps the smaller label
        }
        node.label = best;
    } else {
        double mean = 0.0;
        for (std::size_t i : indices) mean += ds.response.targets[i];
        node.value = mean / static_cast<double>(indices.size());
    }
}

inline bool is_pure(const FunctionalDataset& ds, std::span<const std::size_t> indices, Task task) {
    if (task == Task::Classification) {
        const int first = ds.response.labels[indices.front()];
        for (std::size_t i : indices)
            if (ds.response.labels[i] != first) return false;
    } else {
        const double first = ds.response.targets[indices.front()];
        for (std::size_t i : indices)
            if (ds.response.targets[i] != first) return false;
    }
    return true;
}

struct GrowContext {
    const FunctionalDataset& ds;
    const TreeConfig& config;
    const StandardizationStats& stats;
    const FeBaseline* fe;  // AxisOnFE only
    std::size_t height = 0;
};

inline std::unique_ptr<TreeNode> grow(GrowContext& ctx, std::vector<std::size_t>& indices,
                                      std::size_t depth) {
    const auto& cfg = ctx.config;
    auto node = std::make_unique<TreeNode>();
    node->depth = depth;
    node->count = indices.size();
    ctx.height = std::max(ctx.height, depth);

    const int n_classes = ctx.ds.response.n_classes;
    auto leaf = [&]() {
        make_leaf(*node, ctx.ds, indices, cfg.task, n_classes);
        return std::move(node);
    };

    if (is_pure(ctx.ds, indices, cfg.task)) return leaf();
    if (indices.size() < 2 * cfg.min_samples_leaf) return leaf();
    if (cfg.max_height && depth >= *cfg.max_height) return leaf();

    std::vector<std::size_t> left_idx, right_idx;
    if (cfg.splitter == Splitter::Axis) {
        auto cand = axis_best_split(ctx.ds, indices, cfg.loss(), cfg.min_samples_leaf);
        if (!cand) return leaf();
        node->axis_rule = cand->rule;
        const auto& cov = ctx.ds.covariates[cand->rule.covariate];
        for (std::size_t i : indices)
            (cov.row(i)[cand->rule.grid_index] <= cand->rule.threshold ? left_idx : right_idx)
                .push_back(i);
    } else if (cfg.splitter == Splitter::AxisOnFE) {
        // Axis scan over the precomputed whole-domain feature columns.
        std::vector<int> labels;
        std::vector<double> targets;
        if (cfg.task == Task::Classification)
            for (std::size_t i : indices) labels.push_back(ctx.ds.response.labels[i]);
        else
            for (std::size_t i : indices) targets.push_back(ctx.ds.response.targets[i]);
        std::optional<std::pair<std::size_t, ThresholdResult>> best;
        std::vector<double> col(indices.size());
        for (std::size_t c = 0; c < ctx.fe->columns.size(); ++c) {
            for (std::size_t i = 0; i < indices.size(); ++i)
                col[i] = ctx.fe->columns[c].values[indices[i]];
            auto tr = split_detail::scan(col, labels, targets, cfg.loss(), cfg.min_samples_leaf);
            if (!tr) continue;
            if (!best || tr->impurity < best->second.impurity) best = {c, *tr};
        }
        if (!best) return leaf();
        const auto& fc = ctx.fe->columns[best->first];
        node->rule = SplitRule{fc.covariate, WeightKind::Uniform,
                               std::vector<double>(ctx.ds.covariates[fc.covariate].grid.p, 1.0),
                               fc.kind, fc.tmpl, best->second.threshold};
        for (std::size_t i : indices)
            (fc.values[i] <= best->second.threshold ? left_idx : right_idx).push_back(i);
    } else {
        auto weights =
            learn_node_weights(indices, ctx.ds, ctx.stats, cfg.task, cfg.solver);
        auto cand = best_split(ctx.ds, indices, weights, cfg.loss(), cfg.min_samples_leaf);
        if (!cand) return leaf();
        node->rule = std::move(cand->rule);
        const auto& cov = ctx.ds.covariates[node->rule->covariate];
        for (std::size_t i : indices)
            (route_left(*node->rule, cov.row(i), cov.grid) ? left_idx : right_idx).push_back(i);
    }

    if (left_idx.empty() || right_idx.empty()) {
        node->rule.reset();
        node->axis_rule.reset();
        return leaf();
    }
    node->left = grow(ctx, left_idx, depth + 1);
    node->right = grow(ctx, right_idx, depth + 1);
    return node;
}

}  // namespace tree_detail

inline MuCartModel fit(const FunctionalDataset& ds, const TreeConfig& config) {
    ds.validate();
    config.validate();
    if (ds.n_samples() == 0) throw std::invalid_argument("fit: empty dataset");
    const bool classification = config.task == Task::Classification;
    if (classification != (ds.response.kind == Response::Kind::Categorical))
        throw std::invalid_argument("fit: task does not match response kind");

    MuCartModel model;
    model.config = config;
    model.n_train = ds.n_samples();
    for (const auto& cov : ds.covariates) {
        model.covariate_names.push_back(cov.name);
        model.grids.push_back(cov.grid);
    }
    model.stats = standardize_fit(ds);
    if (classification) {
        model.n_classes = ds.response.n_classes;
    } else {
        model.target_min = *std::min_element(ds.response.targets.begin(), ds.response.targets.end());
        model.target_max = *std::max_element(ds.response.targets.begin(), ds.response.targets.end());
    }

    FeBaseline fe;
    if (config.splitter == Splitter::AxisOnFE) fe = fe_baseline_features(ds);

    tree_detail::GrowContext ctx{ds, config, model.stats, &fe};
    std::vector<std::size_t> indices(ds.n_samples());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    model.root = tree_detail::grow(ctx, indices, 0);
    model.height = ctx.height;
    return model;
}

// Predicts one sample given its curves, one per covariate in model order.
inline Prediction predict(const MuCartModel& model,
                          std::span<const std::span<const double>> sample) {
    if (sample.size() != model.grids.size())
        throw DimensionError("predict: covariate count mismatch");
    for (std::size_t q = 0; q < sample.size(); ++q)
        if (sample[q].size() != model.grids[q].p)
            throw DimensionError("predict: curve length mismatch");

    const TreeNode* node = model.root.get();
    while (!node->is_leaf()) {
        bool go_left;
        if (node->axis_rule) {
            const auto& r = *node->axis_rule;
            go_left = sample[r.covariate][r.grid_index] <= r.threshold;
        } else {
            const auto& r = *node->rule;
            go_left = route_left(r, sample[r.covariate], model.grids[r.covariate]);
        }
        node = go_left ? node->left.get() : node->right.get();
    }
    Prediction out;
    out.label = node->label;
    out.proportions = node->proportions;
    out.value = node->value;
    return out;
}

inline std::vector<Prediction> predict(const MuCartModel& model, const FunctionalDataset& ds) {
    std::vector<Prediction> out;
    out.reserve(ds.n_samples());
    std::vector<std::span<const double>> sample(ds.n_covariates());
    for (std::size_t i = 0; i < ds.n_samples(); ++i) {
        for (std::size_t q = 0; q < ds.n_covariates(); ++q) sample[q] = ds.covariates[q].row(i);
        out.push_back(predict(model, sample));
    }
    return out;
}

inline double evaluate_accuracy(const MuCartModel& model, const FunctionalDataset& ds) {
    auto preds = predict(model, ds);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (preds[i].label == ds.response.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(preds.size());
}

inline double evaluate_mse(const MuCartModel& model, const FunctionalDataset& ds) {
    auto preds = predict(model, ds);
    double s = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double d = preds[i].value - ds.response.targets[i];
        s += d * d;
    }
    return s / static_cast<double>(preds.size());
}

// ---------------------------------------------------------------------------
// JSON persistence
// ---------------------------------------------------------------------------

namespace tree_detail {

using json = nlohmann::json;

inline const char* weight_kind_id(WeightKind k) {
    switch (k) {
        case WeightKind::Pos: return "pos";
        case WeightKind::NegAbs: return "neg_abs";
        case WeightKind::Sgn: return "sgn";
        default: return "uniform";
    }
}
inline WeightKind weight_kind_from(const std::string& s) {
    if (s == "pos") return WeightKind::Pos;
    if (s == "neg_abs") return WeightKind::NegAbs;
    if (s == "sgn") return WeightKind::Sgn;
    if (s == "uniform") return WeightKind::Uniform;
    throw SerializationError("unknown weight kind: " + s);
}
inline const char* feature_id(FeatureKind::Type t) {
    switch (t) {
        case FeatureKind::Type::Mu: return "mu";
        case FeatureKind::Type::Var: return "var";
        case FeatureKind::Type::CosNode: return "cos_node";
        default: return "cos_class";
    }
}
inline FeatureKind::Type feature_from(const std::string& s) {
    if (s == "mu") return FeatureKind::Type::Mu;
    if (s == "var") return FeatureKind::Type::Var;
    if (s == "cos_node") return FeatureKind::Type::CosNode;
    if (s == "cos_class") return FeatureKind::Type::CosClass;
    throw SerializationError("unknown feature kind: " + s);
}

inline json node_to_json(const TreeNode& node, Task task) {
    json j;
    j["count"] = node.count;
    if (node.is_leaf()) {
        j["type"] = "leaf";
        if (task == Task::Classification) {
            j["label"] = node.label;
            j["proportions"] = node.proportions;
        } else {
            j["value"] = node.value;
        }
        return j;
    }
    j["type"] = "internal";
    if (node.axis_rule) {
        j["axis_rule"] = {{"covariate", node.axis_rule->covariate},
                          {"grid_index", node.axis_rule->grid_index},
                          {"threshold", node.axis_rule->threshold}};
    } else {
        const auto& r = *node.rule;
        json rj = {{"covariate", r.covariate},
                   {"weight_kind", weight_kind_id(r.wkind)},
                   {"weights", r.w},
                   {"feature", feature_id(r.fkind.type)},
                   {"threshold", r.threshold}};
        if (r.fkind.type == FeatureKind::Type::CosClass) rj["class_label"] = r.fkind.class_label;
        if (r.tmpl) {
            rj["template"] = r.tmpl->values;
            rj["template_origin"] =
                r.tmpl->origin == TemplateCurve::Origin::NodeMean ? "node_mean" : "class_mean";
        }
        j["rule"] = std::move(rj);
    }
    j["children"] = json::array({node_to_json(*node.left, task), node_to_json(*node.right, task)});
    return j;
}

inline std::unique_ptr<TreeNode> node_from_json(const json& j, Task task, std::size_t depth) {
    auto node = std::make_unique<TreeNode>();
    node->depth = depth;
    node->count = j.at("count").get<std::size_t>();
    const std::string type = j.at("type").get<std::string>();
    if (type == "leaf") {
        if (task == Task::Classification) {
            node->label = j.at("label").get<int>();
            node->proportions = j.at("proportions").get<std::vector<double>>();
        } else {
            node->value = j.at("value").get<double>();
        }
        return node;
    }
    if (type != "internal") throw SerializationError("unknown node type: " + type);
    if (j.contains("axis_rule")) {
        const auto& a = j.at("axis_rule");
        node->axis_rule = AxisRule{a.at("covariate").get<std::size_t>(),
                                   a.at("grid_index").get<std::size_t>(),
                                   a.at("threshold").get<double>()};
    } else {
        const auto& rj = j.at("rule");
        SplitRule r;
        r.covariate = rj.at("covariate").get<std::size_t>();
        r.wkind = weight_kind_from(rj.at("weight_kind").get<std::string>());
        r.w = rj.at("weights").get<std::vector<double>>();
        r.threshold = rj.at("threshold").get<double>();
        r.fkind.type = feature_from(rj.at("feature").get<std::string>());
        if (r.fkind.type == FeatureKind::Type::CosClass)
            r.fkind.class_label = rj.at("class_label").get<int>();
        if (rj.contains("template")) {
            TemplateCurve t;
            t.values = rj.at("template").get<std::vector<double>>();
            t.origin = rj.at("template_origin").get<std::string>() == "node_mean"
                           ? TemplateCurve::Origin::NodeMean
                           : TemplateCurve::Origin::ClassMean;
            t.class_label = r.fkind.class_label;
            r.tmpl = std::move(t);
        }
        node->rule = std::move(r);
    }
    const auto& children = j.at("children");
    if (!children.is_array() || children.size() != 2)
        throw SerializationError("internal node must have two children");
    node->left = node_from_json(children[0], task, depth + 1);
    node->right = node_from_json(children[1], task, depth + 1);
    return node;
}

}  // namespace tree_detail

inline std::string serialize(const MuCartModel& model) {
    using tree_detail::json;
    json j;
    j["format_version"] = 1;
    j["task"] = model.config.task == Task::Classification ? "classification" : "regression";
    switch (model.config.splitter) {
        case Splitter::MuCart: j["splitter"] = "mucart"; break;
        case Splitter::Axis: j["splitter"] = "axis"; break;
        case Splitter::AxisOnFE: j["splitter"] = "axis-fe"; break;
    }
    j["min_samples_leaf"] = model.config.min_samples_leaf;
    if (model.config.max_height) j["max_height"] = *model.config.max_height;
    j["solver"] = {{"lambda", model.config.solver.lambda},
                   {"tol", model.config.solver.tol},
                   {"max_newton_iters", model.config.solver.max_newton_iters},
                   {"barrier_init", model.config.solver.barrier_init},
                   {"barrier_shrink", model.config.solver.barrier_shrink},
                   {"barrier_min", model.config.solver.barrier_min}};
    j["n_train"] = model.n_train;
    j["height"] = model.height;
    if (model.config.task == Task::Classification) {
        j["n_classes"] = model.n_classes;
    } else {
        j["target_min"] = model.target_min;
        j["target_max"] = model.target_max;
    }
    j["covariates"] = tree_detail::json::array();
    for (std::size_t q = 0; q < model.grids.size(); ++q) {
        j["covariates"].push_back({{"name", model.covariate_names[q]},
                                   {"domain_start", model.grids[q].domain_start},
                                   {"domain_end", model.grids[q].domain_end},
                                   {"p", model.grids[q].p}});
    }
    j["standardization"] = tree_detail::json::array();
    for (const auto& sc : model.stats.per_covariate) {
        std::vector<int> flags(sc.zero_variance.begin(), sc.zero_variance.end());
        j["standardization"].push_back(
            {{"mean", sc.mean}, {"std", sc.std}, {"zero_variance", flags}});
    }
    j["root"] = tree_detail::node_to_json(*model.root, model.config.task);
    return j.dump();
}

inline MuCartModel deserialize(const std::string& payload) {
    using tree_detail::json;
    json j;
    try {
        j = json::parse(payload);
    } catch (const json::parse_error& e) {
        throw SerializationError(std::string("corrupt model payload: ") + e.what());
    }
    try {
        if (j.at("format_version").get<int>() != 1)
            throw SerializationError("unsupported model format version");
        MuCartModel model;
        model.config.task = j.at("task").get<std::string>() == "classification"
                                ? Task::Classification
                                : Task::Regression;
        const std::string sp = j.at("splitter").get<std::string>();
        model.config.splitter = sp == "mucart" ? Splitter::MuCart
                                : sp == "axis" ? Splitter::Axis
                                               : Splitter::AxisOnFE;
        model.config.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
        if (j.contains("max_height")) model.config.max_height = j.at("max_height").get<std::size_t>();
        const auto& sj = j.at("solver");
        model.config.solver.lambda = sj.at("lambda").get<double>();
        model.config.solver.tol = sj.at("tol").get<double>();
        model.config.solver.max_newton_iters = sj.at("max_newton_iters").get<int>();
        model.config.solver.barrier_init = sj.at("barrier_init").get<double>();
        model.config.solver.barrier_shrink = sj.at("barrier_shrink").get<double>();
        model.config.solver.barrier_min = sj.at("barrier_min").get<double>();
        model.n_train = j.at("n_train").get<std::size_t>();
        model.height = j.at("height").get<std::size_t>();
        if (model.config.task == Task::Classification) {
            model.n_classes = j.at("n_classes").get<int>();
        } else {
            model.target_min = j.at("target_min").get<double>();
            model.target_max = j.at("target_max").get<double>();
        }
        for (const auto& cj : j.at("covariates")) {
            model.covariate_names.push_back(cj.at("name").get<std::string>());
            model.grids.push_back(Grid{cj.at("domain_start").get<double>(),
                                       cj.at("domain_end").get<double>(),
                                       cj.at("p").get<std::size_t>()});
        }
        for (const auto& sjc : j.at("standardization")) {
            StandardizationStats::PerCovariate sc;
            sc.mean = sjc.at("mean").get<std::vector<double>>();
            sc.std = sjc.at("std").get<std::vector<double>>();
            for (int f : sjc.at("zero_variance").get<std::vector<int>>())
                sc.zero_variance.push_back(f != 0);
            model.stats.per_covariate.push_back(std::move(sc));
        }
        model.root = tree_detail::node_from_json(j.at("root"), model.config.task, 0);
        return model;
    } catch (const json::exception& e) {
        throw SerializationError(std::string("corrupt model payload: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// DOT export
// ---------------------------------------------------------------------------

namespace tree_detail {

inline const char* feature_label(const FeatureKind& k) {
    switch (k.type) {
        case FeatureKind::Type::Mu: return "f_mu";
        case FeatureKind::Type::Var: return "f_sigma2";
        case FeatureKind::Type::CosNode: return "f_cos";
        default: return "f_cos_class";
    }
}

inline void dot_node(std::ostringstream& out, const TreeNode& node, const MuCartModel& model,
                     int& counter, int id) {
    if (node.is_leaf()) {
        out << "  n" << id << " [shape=box, label=\"";
        if (model.config.task == Task::Classification)
            out << "class " << node.label;
        else
            out << "mean " << node.value;
        out << "\\nn=" << node.count << "\"];\n";
        return;
    }
    out << "  n" << id << " [label=\"";
    if (node.axis_rule) {
        const auto& r = *node.axis_rule;
        out << model.covariate_names[r.covariate] << "(t" << (r.grid_index + 1) << ") <= "
            << r.threshold;
    } else {
        const auto& r = *node.rule;
        out << model.covariate_names[r.covariate] << "\\n" << weight_kind_name(r.wkind) << " - "
            << feature_label(r.fkind);
        if (r.fkind.type == FeatureKind::Type::CosClass) out << "(" << r.fkind.class_label << ")";
        out << "\\n<= " << r.threshold;
    }
    out << "\"];\n";
    const int lid = ++counter, rid = ++counter;
    out << "  n" << id << " -> n" << lid << " [label=\"yes\"];\n";
    out << "  n" << id << " -> n" << rid << " [label=\"no\"];\n";
    dot_node(out, *node.left, model, counter, lid);
    dot_node(out, *node.right, model, counter, rid);
}

}  // namespace tree_detail

inline std::string export_dot(const MuCartModel& model) {
    std::ostringstream out;
    out << "digraph mucart {\n";
    int counter = 0;
    tree_detail::dot_node(out, *model.root, model, counter, 0);
    out << "}\n";
    return out.str();
}

// Weight vectors of the internal nodes, in DOT numbering order; used for
// the sidecar CSV next to a DOT export.
inline std::vector<std::pair<int, std::vector<double>>> internal_node_weights(
    const MuCartModel& model) {
    std::vector<std::pair<int, std::vector<double>>> out;
    int counter = 0;
    auto walk = [&](auto&& self, const TreeNode& node, int id) -> void {
        if (node.is_leaf()) return;
        if (node.rule) out.emplace_back(id, node.rule->w);
        const int lid = ++counter, rid = ++counter;
        self(self, *node.left, lid);
        self(self, *node.right, rid);
    };
    walk(walk, *model.root, 0);
    return out;
}

}  // namespace mucart
