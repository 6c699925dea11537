// Command-line entry point: simulate, train, predict, cv, export.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <mucart/mucart.hpp>

namespace {

using namespace mucart;

Task parse_task(const std::string& s) {
    if (s == "class") return Task::Classification;
    if (s == "reg") return Task::Regression;
    throw CLI::ValidationError("--task must be 'class' or 'reg'");
}

Splitter parse_splitter(const std::string& s) {
    if (s == "mucart") return Splitter::MuCart;
    if (s == "axis") return Splitter::Axis;
    if (s == "axis-fe") return Splitter::AxisOnFE;
    throw CLI::ValidationError("--splitter must be 'mucart', 'axis' or 'axis-fe'");
}

FunctionalDataset load_dataset(const std::vector<std::string>& covariate_paths,
                               const std::string& response_path) {
    std::vector<std::pair<std::string, std::string>> covs;
    for (const auto& path : covariate_paths)
        covs.emplace_back(std::filesystem::path(path).stem().string(), path);
    return load_csv(covs, response_path);
}

std::size_t leaf_count(const TreeNode& node) {
    return node.is_leaf() ? 1 : leaf_count(*node.left) + leaf_count(*node.right);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

int cmd_simulate(std::size_t n, std::size_t p, std::uint64_t seed, const std::string& out_dir) {
    SimConfig cfg{n, p, seed};
    FunctionalDataset ds = generate(cfg);
    std::filesystem::create_directories(out_dir);
    const auto dir = std::filesystem::path(out_dir);
    write_covariate_csv(ds.covariates[0], (dir / "x1.csv").string());
    write_covariate_csv(ds.covariates[1], (dir / "x2.csv").string());
    write_response_csv(ds.response, (dir / "labels.csv").string());
    std::cout << "wrote " << n << " samples (p=" << p << ") to " << out_dir << "\n";
    return 0;
}

int cmd_train(const std::vector<std::string>& cov_paths, const std::string& resp_path,
              Task task, Splitter splitter, double lambda, std::size_t min_leaf,
              std::optional<std::size_t> max_height, const std::string& model_path) {
    FunctionalDataset ds = load_dataset(cov_paths, resp_path);
    TreeConfig cfg;
    cfg.task = task;
    cfg.splitter = splitter;
    cfg.solver.lambda = lambda;
    cfg.min_samples_leaf = min_leaf;
    cfg.max_height = max_height;
    MuCartModel model = fit(ds, cfg);
    write_file(model_path, serialize(model));

    const double resub = task == Task::Classification ? 1.0 - evaluate_accuracy(model, ds)
                                                      : evaluate_mse(model, ds);
    std::cout << "height: " << model.height << "\n"
              << "leaves: " << leaf_count(*model.root) << "\n"
              << "resubstitution_loss: " << resub << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::vector<std::string>& cov_paths,
                const std::string& out_path) {
    std::ifstream in(model_path);
    if (!in) throw std::runtime_error("cannot open " + model_path);
    std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    MuCartModel model = deserialize(payload);

    std::vector<std::pair<std::string, std::string>> covs;
    for (std::size_t q = 0; q < cov_paths.size(); ++q) {
        std::optional<Grid> expected;
        if (q < model.grids.size()) expected = model.grids[q];
        covs.emplace_back(std::filesystem::path(cov_paths[q]).stem().string(), cov_paths[q]);
    }
    FunctionalDataset ds;
    for (std::size_t q = 0; q < covs.size(); ++q)
        ds.covariates.push_back(load_covariate_csv(covs[q].second, covs[q].first,
                                                   q < model.grids.size()
                                                       ? std::optional<Grid>(model.grids[q])
                                                       : std::nullopt));
    if (ds.covariates.size() != model.grids.size())
        throw std::runtime_error("model expects " + std::to_string(model.grids.size()) +
                                 " covariates");

    std::ostringstream out;
    std::vector<std::span<const double>> sample(ds.covariates.size());
    const std::size_t n = ds.covariates.front().n_samples;
    if (model.config.task == Task::Classification) {
        out << "prediction";
        for (int k = 0; k < model.n_classes; ++k) out << ",p" << k;
        out << "\n";
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t q = 0; q < sample.size(); ++q) sample[q] = ds.covariates[q].row(i);
            auto pr = predict(model, sample);
            out << pr.label;
            for (double p : pr.proportions) out << ',' << detail::format_double(p);
            out << "\n";
        }
    } else {
        out << "prediction\n";
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t q = 0; q < sample.size(); ++q) sample[q] = ds.covariates[q].row(i);
            out << detail::format_double(predict(model, sample).value) << "\n";
        }
    }
    write_file(out_path, out.str());
    std::cout << "wrote " << n << " predictions to " << out_path << "\n";
    return 0;
}

int cmd_cv(const std::vector<std::string>& cov_paths, const std::string& resp_path, Task task,
           Splitter splitter, CvSpec spec, const std::string& out_path) {
    FunctionalDataset ds = load_dataset(cov_paths, resp_path);
    TreeConfig base;
    base.task = task;
    base.splitter = splitter;
    CvReport report = run_cv(ds, base, spec);
    write_file(out_path, report.to_csv());
    write_file(out_path + ".folds.csv", report.folds_to_csv());
    std::cout << (task == Task::Classification ? "mean_accuracy: " : "mean_mse: ")
              << report.mean_metric() << "\n"
              << "mean_height: " << report.mean_height() << "\n";
    return 0;
}

int cmd_export(const std::string& model_path, const std::string& out_path) {
    std::ifstream in(model_path);
    if (!in) throw std::runtime_error("cannot open " + model_path);
    std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    MuCartModel model = deserialize(payload);
    write_file(out_path, export_dot(model));

    const auto weights = internal_node_weights(model);
    std::ostringstream csv;
    csv << "node_id,weights...\n";
    for (const auto& [id, w] : weights) {
        csv << id;
        for (double v : w) csv << ',' << detail::format_double(v);
        csv << "\n";
    }
    const std::string wpath =
        (std::filesystem::path(out_path).parent_path() /
         (std::filesystem::path(out_path).stem().string() + "_weights.csv"))
            .string();
    write_file(wpath, csv.str());
    std::cout << "wrote " << out_path << " and " << wpath << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"measure-inducing classification and regression trees for functional data"};
    app.require_subcommand(1);

    std::vector<std::string> covariates;
    std::string response, model_path, out_path;
    std::string task_str = "class", splitter_str = "mucart";
    double lambda = 1.0;
    std::size_t min_leaf = 1;
    std::size_t n = 100, p = 200;
    std::uint64_t seed = 0;
    std::size_t max_height_val = 0;

    auto* sim = app.add_subcommand("simulate", "generate the synthetic two-covariate dataset");
    sim->add_option("--n", n, "sample count");
    sim->add_option("--p", p, "grid length");
    sim->add_option("--seed", seed, "random seed");
    sim->add_option("--out", out_path, "output directory")->required();

    auto* train = app.add_subcommand("train", "fit a tree and store the model");
    train->add_option("--task", task_str, "class or reg");
    train->add_option("--splitter", splitter_str, "mucart, axis or axis-fe");
    train->add_option("--lambda", lambda, "ridge strength");
    train->add_option("--min-leaf", min_leaf, "minimum samples per leaf");
    auto* mh = train->add_option("--max-height", max_height_val, "optional height cap");
    train->add_option("--covariate", covariates, "covariate CSV (repeatable, ordered)")
        ->required();
    train->add_option("--response", response, "response CSV")->required();
    train->add_option("--model", model_path, "output model path")->required();

    auto* pred = app.add_subcommand("predict", "predict with a stored model");
    pred->add_option("--model", model_path, "model path")->required();
    pred->add_option("--covariate", covariates, "covariate CSV (repeatable, ordered)")->required();
    pred->add_option("--out", out_path, "predictions CSV path")->required();

    CvSpec spec;
    std::vector<double> grid_lambda;
    std::vector<std::size_t> grid_minleaf;
    auto* cv = app.add_subcommand("cv", "repeated k-fold CV with inner grid search");
    cv->add_option("--task", task_str, "class or reg");
    cv->add_option("--splitter", splitter_str, "mucart, axis or axis-fe");
    cv->add_option("--folds", spec.outer_folds, "outer folds");
    cv->add_option("--inner-folds", spec.inner_folds, "inner folds");
    cv->add_option("--repeats", spec.repeats, "repetitions");
    cv->add_option("--seed", spec.seed, "random seed");
    cv->add_option("--grid-lambda", grid_lambda, "lambda grid a,b,c")->delimiter(',');
    cv->add_option("--grid-minleaf", grid_minleaf, "min-leaf grid a,b,c")->delimiter(',');
    cv->add_option("--covariate", covariates, "covariate CSV (repeatable, ordered)")->required();
    cv->add_option("--response", response, "response CSV")->required();
    cv->add_option("--out", out_path, "report CSV path")->required();

    auto* exp = app.add_subcommand("export", "export a model to DOT plus node weight CSV");
    exp->add_option("--model", model_path, "model path")->required();
    exp->add_option("--out", out_path, "DOT output path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(n, p, seed, out_path);
        if (train->parsed())
            return cmd_train(covariates, response, parse_task(task_str),
                             parse_splitter(splitter_str), lambda, min_leaf,
                             mh->count() ? std::optional<std::size_t>(max_height_val)
                                         : std::nullopt,
                             model_path);
        if (pred->parsed()) return cmd_predict(model_path, covariates, out_path);
        if (cv->parsed()) {
            if (!grid_lambda.empty()) spec.lambda_grid = grid_lambda;
            if (!grid_minleaf.empty()) spec.min_leaf_grid = grid_minleaf;
            return cmd_cv(covariates, response, parse_task(task_str),
                          parse_splitter(splitter_str), spec, out_path);
        }
        if (exp->parsed()) return cmd_export(model_path, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
