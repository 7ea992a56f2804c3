// Command line front end: generate synthetic market data, fit price class
// schemes, build features, run the model grid and compare forecasts.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "obpf/data_io.hpp"
#include "obpf/evaluation.hpp"
#include "obpf/hash.hpp"
#include "obpf/models/forest.hpp"
#include "obpf/partition.hpp"
#include "obpf/rng.hpp"
#include "obpf/synthetic.hpp"
#include "obpf/textio.hpp"
#include "obpf/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace obpf::cli {

namespace {

constexpr std::uint64_t importance_tag = 0x696d70;
constexpr std::uint64_t final_tag = 0x66696e;

struct Options {
    std::string data_dir;
    std::string spec_path;
    std::string scheme_path;
    std::string features_path;
    std::string grid_path;
    std::string models_dir;
    std::string out;
    double vstar = 1000.0;
    double test_fraction = 0.2;
    int cv_folds = 5;
    std::uint64_t seed = 1;
    int workers = 0;
};

int resolve_workers(int requested) {
    if (requested > 0)
        return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<const OrderBook*> train_books(const BookStore& books,
                                          double test_fraction) {
    const DataSplit split =
        chronological_split(books.size(), test_fraction);
    std::vector<const OrderBook*> out;
    out.reserve(split.train_rows.size());
    std::size_t i = 0;
    const std::size_t n_train = split.train_rows.size();
    for (const auto& [t, book] : books) {
        if (i >= n_train)
            break;
        out.push_back(&book);
        ++i;
    }
    return out;
}

// Grid configs that ship with the tool; small enough for a quick run end to
// end while still covering every model family and feature mode.
std::vector<ModelConfig> default_grid() {
    std::vector<ModelConfig> configs;

    ModelConfig ols_all;
    ols_all.id = "ols_all";
    ols_all.family = ModelFamily::ols;
    configs.push_back(ols_all);

    ModelConfig ols_nc = ols_all;
    ols_nc.id = "ols_no_curve";
    ols_nc.features = FeatureMode::no_curve;
    configs.push_back(ols_nc);

    ModelConfig rf;
    rf.id = "rf_200";
    rf.family = ModelFamily::random_forest;
    rf.rf = {200, 0.25, 0.01};
    configs.push_back(rf);

    ModelConfig rf_wide = rf;
    rf_wide.id = "rf_200_deep";
    rf_wide.rf = {200, 0.5, 0.002};
    configs.push_back(rf_wide);

    ModelConfig mlp;
    mlp.id = "mlp_16x16";
    mlp.family = ModelFamily::mlp;
    mlp.mlp.layers = {16, 16};
    mlp.mlp.activation = Activation::relu;
    mlp.mlp.optimizer = Optimizer::adam;
    mlp.mlp.epochs = 40;
    mlp.mlp.batch_size = 128;
    mlp.mlp.learning_rate = 0.001;
    configs.push_back(mlp);

    ModelConfig mlp_tanh = mlp;
    mlp_tanh.id = "mlp_16x16_tanh";
    mlp_tanh.mlp.activation = Activation::tanh_fn;
    configs.push_back(mlp_tanh);

    ModelConfig mlp_sel = mlp;
    mlp_sel.id = "mlp_16_selected";
    mlp_sel.mlp.layers = {16};
    mlp_sel.features = FeatureMode::selected;
    mlp_sel.n_top_features = 10;
    configs.push_back(mlp_sel);

    return configs;
}

void print_metrics_row(const SuiteRow& row) {
    std::printf("  %-18s %-5s n=%-6zu rmse=%-10.4f mae=%-10.4f mdape=%.4f\n",
                row.model.c_str(), row.split.c_str(), row.metrics.n,
                row.metrics.rmse, row.metrics.mae, row.metrics.mdape);
}

int cmd_generate(const Options& opt) {
    const SyntheticSpec spec = opt.spec_path.empty()
                                   ? default_synthetic_spec()
                                   : load_synthetic_spec(opt.spec_path);
    const DatasetBundle bundle = generate_synthetic(spec);
    save_bundle(bundle, opt.out);
    save_synthetic_spec(spec, fs::path(opt.out) / "synthetic_spec.json");
    std::printf("generated %zu hourly books (%s .. %s), %zu holidays, "
                "%zu bridge days\n",
                bundle.books.size(), spec.start.str().c_str(),
                spec.end.str().c_str(), bundle.calendars.holidays.size(),
                bundle.calendars.bridge_days.size());
    return 0;
}

int cmd_partition(const Options& opt) {
    const DatasetBundle bundle = load_bundle(opt.data_dir);
    const auto train = train_books(bundle.books, opt.test_fraction);
    if (train.empty())
        throw Error("no training books");
    const PriceClassScheme scheme = fit_scheme(train, opt.vstar);
    save_scheme(scheme, opt.out);
    std::printf("scheme: %zu supply bounds, %zu demand bounds, %zu classes "
                "(v* = %s, %zu training books)\n",
                scheme.supply_bounds.size(), scheme.demand_bounds.size(),
                scheme.class_count(), format_double(opt.vstar).c_str(),
                train.size());
    return 0;
}

int cmd_features(const Options& opt) {
    const DatasetBundle bundle = load_bundle(opt.data_dir);
    const PriceClassScheme scheme = load_scheme(opt.scheme_path);
    BuildReport report;
    const FeatureMatrix fm =
        build_feature_matrix(bundle.books, bundle.fundamentals,
                             bundle.calendars, scheme, &report);
    if (fm.rows() == 0)
        throw Error("no feature rows could be built");
    save_feature_matrix(fm, opt.out);
    std::printf("features: %zu rows x %zu columns (skipped %zu without "
                "reference, %zu without data)\n",
                fm.rows(), fm.cols(), report.skipped_no_reference,
                report.skipped_missing_data);
    return 0;
}

struct TrainOutput {
    GridResult table;
    std::vector<std::string> winner_files;
};

TrainOutput run_training(const FeatureMatrix& fm,
                         const std::vector<ModelConfig>& configs,
                         const Options& opt, const fs::path& out_dir) {
    const DataSplit split =
        chronological_split(fm.rows(), opt.test_fraction);
    if (split.train_rows.empty())
        throw Error("empty training split");
    const int workers = resolve_workers(opt.workers);

    const bool need_selected =
        std::any_of(configs.begin(), configs.end(), [](const ModelConfig& c) {
            return c.features == FeatureMode::selected;
        });
    std::vector<ModelConfig> rf_configs;
    for (const auto& c : configs)
        if (c.family == ModelFamily::random_forest)
            rf_configs.push_back(c);

    // the importance ranking comes from the best forest of the grid, or a
    // default forest when the grid has none but a config selects features
    std::map<std::string, CvCell> precomputed;
    FeatureImportance importance;
    bool have_importance = false;
    if (!rf_configs.empty() || need_selected) {
        ModelConfig ranking_config;
        if (!rf_configs.empty()) {
            const GridResult rf_pass =
                grid_search(fm, split.train_rows, rf_configs, nullptr,
                            opt.cv_folds, opt.seed, workers);
            for (const auto& cell : rf_pass.cells)
                precomputed.emplace(cell.config.id, cell);
            if (rf_pass.best >= 0) {
                ranking_config =
                    rf_pass.cells[static_cast<std::size_t>(rf_pass.best)]
                        .config;
            } else if (need_selected) {
                throw Error("every forest config failed, cannot rank "
                            "features for selection");
            }
        }
        if (ranking_config.id.empty() && need_selected) {
            ranking_config.id = "importance_rf";
            ranking_config.family = ModelFamily::random_forest;
        }
        if (!ranking_config.id.empty()) {
            const auto cols =
                columns_for_config(fm.names, ranking_config, nullptr);
            std::vector<std::string> names;
            for (int j : cols)
                names.push_back(fm.names[static_cast<std::size_t>(j)]);
            auto [X, y] = materialize(fm, split.train_rows, cols);
            const ModelPtr ranker =
                rf_fit(X, y, names, ranking_config,
                       derive_seed(opt.seed, importance_tag), workers);
            importance =
                dynamic_cast<const ForestModel&>(*ranker).importance();
            have_importance = true;
            std::printf("importance ranking from forest '%s'\n",
                        ranking_config.id.c_str());
        }
    }

    // full grid pass; forest cells computed above are reused as-is
    std::vector<ModelConfig> remaining;
    for (const auto& c : configs)
        if (precomputed.find(c.id) == precomputed.end())
            remaining.push_back(c);
    GridResult merged;
    if (!remaining.empty()) {
        const GridResult rest = grid_search(
            fm, split.train_rows, remaining,
            have_importance ? &importance : nullptr, opt.cv_folds, opt.seed,
            workers);
        for (const auto& cell : rest.cells)
            precomputed.emplace(cell.config.id, cell);
    }
    for (const auto& c : configs)
        merged.cells.push_back(precomputed.at(c.id));
    for (std::size_t i = 0; i < merged.cells.size(); ++i) {
        const CvCell& cell = merged.cells[i];
        if (cell.failed)
            continue;
        if (merged.best < 0 ||
            cell.mean_rmse <
                merged.cells[static_cast<std::size_t>(merged.best)].mean_rmse)
            merged.best = static_cast<int>(i);
    }

    save_cv_table(merged, out_dir / "cv_table.csv");
    if (have_importance)
        save_importance(importance, out_dir / "importance.csv");
    if (merged.best < 0)
        throw Error("every grid cell failed");

    // winner per family, refit on the whole training split
    TrainOutput result;
    result.table = merged;
    fs::create_directories(out_dir / "models");
    std::map<ModelFamily, const CvCell*> winners;
    for (const auto& cell : merged.cells) {
        if (cell.failed)
            continue;
        auto [it, inserted] =
            winners.emplace(cell.config.family, &cell);
        if (!inserted && cell.mean_rmse < it->second->mean_rmse)
            it->second = &cell;
    }
    for (const auto& [family, cell] : winners) {
        const ModelConfig& config = cell->config;
        const auto cols = columns_for_config(
            fm.names, config, have_importance ? &importance : nullptr);
        std::vector<std::string> names;
        for (int j : cols)
            names.push_back(fm.names[static_cast<std::size_t>(j)]);
        auto [X, y] = materialize(fm, split.train_rows, cols);
        const std::uint64_t seed = derive_seed(
            opt.seed, final_tag, Hasher().add(config.id).value());
        const ModelPtr model =
            fit_model(config, X, y, names, seed, workers);
        const fs::path file = out_dir / "models" / (config.id + ".json");
        save_model(*model, file);
        result.winner_files.push_back(file.string());
        std::printf("trained %-14s '%s' cv_rmse=%.4f train_rmse=%.4f -> %s\n",
                    to_string(family).c_str(), config.id.c_str(),
                    cell->mean_rmse, model->final_train_rmse,
                    file.c_str());
    }
    return result;
}

int cmd_train(const Options& opt) {
    const FeatureMatrix fm = load_feature_matrix(opt.features_path);
    const std::vector<ModelConfig> configs =
        opt.grid_path.empty() ? default_grid()
                              : load_model_grid(opt.grid_path);
    const fs::path out_dir(opt.out);
    fs::create_directories(out_dir);
    if (opt.grid_path.empty())
        save_model_grid(configs, out_dir / "grid.json");
    run_training(fm, configs, opt, out_dir);
    return 0;
}

int cmd_evaluate(const Options& opt) {
    const FeatureMatrix fm = load_feature_matrix(opt.features_path);
    const DataSplit split =
        chronological_split(fm.rows(), opt.test_fraction);
    const CalendarConfig cal =
        load_calendars(fs::path(opt.data_dir) / "calendars.csv");

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(opt.models_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw Error("no model files in " + opt.models_dir);

    std::vector<ModelPtr> models;
    std::vector<std::pair<std::string, const Model*>> named;
    for (const auto& file : files) {
        models.push_back(load_model(file));
        named.emplace_back(models.back()->config.id, models.back().get());
    }

    const auto rows = evaluate_suite(fm, split, named, cal);
    fs::create_directories(opt.out);
    save_comparison(rows, fs::path(opt.out) / "comparison.csv");
    std::printf("comparison over %zu train / %zu test rows:\n",
                split.train_rows.size(), split.test_rows.size());
    for (const auto& row : rows)
        print_metrics_row(row);
    return 0;
}

int cmd_pipeline(const Options& opt) {
    const fs::path out_dir(opt.out);
    fs::create_directories(out_dir);

    const SyntheticSpec spec = opt.spec_path.empty()
                                   ? default_synthetic_spec()
                                   : load_synthetic_spec(opt.spec_path);
    std::printf("[1/5] generating synthetic data\n");
    const DatasetBundle bundle = generate_synthetic(spec);
    const fs::path data_dir = out_dir / "data";
    save_bundle(bundle, data_dir);
    save_synthetic_spec(spec, data_dir / "synthetic_spec.json");

    std::printf("[2/5] fitting price class scheme (v* = %s)\n",
                format_double(opt.vstar).c_str());
    const auto train = train_books(bundle.books, opt.test_fraction);
    const PriceClassScheme scheme = fit_scheme(train, opt.vstar);
    save_scheme(scheme, out_dir / "scheme.txt");
    std::printf("      %zu classes\n", scheme.class_count());

    std::printf("[3/5] building features\n");
    BuildReport report;
    const FeatureMatrix fm =
        build_feature_matrix(bundle.books, bundle.fundamentals,
                             bundle.calendars, scheme, &report);
    if (fm.rows() == 0)
        throw Error("no feature rows could be built");
    save_feature_matrix(fm, out_dir / "features.csv");
    std::printf("      %zu rows x %zu columns\n", fm.rows(), fm.cols());

    std::printf("[4/5] grid search and training\n");
    const std::vector<ModelConfig> configs =
        opt.grid_path.empty() ? default_grid()
                              : load_model_grid(opt.grid_path);
    save_model_grid(configs, out_dir / "grid.json");
    const TrainOutput trained = run_training(fm, configs, opt, out_dir);

    std::printf("[5/5] evaluation\n");
    const DataSplit split =
        chronological_split(fm.rows(), opt.test_fraction);
    std::vector<ModelPtr> models;
    std::vector<std::pair<std::string, const Model*>> named;
    std::vector<fs::path> model_files(trained.winner_files.begin(),
                                      trained.winner_files.end());
    std::sort(model_files.begin(), model_files.end());
    for (const auto& file : model_files) {
        models.push_back(load_model(file));
        named.emplace_back(models.back()->config.id, models.back().get());
    }
    const auto rows =
        evaluate_suite(fm, split, named, bundle.calendars);
    save_comparison(rows, out_dir / "comparison.csv");
    for (const auto& row : rows)
        print_metrics_row(row);

    json manifest;
    manifest["tool"] = "obpf";
    manifest["tool_version"] = version;
    manifest["command"] = "pipeline";
    manifest["seed"] = opt.seed;
    manifest["vstar"] = opt.vstar;
    manifest["test_fraction"] = opt.test_fraction;
    manifest["cv_folds"] = opt.cv_folds;
    manifest["synthetic_spec"] =
        json::parse(read_file(data_dir / "synthetic_spec.json"));
    manifest["grid"] = json::parse(read_file(out_dir / "grid.json"));
    json artifacts;
    const auto add_artifact = [&](const fs::path& p) {
        artifacts[fs::relative(p, out_dir).string()] =
            hash_hex(Hasher().add(read_file(p)).value());
    };
    add_artifact(data_dir / "books.csv");
    add_artifact(data_dir / "fundamentals.csv");
    add_artifact(data_dir / "calendars.csv");
    add_artifact(out_dir / "scheme.txt");
    add_artifact(out_dir / "features.csv");
    add_artifact(out_dir / "cv_table.csv");
    if (fs::exists(out_dir / "importance.csv"))
        add_artifact(out_dir / "importance.csv");
    for (const auto& file : model_files)
        add_artifact(file);
    add_artifact(out_dir / "comparison.csv");
    manifest["artifacts"] = std::move(artifacts);
    write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
    std::printf("manifest written to %s\n",
                (out_dir / "manifest.json").string().c_str());
    return 0;
}

} // namespace

int run(int argc, char** argv) {
    CLI::App app{"order book based day-ahead price forecasting"};
    app.require_subcommand(1);
    Options opt;

    auto* generate = app.add_subcommand(
        "generate", "write a synthetic market data bundle");
    generate->add_option("--spec", opt.spec_path,
                         "synthetic spec JSON (default: built-in)");
    generate->add_option("--out", opt.out, "output directory")->required();

    auto* partition = app.add_subcommand(
        "partition", "fit a price class scheme on the training window");
    partition->add_option("--data", opt.data_dir, "data bundle directory")
        ->required();
    partition->add_option("--vstar", opt.vstar,
                          "target class volume in MWh")->capture_default_str();
    partition->add_option("--test-fraction", opt.test_fraction,
                          "chronological test share")->capture_default_str();
    partition->add_option("--out", opt.out, "scheme file")->required();

    auto* features = app.add_subcommand(
        "features", "assemble the feature matrix for a fitted scheme");
    features->add_option("--data", opt.data_dir, "data bundle directory")
        ->required();
    features->add_option("--scheme", opt.scheme_path, "scheme file")
        ->required();
    features->add_option("--out", opt.out, "feature CSV")->required();

    auto* train = app.add_subcommand(
        "train", "cross-validated grid search plus final fits");
    train->add_option("--features", opt.features_path, "feature CSV")
        ->required();
    train->add_option("--grid", opt.grid_path,
                      "model grid JSON (default: built-in)");
    train->add_option("--seed", opt.seed, "root random seed")->capture_default_str();
    train->add_option("--workers", opt.workers,
                      "worker threads (0 = hardware)")->capture_default_str();
    train->add_option("--test-fraction", opt.test_fraction,
                      "chronological test share")->capture_default_str();
    train->add_option("--cv-folds", opt.cv_folds, "cross validation folds")
                      ->capture_default_str();
    train->add_option("--out", opt.out, "output directory")->required();

    auto* evaluate = app.add_subcommand(
        "evaluate", "score saved models against the naive benchmark");
    evaluate->add_option("--features", opt.features_path, "feature CSV")
        ->required();
    evaluate->add_option("--models", opt.models_dir, "model directory")
        ->required();
    evaluate->add_option("--data", opt.data_dir,
                         "data bundle directory (for calendars)")
        ->required();
    evaluate->add_option("--test-fraction", opt.test_fraction,
                         "chronological test share")->capture_default_str();
    evaluate->add_option("--out", opt.out, "output directory")->required();

    auto* pipeline = app.add_subcommand(
        "pipeline", "generate, partition, features, train and evaluate");
    pipeline->add_option("--spec", opt.spec_path,
                         "synthetic spec JSON (default: built-in)");
    pipeline->add_option("--grid", opt.grid_path,
                         "model grid JSON (default: built-in)");
    pipeline->add_option("--vstar", opt.vstar,
                         "target class volume in MWh")->capture_default_str();
    pipeline->add_option("--seed", opt.seed, "root random seed")->capture_default_str();
    pipeline->add_option("--workers", opt.workers,
                         "worker threads (0 = hardware)")->capture_default_str();
    pipeline->add_option("--test-fraction", opt.test_fraction,
                         "chronological test share")->capture_default_str();
    pipeline->add_option("--cv-folds", opt.cv_folds,
                         "cross validation folds")->capture_default_str();
    pipeline->add_option("--out", opt.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (generate->parsed())
            return cmd_generate(opt);
        if (partition->parsed())
            return cmd_partition(opt);
        if (features->parsed())
            return cmd_features(opt);
        if (train->parsed())
            return cmd_train(opt);
        if (evaluate->parsed())
            return cmd_evaluate(opt);
        if (pipeline->parsed())
            return cmd_pipeline(opt);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const MalformedRow& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace obpf::cli

int main(int argc, char** argv) { return obpf::cli::run(argc, argv); }
