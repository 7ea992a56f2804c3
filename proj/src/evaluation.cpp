#include "obpf/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "obpf/hash.hpp"
#include "obpf/parallel.hpp"
#include "obpf/rng.hpp"
#include "obpf/textio.hpp"

namespace obpf {

namespace {

constexpr std::uint64_t cell_tag = 0x67726964;
constexpr std::uint64_t fold_tag = 0x666f6c64;

std::string csv_safe(std::string text) {
    for (char& c : text)
        if (c == ',' || c == '\n')
            c = ';';
    return text;
}

std::vector<int> name_indices(const std::vector<std::string>& have,
                              const std::vector<std::string>& want) {
    std::map<std::string, int> pos;
    for (std::size_t j = 0; j < have.size(); ++j)
        pos.emplace(have[j], static_cast<int>(j));
    std::vector<int> cols;
    cols.reserve(want.size());
    for (const auto& name : want) {
        const auto it = pos.find(name);
        if (it == pos.end())
            throw DimensionMismatch("feature '" + name +
                                    "' missing from the feature matrix");
        cols.push_back(it->second);
    }
    return cols;
}

} // namespace

DataSplit chronological_split(std::size_t n_rows, double test_fraction) {
    if (test_fraction < 0.0 || test_fraction >= 1.0)
        throw ConfigError("test fraction must be in [0, 1)");
    if (n_rows == 0)
        throw Error("cannot split an empty matrix");
    const auto n_test = static_cast<std::size_t>(
        std::ceil(test_fraction * static_cast<double>(n_rows) - 1e-9));
    DataSplit split;
    split.train_rows.reserve(n_rows - n_test);
    split.test_rows.reserve(n_test);
    for (std::size_t i = 0; i < n_rows - n_test; ++i)
        split.train_rows.push_back(static_cast<int>(i));
    for (std::size_t i = n_rows - n_test; i < n_rows; ++i)
        split.test_rows.push_back(static_cast<int>(i));
    return split;
}

std::vector<DataSplit> cv_folds(std::size_t n_rows, int k) {
    if (k < 2)
        throw ConfigError("cross validation needs k >= 2");
    if (n_rows < static_cast<std::size_t>(k))
        throw Error("not enough rows for " + std::to_string(k) + " folds");
    const std::size_t base = n_rows / static_cast<std::size_t>(k);
    const std::size_t rem = n_rows % static_cast<std::size_t>(k);
    std::vector<DataSplit> folds(static_cast<std::size_t>(k));
    std::size_t at = 0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const std::size_t size = base + (f < rem ? 1 : 0);
        for (std::size_t i = 0; i < n_rows; ++i) {
            if (i >= at && i < at + size)
                folds[f].test_rows.push_back(static_cast<int>(i));
            else
                folds[f].train_rows.push_back(static_cast<int>(i));
        }
        at += size;
    }
    return folds;
}

std::vector<int> columns_for_config(const std::vector<std::string>& names,
                                    const ModelConfig& config,
                                    const FeatureImportance* importance) {
    switch (config.features) {
    case FeatureMode::all: {
        std::vector<int> cols(names.size());
        std::iota(cols.begin(), cols.end(), 0);
        return cols;
    }
    case FeatureMode::no_curve: {
        std::vector<int> cols;
        for (std::size_t j = 0; j < names.size(); ++j)
            if (!is_curve_feature(names[j]))
                cols.push_back(static_cast<int>(j));
        return cols;
    }
    case FeatureMode::selected: {
        if (!importance)
            throw ConfigError("config '" + config.id +
                              "' selects features but no importance "
                              "ranking is available");
        return name_indices(
            names, select_features(*importance, config.n_top_features));
    }
    }
    throw Error("unknown feature mode");
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd>
materialize(const FeatureMatrix& fm, const std::vector<int>& rows,
            const std::vector<int>& cols) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(cols.size()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                fm.X(rows[i], cols[j]);
        y(static_cast<Eigen::Index>(i)) = fm.y(rows[i]);
    }
    return {std::move(X), std::move(y)};
}

GridResult grid_search(const FeatureMatrix& fm, const std::vector<int>& rows,
                       const std::vector<ModelConfig>& configs,
                       const FeatureImportance* importance, int k,
                       std::uint64_t seed, int workers) {
    if (configs.empty())
        throw ConfigError("grid search without configs");
    const auto folds = cv_folds(rows.size(), k);
    const std::size_t n_cells = configs.size();
    const std::size_t n_folds = folds.size();

    GridResult result;
    result.cells.resize(n_cells);
    for (std::size_t c = 0; c < n_cells; ++c) {
        result.cells[c].config = configs[c];
        result.cells[c].fold_rmse.assign(n_folds, 0.0);
    }
    std::vector<std::string> errors(n_cells * n_folds);

    parallel_for(n_cells * n_folds, workers, [&](std::size_t unit) {
        const std::size_t c = unit / n_folds;
        const std::size_t f = unit % n_folds;
        try {
            const ModelConfig& config = configs[c];
            const std::vector<int> cols =
                columns_for_config(fm.names, config, importance);
            std::vector<std::string> names;
            names.reserve(cols.size());
            for (int j : cols)
                names.push_back(fm.names[static_cast<std::size_t>(j)]);

            // fold index sets are relative to `rows`
            std::vector<int> train, test;
            train.reserve(folds[f].train_rows.size());
            test.reserve(folds[f].test_rows.size());
            for (int i : folds[f].train_rows)
                train.push_back(rows[static_cast<std::size_t>(i)]);
            for (int i : folds[f].test_rows)
                test.push_back(rows[static_cast<std::size_t>(i)]);

            // keyed by the config id so a cell's result does not depend on
            // its position in the grid
            const std::uint64_t cell_seed = derive_seed(
                seed, cell_tag, Hasher().add(config.id).value());
            const std::uint64_t fold_seed =
                derive_seed(cell_seed, fold_tag, f);

            auto [X_train, y_train] = materialize(fm, train, cols);
            auto [X_test, y_test] = materialize(fm, test, cols);
            const ModelPtr model =
                fit_model(config, X_train, y_train, names, fold_seed, 1);
            const Eigen::VectorXd pred = model->predict(X_test);
            result.cells[c].fold_rmse[f] =
                std::sqrt((pred - y_test).squaredNorm() / X_test.rows());
        } catch (const std::exception& e) {
            errors[unit] = e.what();
            if (errors[unit].empty())
                errors[unit] = "unknown error";
        }
    });

    for (std::size_t c = 0; c < n_cells; ++c) {
        CvCell& cell = result.cells[c];
        for (std::size_t f = 0; f < n_folds; ++f) {
            const std::string& err = errors[c * n_folds + f];
            if (!err.empty() && !cell.failed) {
                cell.failed = true;
                cell.error = err;
            }
        }
        if (cell.failed) {
            cell.fold_rmse.clear();
            cell.mean_rmse = 0.0;
            continue;
        }
        cell.mean_rmse =
            std::accumulate(cell.fold_rmse.begin(), cell.fold_rmse.end(),
                            0.0) /
            static_cast<double>(n_folds);
        if (result.best < 0 ||
            cell.mean_rmse <
                result.cells[static_cast<std::size_t>(result.best)].mean_rmse)
            result.best = static_cast<int>(c);
    }
    return result;
}

CvCell cross_validate(const FeatureMatrix& fm, const std::vector<int>& rows,
                      const ModelConfig& config,
                      const FeatureImportance* importance, int k,
                      std::uint64_t seed, int workers) {
    return grid_search(fm, rows, {config}, importance, k, seed, workers)
        .cells[0];
}

void save_cv_table(const GridResult& result,
                   const std::filesystem::path& path) {
    std::string out = "config_id,family,features,status,mean_rmse,fold_rmse,"
                      "error\n";
    for (const auto& cell : result.cells) {
        out += cell.config.id + "," + to_string(cell.config.family) + "," +
               to_string(cell.config.features) + ",";
        if (cell.failed) {
            out += "failed,,," + csv_safe(cell.error) + "\n";
            continue;
        }
        out += "ok," + format_double(cell.mean_rmse) + ",";
        for (std::size_t f = 0; f < cell.fold_rmse.size(); ++f) {
            if (f)
                out += ';';
            out += format_double(cell.fold_rmse[f]);
        }
        out += ",\n";
    }
    write_file_atomic(path, out);
}

void save_importance(const FeatureImportance& importance,
                     const std::filesystem::path& path) {
    std::vector<std::size_t> order(importance.names.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         return importance.scores[a] > importance.scores[b];
                     });
    std::string out = "rank,feature,score\n";
    for (std::size_t r = 0; r < order.size(); ++r)
        out += std::to_string(r + 1) + "," + importance.names[order[r]] +
               "," + format_double(importance.scores[order[r]]) + "\n";
    write_file_atomic(path, out);
}

double naive_forecast(AuctionHour t,
                      const std::map<AuctionHour, double>& history,
                      const CalendarConfig& cal) {
    const DayType type = classify_day(t.date, cal);
    if (type == DayType::workday && t.date.weekday() != 1) {
        const auto it = history.find({t.date.plus_days(-1), t.hour});
        if (it == history.end())
            throw MissingHistory("no price for the day before " + t.str());
        return it->second;
    }
    for (int back = 7; back >= 1; --back) {
        const Date e = t.date.plus_days(-back);
        if (classify_day(e, cal) != type)
            continue;
        const auto it = history.find({e, t.hour});
        if (it != history.end())
            return it->second;
    }
    throw MissingHistory("no prior " + std::string(day_type_name(type)) +
                         " with a price within a week of " + t.str());
}

namespace {

MetricReport metrics_or_empty(const std::vector<double>& pred,
                              const std::vector<double>& truth) {
    if (pred.empty())
        return {};
    return compute_metrics(pred, truth);
}

} // namespace

std::vector<SuiteRow>
evaluate_suite(const FeatureMatrix& fm, const DataSplit& split,
               const std::vector<std::pair<std::string, const Model*>>& models,
               const CalendarConfig& cal) {
    std::map<AuctionHour, double> history;
    for (std::size_t i = 0; i < fm.rows(); ++i)
        history.emplace(fm.hours[i], fm.y(static_cast<Eigen::Index>(i)));

    std::vector<SuiteRow> rows;
    const std::vector<std::pair<std::string, const std::vector<int>*>> halves =
        {{"train", &split.train_rows}, {"test", &split.test_rows}};

    for (const auto& [half, row_idx] : halves) {
        std::vector<double> pred, truth;
        for (int i : *row_idx) {
            const AuctionHour t = fm.hours[static_cast<std::size_t>(i)];
            try {
                const double p = naive_forecast(t, history, cal);
                pred.push_back(p);
                truth.push_back(fm.y(i));
            } catch (const MissingHistory&) {
                continue;
            }
        }
        rows.push_back({"naive", half, metrics_or_empty(pred, truth)});
    }

    for (const auto& [name, model] : models) {
        const std::vector<int> cols =
            name_indices(fm.names, model->feature_names);
        for (const auto& [half, row_idx] : halves) {
            if (row_idx->empty()) {
                rows.push_back({name, half, {}});
                continue;
            }
            auto [X, y] = materialize(fm, *row_idx, cols);
            const Eigen::VectorXd p = model->predict(X);
            rows.push_back(
                {name, half,
                 compute_metrics(
                     std::span<const double>(p.data(),
                                             static_cast<std::size_t>(
                                                 p.size())),
                     std::span<const double>(y.data(),
                                             static_cast<std::size_t>(
                                                 y.size())))});
        }
    }
    return rows;
}

void save_comparison(const std::vector<SuiteRow>& rows,
                     const std::filesystem::path& path) {
    std::string out = "model,split,n,rmse,mae,mdape,n_excluded_mdape\n";
    for (const auto& row : rows) {
        out += row.model + "," + row.split + "," +
               std::to_string(row.metrics.n) + "," +
               format_double(row.metrics.rmse) + "," +
               format_double(row.metrics.mae) + "," +
               format_double(row.metrics.mdape) + "," +
               std::to_string(row.metrics.n_excluded) + "\n";
    }
    write_file_atomic(path, out);
}

} // namespace obpf
