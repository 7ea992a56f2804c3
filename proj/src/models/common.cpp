#include "obpf/models/common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "model_json.hpp"
#include "obpf/models/forest.hpp"
#include "obpf/models/mlp.hpp"
#include "obpf/models/ols.hpp"
#include "obpf/textio.hpp"

namespace obpf {

using detail::json;

std::string to_string(ModelFamily f) {
    switch (f) {
    case ModelFamily::ols: return "ols";
    case ModelFamily::random_forest: return "random_forest";
    case ModelFamily::mlp: return "mlp";
    }
    return "?";
}

std::string to_string(Activation a) {
    switch (a) {
    case Activation::tanh_fn: return "tanh";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
    }
    return "?";
}

std::string to_string(Optimizer o) {
    switch (o) {
    case Optimizer::sgd: return "sgd";
    case Optimizer::rmsprop: return "rmsprop";
    case Optimizer::adam: return "adam";
    }
    return "?";
}

std::string to_string(FeatureMode m) {
    switch (m) {
    case FeatureMode::all: return "all";
    case FeatureMode::no_curve: return "no_curve";
    case FeatureMode::selected: return "selected";
    }
    return "?";
}

ModelFamily family_from_string(const std::string& s) {
    if (s == "ols") return ModelFamily::ols;
    if (s == "random_forest") return ModelFamily::random_forest;
    if (s == "mlp") return ModelFamily::mlp;
    throw ConfigError("unknown model family '" + s + "'");
}

Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::tanh_fn;
    if (s == "relu") return Activation::relu;
    if (s == "identity") return Activation::identity;
    throw ConfigError("unknown activation '" + s + "'");
}

Optimizer optimizer_from_string(const std::string& s) {
    if (s == "sgd") return Optimizer::sgd;
    if (s == "rmsprop") return Optimizer::rmsprop;
    if (s == "adam") return Optimizer::adam;
    throw ConfigError("unknown optimizer '" + s + "'");
}

FeatureMode feature_mode_from_string(const std::string& s) {
    if (s == "all") return FeatureMode::all;
    if (s == "no_curve") return FeatureMode::no_curve;
    if (s == "selected") return FeatureMode::selected;
    throw ConfigError("unknown feature mode '" + s + "'");
}

double default_learning_rate(Optimizer o) {
    switch (o) {
    case Optimizer::sgd: return 0.01;
    case Optimizer::rmsprop: return 0.001;
    case Optimizer::adam: return 0.001;
    }
    return 0.001;
}

void ModelConfig::validate() const {
    if (id.empty())
        throw ConfigError("model config without id");
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '_' || c == '-';
        if (!ok)
            throw ConfigError("config id '" + id +
                              "' may only use letters, digits, '_' and '-'");
    }
    if (features == FeatureMode::selected && n_top_features < 1)
        throw ConfigError("config '" + id +
                          "': selected features need n_top_features >= 1");
    switch (family) {
    case ModelFamily::ols:
        break;
    case ModelFamily::random_forest:
        if (rf.n_trees < 1)
            throw ConfigError("config '" + id + "': n_trees must be >= 1");
        if (rf.feature_fraction <= 0.0 || rf.feature_fraction > 1.0)
            throw ConfigError("config '" + id +
                              "': feature_fraction must be in (0, 1]");
        if (rf.min_node_fraction < 0.0 || rf.min_node_fraction > 1.0)
            throw ConfigError("config '" + id +
                              "': min_node_fraction must be in [0, 1]");
        break;
    case ModelFamily::mlp:
        for (int w : mlp.layers)
            if (w < 1)
                throw ConfigError("config '" + id +
                                  "': hidden widths must be >= 1");
        if (!mlp.dropout.empty() && mlp.dropout.size() != mlp.layers.size())
            throw ConfigError("config '" + id +
                              "': dropout list must match hidden layers");
        for (double r : mlp.dropout)
            if (r < 0.0 || r >= 1.0)
                throw ConfigError("config '" + id +
                                  "': dropout rates must be in [0, 1)");
        if (mlp.epochs < 1 || mlp.batch_size < 1)
            throw ConfigError("config '" + id +
                              "': epochs and batch_size must be >= 1");
        if (mlp.learning_rate < 0.0)
            throw ConfigError("config '" + id +
                              "': learning rate must be positive");
        break;
    }
}

std::vector<std::string> select_features(const FeatureImportance& importance,
                                         int n) {
    if (importance.names.size() != importance.scores.size())
        throw DimensionMismatch("importance names and scores disagree");
    if (n < 1 || static_cast<std::size_t>(n) > importance.names.size())
        throw ConfigError("cannot select " + std::to_string(n) + " of " +
                          std::to_string(importance.names.size()) +
                          " features");
    std::vector<std::size_t> order(importance.names.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                         return importance.scores[a] > importance.scores[b];
                     });
    order.resize(static_cast<std::size_t>(n));
    std::sort(order.begin(), order.end());
    std::vector<std::string> names;
    names.reserve(order.size());
    for (std::size_t idx : order)
        names.push_back(importance.names[idx]);
    return names;
}

void Model::check_width(const Eigen::MatrixXd& X) const {
    if (static_cast<std::size_t>(X.cols()) != feature_names.size())
        throw DimensionMismatch(
            "model expects " + std::to_string(feature_names.size()) +
            " features, got " + std::to_string(X.cols()));
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
    if (X.rows() == 0)
        throw Error("cannot standardize an empty matrix");
    Standardizer s;
    s.mean = X.colwise().mean();
    const Eigen::MatrixXd centered = X.rowwise() - s.mean.transpose();
    s.scale =
        (centered.array().square().colwise().sum() / X.rows()).sqrt();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j)
        if (s.scale(j) < 1e-12)
            s.scale(j) = 1.0; // constant column, leave it centered only
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
    if (X.cols() != mean.size())
        throw DimensionMismatch("standardizer width mismatch");
    return (X.rowwise() - mean.transpose()).array().rowwise() /
           scale.transpose().array();
}

namespace detail {

json config_to_json(const ModelConfig& config) {
    json j;
    j["id"] = config.id;
    j["family"] = to_string(config.family);
    j["features"] = to_string(config.features);
    if (config.features == FeatureMode::selected)
        j["n_top_features"] = config.n_top_features;
    if (config.family == ModelFamily::random_forest) {
        j["rf"] = {{"n_trees", config.rf.n_trees},
                   {"feature_fraction", config.rf.feature_fraction},
                   {"min_node_fraction", config.rf.min_node_fraction}};
    }
    if (config.family == ModelFamily::mlp) {
        j["mlp"] = {{"layers", config.mlp.layers},
                    {"activation", to_string(config.mlp.activation)},
                    {"optimizer", to_string(config.mlp.optimizer)},
                    {"epochs", config.mlp.epochs},
                    {"batch_size", config.mlp.batch_size},
                    {"dropout", config.mlp.dropout},
                    {"batch_norm", config.mlp.batch_norm},
                    {"learning_rate", config.mlp.learning_rate}};
    }
    return j;
}

ModelConfig config_from_json(const json& j, bool require_id) {
    ModelConfig config;
    try {
        if (j.contains("id"))
            config.id = j.at("id").get<std::string>();
        else if (require_id)
            throw ConfigError("model config without id");
        config.family =
            family_from_string(j.at("family").get<std::string>());
        if (j.contains("features"))
            config.features =
                feature_mode_from_string(j.at("features").get<std::string>());
        if (j.contains("n_top_features"))
            config.n_top_features = j.at("n_top_features").get<int>();
        if (j.contains("rf")) {
            const auto& r = j.at("rf");
            if (r.contains("n_trees"))
                config.rf.n_trees = r.at("n_trees").get<int>();
            if (r.contains("feature_fraction"))
                config.rf.feature_fraction =
                    r.at("feature_fraction").get<double>();
            if (r.contains("min_node_fraction"))
                config.rf.min_node_fraction =
                    r.at("min_node_fraction").get<double>();
        }
        if (j.contains("mlp")) {
            const auto& m = j.at("mlp");
            if (m.contains("layers"))
                config.mlp.layers = m.at("layers").get<std::vector<int>>();
            if (m.contains("activation"))
                config.mlp.activation = activation_from_string(
                    m.at("activation").get<std::string>());
            if (m.contains("optimizer"))
                config.mlp.optimizer = optimizer_from_string(
                    m.at("optimizer").get<std::string>());
            if (m.contains("epochs"))
                config.mlp.epochs = m.at("epochs").get<int>();
            if (m.contains("batch_size"))
                config.mlp.batch_size = m.at("batch_size").get<int>();
            if (m.contains("dropout"))
                config.mlp.dropout =
                    m.at("dropout").get<std::vector<double>>();
            if (m.contains("batch_norm"))
                config.mlp.batch_norm = m.at("batch_norm").get<bool>();
            if (m.contains("learning_rate"))
                config.mlp.learning_rate =
                    m.at("learning_rate").get<double>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad model config: ") + e.what());
    }
    if (config.family == ModelFamily::mlp && config.mlp.learning_rate == 0.0)
        config.mlp.learning_rate =
            default_learning_rate(config.mlp.optimizer);
    config.validate();
    return config;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        arr.push_back(v(i));
    return arr;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(j.size());
    Eigen::Index i = 0;
    for (const auto& x : j)
        v(i++) = x.get<double>();
    return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols =
        rows == 0 ? 0 : static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    Eigen::Index r = 0;
    for (const auto& row : j) {
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw MalformedRow("ragged matrix in model file");
        Eigen::Index c = 0;
        for (const auto& x : row)
            m(r, c++) = x.get<double>();
        ++r;
    }
    return m;
}

json model_envelope(const Model& model) {
    json j;
    j["format"] = "obpf-model";
    j["format_version"] = 1;
    j["family"] = to_string(model.family());
    j["feature_names"] = model.feature_names;
    j["seed"] = model.seed;
    j["final_train_rmse"] = model.final_train_rmse;
    j["config"] = config_to_json(model.config);
    return j;
}

void read_envelope(const json& j, Model& model) {
    model.feature_names =
        j.at("feature_names").get<std::vector<std::string>>();
    model.seed = j.at("seed").get<std::uint64_t>();
    model.final_train_rmse = j.at("final_train_rmse").get<double>();
    model.config = config_from_json(j.at("config"));
}

json model_params_json(const Model& model) {
    switch (model.family()) {
    case ModelFamily::ols:
        return ols_params_json(dynamic_cast<const OlsModel&>(model));
    case ModelFamily::random_forest:
        return forest_params_json(dynamic_cast<const ForestModel&>(model));
    case ModelFamily::mlp:
        return mlp_params_json(dynamic_cast<const MlpModel&>(model));
    }
    throw Error("unknown model family");
}

} // namespace detail

void save_model(const Model& model, const std::filesystem::path& path) {
    json j = detail::model_envelope(model);
    j["params"] = detail::model_params_json(model);
    write_file_atomic(path, j.dump(2) + "\n");
}

ModelPtr load_model(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw MalformedRow("model file " + path.string() + ": " + e.what());
    }
    try {
        if (j.value("format", std::string()) != "obpf-model")
            throw MalformedRow("model file " + path.string() +
                               ": missing format tag");
        if (j.at("format_version").get<int>() != 1)
            throw MalformedRow("model file " + path.string() +
                               ": unsupported version");
        const ModelFamily family =
            family_from_string(j.at("family").get<std::string>());
        switch (family) {
        case ModelFamily::ols: return detail::load_ols_model(j);
        case ModelFamily::random_forest: return detail::load_forest_model(j);
        case ModelFamily::mlp: return detail::load_mlp_model(j);
        }
        throw MalformedRow("model file " + path.string() +
                           ": unknown family");
    } catch (const json::exception& e) {
        throw MalformedRow("model file " + path.string() + ": " + e.what());
    }
}

ModelPtr fit_model(const ModelConfig& config, const Eigen::MatrixXd& X,
                   const Eigen::VectorXd& y,
                   const std::vector<std::string>& names, std::uint64_t seed,
                   int workers) {
    config.validate();
    switch (config.family) {
    case ModelFamily::ols: {
        ModelPtr model = ols_fit(X, y, names, config);
        model->seed = seed;
        return model;
    }
    case ModelFamily::random_forest:
        return rf_fit(X, y, names, config, seed, workers);
    case ModelFamily::mlp:
        return mlp_fit(X, y, names, config, seed);
    }
    throw Error("unknown model family");
}

std::vector<ModelConfig> load_model_grid(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw MalformedRow("grid file " + path.string() + ": " + e.what());
    }
    const json* arr = nullptr;
    if (j.is_array())
        arr = &j;
    else if (j.is_object() && j.contains("configs") &&
             j.at("configs").is_array())
        arr = &j.at("configs");
    else
        throw MalformedRow("grid file " + path.string() +
                           ": expected an array of configs");
    std::vector<ModelConfig> configs;
    configs.reserve(arr->size());
    for (const auto& item : *arr)
        configs.push_back(detail::config_from_json(item));
    if (configs.empty())
        throw ConfigError("grid file " + path.string() + " has no configs");
    std::set<std::string> ids;
    for (const auto& config : configs)
        if (!ids.insert(config.id).second)
            throw ConfigError("grid file " + path.string() +
                              ": duplicate config id '" + config.id + "'");
    return configs;
}

void save_model_grid(const std::vector<ModelConfig>& configs,
                     const std::filesystem::path& path) {
    json arr = json::array();
    for (const auto& config : configs)
        arr.push_back(detail::config_to_json(config));
    json j;
    j["configs"] = std::move(arr);
    write_file_atomic(path, j.dump(2) + "\n");
}

} // namespace obpf
