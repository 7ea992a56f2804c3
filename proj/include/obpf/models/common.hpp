#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "obpf/errors.hpp"

namespace obpf {

enum class ModelFamily { ols, random_forest, mlp };
enum class Activation { tanh_fn, relu, identity };
enum class Optimizer { sgd, rmsprop, adam };
enum class FeatureMode { all, no_curve, selected };

std::string to_string(ModelFamily f);
std::string to_string(Activation a);
std::string to_string(Optimizer o);
std::string to_string(FeatureMode m);

ModelFamily family_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);
Optimizer optimizer_from_string(const std::string& s);
FeatureMode feature_mode_from_string(const std::string& s);

struct RfParams {
    int n_trees = 1000;
    double feature_fraction = 0.25;  // per-split candidate share, ceil
    double min_node_fraction = 0.01; // nodes of at most this share stay leaves
};

struct MlpParams {
    std::vector<int> layers;     // hidden layer widths; empty = plain linear
    Activation activation = Activation::tanh_fn;
    Optimizer optimizer = Optimizer::adam;
    int epochs = 100;
    int batch_size = 128;
    std::vector<double> dropout; // per hidden layer; empty = all zero
    bool batch_norm = false;
    double learning_rate = 0.0;  // 0 = optimizer default
};

double default_learning_rate(Optimizer o);

struct ModelConfig {
    std::string id;
    ModelFamily family = ModelFamily::ols;
    FeatureMode features = FeatureMode::all;
    int n_top_features = 0; // required when features == selected
    RfParams rf;
    MlpParams mlp;

    void validate() const; // throws ConfigError
};

// Per-feature scores in original column order, summing to one.
struct FeatureImportance {
    std::vector<std::string> names;
    std::vector<double> scores;
};

// Top n features by score, ties broken by original position; the result
// keeps original column order.
std::vector<std::string> select_features(const FeatureImportance& importance,
                                         int n);

class Model {
  public:
    virtual ~Model() = default;

    // X columns must match feature_names in order and count.
    virtual Eigen::VectorXd predict(const Eigen::MatrixXd& X) const = 0;
    virtual ModelFamily family() const = 0;

    std::vector<std::string> feature_names;
    ModelConfig config;
    std::uint64_t seed = 0;
    double final_train_rmse = 0.0;

  protected:
    void check_width(const Eigen::MatrixXd& X) const;
};

using ModelPtr = std::unique_ptr<Model>;

// Versioned JSON on disk; numbers round-trip exactly, so save, load and
// predict is bit-identical to predicting with the in-memory model.
void save_model(const Model& model, const std::filesystem::path& path);
ModelPtr load_model(const std::filesystem::path& path);

ModelPtr fit_model(const ModelConfig& config, const Eigen::MatrixXd& X,
                   const Eigen::VectorXd& y,
                   const std::vector<std::string>& names, std::uint64_t seed,
                   int workers = 1);

// Shared by every trainer: per-column mean and deviation over training rows,
// constant columns kept with unit scale.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    static Standardizer fit(const Eigen::MatrixXd& X);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

// Grid files hold the configs tried by a grid search, as a JSON array or
// under a top-level "configs" key.
std::vector<ModelConfig> load_model_grid(const std::filesystem::path& path);
void save_model_grid(const std::vector<ModelConfig>& configs,
                     const std::filesystem::path& path);

} // namespace obpf
