#pragma once

#include "obpf/models/common.hpp"

namespace obpf {

// Feed-forward core operating on already standardized data, samples as
// rows. Hidden layer order: linear, optional batch norm, activation,
// inverted dropout. The output layer is plain linear.
class MlpCore {
  public:
    struct Dense {
        Eigen::MatrixXd W; // out x in
        Eigen::VectorXd b;
    };
    struct BatchNorm {
        Eigen::VectorXd gamma, beta;
        Eigen::VectorXd run_mean, run_var;
    };

    static constexpr double bn_eps = 1e-5;
    static constexpr double bn_momentum = 0.99;

    int input_dim = 0;
    std::vector<int> hidden;
    Activation activation = Activation::tanh_fn;
    bool use_batch_norm = false;

    std::vector<Dense> dense;   // hidden layers plus the output layer
    std::vector<BatchNorm> bn;  // one per hidden layer when enabled

    // Weights uniform in +-1/sqrt(fan_in), biases zero, batch norm identity.
    void init(int input_dim, const std::vector<int>& hidden_widths,
              Activation act, bool batch_norm, std::uint64_t seed);

    // Inference: running statistics, no dropout.
    Eigen::VectorXd forward(const Eigen::MatrixXd& X) const;

    // Mean squared error and its gradient for one batch in training mode
    // (batch statistics, dropout off), parameters flattened in the order of
    // flat_params(). Exposed so the backward pass can be checked against
    // finite differences.
    double loss_and_grad(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         Eigen::VectorXd& grad);

    Eigen::VectorXd flat_params() const;
    void set_flat_params(const Eigen::VectorXd& theta);
    Eigen::Index param_count() const;
};

class MlpModel : public Model {
  public:
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override;
    ModelFamily family() const override { return ModelFamily::mlp; }

    MlpCore core;
    Standardizer standardizer; // inputs
    double y_mean = 0.0;       // target standardization
    double y_scale = 1.0;
    int epochs_run = 0;
};

// Throws Diverged when the loss or a parameter stops being finite.
ModelPtr mlp_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const std::vector<std::string>& names,
                 const ModelConfig& config, std::uint64_t seed);

} // namespace obpf
