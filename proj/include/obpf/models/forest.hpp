#pragma once

#include "obpf/models/common.hpp"

namespace obpf {

// Regression random forest: CART trees on bootstrap samples, per-split
// feature subsets, midpoint thresholds, variance-reduction splits.
class ForestModel : public Model {
  public:
    struct Node {
        int feature = -1; // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0; // leaf prediction
        double gain = 0.0;  // SSE reduction of the split
    };
    struct Tree {
        std::vector<Node> nodes; // root at 0
        double predict(const Eigen::VectorXd& x) const;
    };

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override;
    ModelFamily family() const override { return ModelFamily::random_forest; }

    // Gain totals per feature, normalized to sum one; uniform when no tree
    // ever split.
    FeatureImportance importance() const;

    std::vector<Tree> trees;
};

ModelPtr rf_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                const std::vector<std::string>& names,
                const ModelConfig& config, std::uint64_t seed,
                int workers = 1);

} // namespace obpf
