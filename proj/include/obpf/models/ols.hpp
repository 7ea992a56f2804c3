#pragma once

#include "obpf/models/common.hpp"

namespace obpf {

// Ordinary least squares on internally standardized features. Constant
// columns are skipped. When the design matrix is rank deficient the solver
// falls back to a tiny ridge penalty and flags it.
class OlsModel : public Model {
  public:
    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const override;
    ModelFamily family() const override { return ModelFamily::ols; }

    struct Coefficients {
        double intercept = 0.0;
        Eigen::VectorXd slopes; // original feature space, one per feature
    };
    Coefficients coefficients() const;

    Standardizer standardizer;
    Eigen::VectorXd beta; // standardized space, zero for skipped columns
    double intercept = 0.0;
    bool ridge_fallback = false;
};

ModelPtr ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const std::vector<std::string>& names,
                 const ModelConfig& config);

} // namespace obpf
