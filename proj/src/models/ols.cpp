#include "obpf/models/ols.hpp"

#include <cmath>

#include "model_json.hpp"

namespace obpf {

Eigen::VectorXd OlsModel::predict(const Eigen::MatrixXd& X) const {
    check_width(X);
    return (standardizer.apply(X) * beta).array() + intercept;
}

OlsModel::Coefficients OlsModel::coefficients() const {
    Coefficients c;
    c.slopes = beta.array() / standardizer.scale.array();
    c.intercept =
        intercept - c.slopes.dot(standardizer.mean);
    return c;
}

ModelPtr ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const std::vector<std::string>& names,
                 const ModelConfig& config) {
    if (X.rows() != y.size())
        throw DimensionMismatch("ols: rows of X and y disagree");
    if (X.rows() == 0 || X.cols() == 0)
        throw Error("ols: empty training data");
    if (static_cast<std::size_t>(X.cols()) != names.size())
        throw DimensionMismatch("ols: names do not match columns");

    auto model = std::make_unique<OlsModel>();
    model->feature_names = names;
    model->config = config;
    model->standardizer = Standardizer::fit(X);

    // columns with essentially no variation stay out of the solve
    const Eigen::VectorXd sd =
        ((X.rowwise() - X.colwise().mean()).array().square().colwise().sum() /
         X.rows())
            .sqrt();
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < X.cols(); ++j)
        if (sd(j) >= 1e-12)
            active.push_back(j);

    model->intercept = y.mean();
    model->beta = Eigen::VectorXd::Zero(X.cols());

    if (!active.empty()) {
        const Eigen::MatrixXd Z = model->standardizer.apply(X);
        Eigen::MatrixXd Za(X.rows(),
                           static_cast<Eigen::Index>(active.size()));
        for (std::size_t k = 0; k < active.size(); ++k)
            Za.col(static_cast<Eigen::Index>(k)) = Z.col(active[k]);
        const Eigen::VectorXd yc = y.array() - model->intercept;

        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Za);
        Eigen::VectorXd b;
        if (qr.rank() < Za.cols()) {
            model->ridge_fallback = true;
            const double lambda = 1e-8;
            Eigen::MatrixXd gram = Za.transpose() * Za;
            gram.diagonal().array() += lambda;
            b = gram.ldlt().solve(Za.transpose() * yc);
        } else {
            b = qr.solve(yc);
        }
        for (std::size_t k = 0; k < active.size(); ++k)
            model->beta(active[k]) = b(static_cast<Eigen::Index>(k));
    }

    const Eigen::VectorXd fitted = model->predict(X);
    model->final_train_rmse =
        std::sqrt((fitted - y).squaredNorm() / X.rows());
    return model;
}

namespace detail {

json ols_params_json(const OlsModel& model) {
    json p;
    p["mean"] = vector_to_json(model.standardizer.mean);
    p["scale"] = vector_to_json(model.standardizer.scale);
    p["beta"] = vector_to_json(model.beta);
    p["intercept"] = model.intercept;
    p["ridge_fallback"] = model.ridge_fallback;
    return p;
}

ModelPtr load_ols_model(const json& j) {
    auto model = std::make_unique<OlsModel>();
    read_envelope(j, *model);
    const auto& p = j.at("params");
    model->standardizer.mean = vector_from_json(p.at("mean"));
    model->standardizer.scale = vector_from_json(p.at("scale"));
    model->beta = vector_from_json(p.at("beta"));
    model->intercept = p.at("intercept").get<double>();
    model->ridge_fallback = p.at("ridge_fallback").get<bool>();
    if (model->beta.size() !=
        static_cast<Eigen::Index>(model->feature_names.size()))
        throw MalformedRow("ols model: beta width mismatch");
    return model;
}

} // namespace detail

} // namespace obpf
