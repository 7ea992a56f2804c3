#include "obpf/models/mlp.hpp"

#include <cmath>

#include "model_json.hpp"
#include "obpf/rng.hpp"

namespace obpf {

namespace {

constexpr std::uint64_t init_tag = 0x696e6974;
constexpr std::uint64_t epoch_tag = 0x65706f63;

Eigen::MatrixXd activate(const Eigen::MatrixXd& Y, Activation a) {
    switch (a) {
    case Activation::tanh_fn: return Y.array().tanh();
    case Activation::relu: return Y.cwiseMax(0.0);
    case Activation::identity: return Y;
    }
    return Y;
}

// derivative of the activation wrt its input, from input Y and output H
Eigen::MatrixXd activation_grad(const Eigen::MatrixXd& Y,
                                const Eigen::MatrixXd& H, Activation a) {
    switch (a) {
    case Activation::tanh_fn: return 1.0 - H.array().square();
    case Activation::relu:
        return (Y.array() > 0.0).cast<double>();
    case Activation::identity:
        return Eigen::MatrixXd::Ones(Y.rows(), Y.cols());
    }
    return Eigen::MatrixXd::Ones(Y.rows(), Y.cols());
}

struct LayerCache {
    Eigen::MatrixXd A_in; // dense input
    Eigen::MatrixXd Z;    // dense output
    Eigen::RowVectorXd mu, var;
    Eigen::MatrixXd Zhat; // normalized dense output
    Eigen::MatrixXd Y;    // activation input
    Eigen::MatrixXd H;    // activation output
};

struct Gradients {
    std::vector<Eigen::MatrixXd> W;
    std::vector<Eigen::VectorXd> b;
    std::vector<Eigen::VectorXd> gamma, beta;
};

// Training-mode forward. Masks may be empty (no dropout); when
// update_running is set the batch statistics feed the running averages.
Eigen::VectorXd forward_train(MlpCore& net, const Eigen::MatrixXd& X,
                              const std::vector<Eigen::MatrixXd>& masks,
                              bool update_running,
                              std::vector<LayerCache>& caches) {
    const std::size_t L = net.hidden.size();
    caches.assign(L + 1, {});
    Eigen::MatrixXd A = X;
    for (std::size_t l = 0; l < L; ++l) {
        LayerCache& c = caches[l];
        c.A_in = A;
        c.Z = (A * net.dense[l].W.transpose()).rowwise() +
              net.dense[l].b.transpose();
        if (net.use_batch_norm) {
            MlpCore::BatchNorm& norm = net.bn[l];
            c.mu = c.Z.colwise().mean();
            const Eigen::MatrixXd centered = c.Z.rowwise() - c.mu;
            c.var = centered.array().square().colwise().mean();
            const Eigen::RowVectorXd denom =
                (c.var.array() + MlpCore::bn_eps).sqrt();
            c.Zhat = centered.array().rowwise() / denom.array();
            c.Y = (c.Zhat.array().rowwise() *
                   norm.gamma.transpose().array())
                      .rowwise() +
                  norm.beta.transpose().array();
            if (update_running) {
                norm.run_mean = MlpCore::bn_momentum * norm.run_mean +
                                (1.0 - MlpCore::bn_momentum) *
                                    c.mu.transpose();
                norm.run_var = MlpCore::bn_momentum * norm.run_var +
                               (1.0 - MlpCore::bn_momentum) *
                                   c.var.transpose();
            }
        } else {
            c.Y = c.Z;
        }
        c.H = activate(c.Y, net.activation);
        A = c.H;
        if (!masks.empty() && masks[l].size() > 0)
            A = A.cwiseProduct(masks[l]);
    }
    caches[L].A_in = A;
    return (A * net.dense[L].W.transpose()).rowwise() +
           net.dense[L].b.transpose();
}

// Backward pass for mean squared error; dyhat = 2 (yhat - y) / B.
void backward(MlpCore& net, const std::vector<LayerCache>& caches,
              const std::vector<Eigen::MatrixXd>& masks,
              const Eigen::VectorXd& dyhat, Gradients& g) {
    const std::size_t L = net.hidden.size();
    g.W.assign(L + 1, {});
    g.b.assign(L + 1, {});
    g.gamma.assign(net.use_batch_norm ? L : 0, {});
    g.beta.assign(net.use_batch_norm ? L : 0, {});

    g.W[L] = dyhat.transpose() * caches[L].A_in;
    g.b[L] = Eigen::VectorXd::Constant(1, dyhat.sum());
    Eigen::MatrixXd dA = dyhat * net.dense[L].W; // B x h_L

    for (std::size_t l = L; l-- > 0;) {
        const LayerCache& c = caches[l];
        if (!masks.empty() && masks[l].size() > 0)
            dA = dA.cwiseProduct(masks[l]);
        Eigen::MatrixXd dY =
            dA.cwiseProduct(activation_grad(c.Y, c.H, net.activation));
        Eigen::MatrixXd dZ;
        if (net.use_batch_norm) {
            const double B = static_cast<double>(c.Z.rows());
            const MlpCore::BatchNorm& norm = net.bn[l];
            g.gamma[l] = dY.cwiseProduct(c.Zhat).colwise().sum().transpose();
            g.beta[l] = dY.colwise().sum().transpose();
            const Eigen::RowVectorXd inv_sd =
                (c.var.array() + MlpCore::bn_eps).rsqrt();
            const Eigen::MatrixXd dZhat =
                dY.array().rowwise() * norm.gamma.transpose().array();
            const Eigen::MatrixXd centered = c.Z.rowwise() - c.mu;
            const Eigen::RowVectorXd dvar =
                (dZhat.cwiseProduct(centered).colwise().sum().array() *
                 (-0.5) * inv_sd.array().cube());
            const Eigen::RowVectorXd dmu =
                (dZhat.colwise().sum().array() * -inv_sd.array()) +
                dvar.array() * (-2.0 / B) * centered.colwise().sum().array();
            dZ = (dZhat.array().rowwise() * inv_sd.array()) +
                 (centered.array().rowwise() * dvar.array()) * (2.0 / B);
            dZ = dZ.rowwise() + (dmu / B);
        } else {
            dZ = std::move(dY);
        }
        g.W[l] = dZ.transpose() * c.A_in;
        g.b[l] = dZ.colwise().sum().transpose();
        dA = dZ * net.dense[l].W;
    }
}

} // namespace

void MlpCore::init(int in_dim, const std::vector<int>& hidden_widths,
                   Activation act, bool batch_norm, std::uint64_t seed) {
    if (in_dim < 1)
        throw Error("mlp: input dimension must be positive");
    input_dim = in_dim;
    hidden = hidden_widths;
    activation = act;
    use_batch_norm = batch_norm;
    dense.clear();
    bn.clear();

    RandomStream rng(derive_seed(seed, init_tag));
    int prev = in_dim;
    const auto make_dense = [&](int out, int in) {
        Dense d;
        d.W.resize(out, in);
        const double s = 1.0 / std::sqrt(static_cast<double>(in));
        for (Eigen::Index r = 0; r < d.W.rows(); ++r)
            for (Eigen::Index c = 0; c < d.W.cols(); ++c)
                d.W(r, c) = rng.uniform(-s, s);
        d.b = Eigen::VectorXd::Zero(out);
        return d;
    };
    for (int width : hidden) {
        dense.push_back(make_dense(width, prev));
        if (use_batch_norm) {
            BatchNorm norm;
            norm.gamma = Eigen::VectorXd::Ones(width);
            norm.beta = Eigen::VectorXd::Zero(width);
            norm.run_mean = Eigen::VectorXd::Zero(width);
            norm.run_var = Eigen::VectorXd::Ones(width);
            bn.push_back(std::move(norm));
        }
        prev = width;
    }
    dense.push_back(make_dense(1, prev));
}

Eigen::VectorXd MlpCore::forward(const Eigen::MatrixXd& X) const {
    if (X.cols() != input_dim)
        throw DimensionMismatch("mlp core expects " +
                                std::to_string(input_dim) + " inputs");
    Eigen::MatrixXd A = X;
    for (std::size_t l = 0; l < hidden.size(); ++l) {
        Eigen::MatrixXd Z =
            (A * dense[l].W.transpose()).rowwise() + dense[l].b.transpose();
        if (use_batch_norm) {
            const BatchNorm& norm = bn[l];
            const Eigen::RowVectorXd denom =
                (norm.run_var.transpose().array() + bn_eps).sqrt();
            Z = (Z.rowwise() - norm.run_mean.transpose()).array().rowwise() /
                denom.array();
            Z = (Z.array().rowwise() * norm.gamma.transpose().array())
                    .rowwise() +
                norm.beta.transpose().array();
        }
        A = activate(Z, activation);
    }
    return (A * dense.back().W.transpose()).rowwise() +
           dense.back().b.transpose();
}

Eigen::Index MlpCore::param_count() const {
    Eigen::Index n = 0;
    for (const auto& d : dense)
        n += d.W.size() + d.b.size();
    for (const auto& norm : bn)
        n += norm.gamma.size() + norm.beta.size();
    return n;
}

Eigen::VectorXd MlpCore::flat_params() const {
    Eigen::VectorXd theta(param_count());
    Eigen::Index at = 0;
    const auto put = [&](const double* data, Eigen::Index n) {
        theta.segment(at, n) = Eigen::Map<const Eigen::VectorXd>(data, n);
        at += n;
    };
    for (std::size_t l = 0; l < dense.size(); ++l) {
        put(dense[l].W.data(), dense[l].W.size());
        put(dense[l].b.data(), dense[l].b.size());
        if (use_batch_norm && l < bn.size()) {
            put(bn[l].gamma.data(), bn[l].gamma.size());
            put(bn[l].beta.data(), bn[l].beta.size());
        }
    }
    return theta;
}

void MlpCore::set_flat_params(const Eigen::VectorXd& theta) {
    if (theta.size() != param_count())
        throw DimensionMismatch("mlp: wrong flat parameter size");
    Eigen::Index at = 0;
    const auto take = [&](double* data, Eigen::Index n) {
        Eigen::Map<Eigen::VectorXd>(data, n) = theta.segment(at, n);
        at += n;
    };
    for (std::size_t l = 0; l < dense.size(); ++l) {
        take(dense[l].W.data(), dense[l].W.size());
        take(dense[l].b.data(), dense[l].b.size());
        if (use_batch_norm && l < bn.size()) {
            take(bn[l].gamma.data(), bn[l].gamma.size());
            take(bn[l].beta.data(), bn[l].beta.size());
        }
    }
}

namespace {

Eigen::VectorXd flatten_grads(const MlpCore& net, const Gradients& g) {
    Eigen::VectorXd flat(net.param_count());
    Eigen::Index at = 0;
    const auto put = [&](const Eigen::MatrixXd& m) {
        flat.segment(at, m.size()) =
            Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
        at += m.size();
    };
    for (std::size_t l = 0; l < net.dense.size(); ++l) {
        put(g.W[l]);
        put(g.b[l]);
        if (net.use_batch_norm && l < g.gamma.size()) {
            put(g.gamma[l]);
            put(g.beta[l]);
        }
    }
    return flat;
}

} // namespace

double MlpCore::loss_and_grad(const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y,
                              Eigen::VectorXd& grad) {
    if (X.rows() != y.size())
        throw DimensionMismatch("mlp: batch rows disagree");
    std::vector<LayerCache> caches;
    const std::vector<Eigen::MatrixXd> no_masks;
    const Eigen::VectorXd yhat =
        forward_train(*this, X, no_masks, false, caches);
    const Eigen::VectorXd diff = yhat - y;
    const double B = static_cast<double>(X.rows());
    const double loss = diff.squaredNorm() / B;
    Gradients g;
    backward(*this, caches, no_masks, (2.0 / B) * diff, g);
    grad = flatten_grads(*this, g);
    return loss;
}

Eigen::VectorXd MlpModel::predict(const Eigen::MatrixXd& X) const {
    check_width(X);
    return (core.forward(standardizer.apply(X)).array() * y_scale) + y_mean;
}

ModelPtr mlp_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 const std::vector<std::string>& names,
                 const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    if (X.rows() != y.size())
        throw DimensionMismatch("mlp: rows of X and y disagree");
    if (X.rows() < 1 || X.cols() < 1)
        throw Error("mlp: empty training data");
    if (static_cast<std::size_t>(X.cols()) != names.size())
        throw DimensionMismatch("mlp: names do not match columns");
    const MlpParams& params = config.mlp;

    auto model = std::make_unique<MlpModel>();
    model->feature_names = names;
    model->config = config;
    model->seed = seed;
    model->standardizer = Standardizer::fit(X);
    model->y_mean = y.mean();
    const double y_sd = std::sqrt(
        (y.array() - model->y_mean).square().sum() / y.size());
    model->y_scale = y_sd < 1e-12 ? 1.0 : y_sd;

    const Eigen::MatrixXd Xs = model->standardizer.apply(X);
    const Eigen::VectorXd ys =
        (y.array() - model->y_mean) / model->y_scale;

    MlpCore& net = model->core;
    net.init(static_cast<int>(X.cols()), params.layers, params.activation,
             params.batch_norm, seed);

    std::vector<double> rates = params.dropout;
    rates.resize(params.layers.size(), 0.0);

    const std::size_t n = static_cast<std::size_t>(X.rows());
    const std::size_t batch =
        std::min<std::size_t>(n, static_cast<std::size_t>(params.batch_size));
    const double lr = params.learning_rate > 0.0
                          ? params.learning_rate
                          : default_learning_rate(params.optimizer);

    Eigen::VectorXd theta = net.flat_params();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
    long step = 0;
    constexpr double beta1 = 0.9, beta2 = 0.999, rho = 0.9, eps = 1e-8;

    std::vector<std::size_t> order(n);
    std::vector<Eigen::MatrixXd> masks(params.layers.size());
    std::vector<LayerCache> caches;
    Gradients grads;

    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        RandomStream rng(derive_seed(seed, epoch_tag,
                                     static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = 0; i < n; ++i)
            order[i] = i;
        for (std::size_t i = n; i-- > 1;)
            std::swap(order[i], order[rng.index(i + 1)]);

        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t b = std::min(batch, n - start);
            Eigen::MatrixXd Xb(b, Xs.cols());
            Eigen::VectorXd yb(b);
            for (std::size_t i = 0; i < b; ++i) {
                Xb.row(static_cast<Eigen::Index>(i)) =
                    Xs.row(static_cast<Eigen::Index>(order[start + i]));
                yb(static_cast<Eigen::Index>(i)) =
                    ys(static_cast<Eigen::Index>(order[start + i]));
            }
            for (std::size_t l = 0; l < rates.size(); ++l) {
                if (rates[l] <= 0.0) {
                    masks[l].resize(0, 0);
                    continue;
                }
                const double keep = 1.0 - rates[l];
                masks[l].resize(static_cast<Eigen::Index>(b),
                                net.hidden[l]);
                for (Eigen::Index r = 0; r < masks[l].rows(); ++r)
                    for (Eigen::Index c = 0; c < masks[l].cols(); ++c)
                        masks[l](r, c) =
                            rng.uniform() < keep ? 1.0 / keep : 0.0;
            }

            const Eigen::VectorXd yhat =
                forward_train(net, Xb, masks, true, caches);
            const Eigen::VectorXd diff = yhat - yb;
            const double loss =
                diff.squaredNorm() / static_cast<double>(b);
            if (!std::isfinite(loss))
                throw Diverged("mlp '" + config.id + "': loss diverged at epoch " +
                               std::to_string(epoch));
            backward(net, caches, masks,
                     (2.0 / static_cast<double>(b)) * diff, grads);
            const Eigen::VectorXd g = flatten_grads(net, grads);

            ++step;
            switch (params.optimizer) {
            case Optimizer::sgd:
                theta -= lr * g;
                break;
            case Optimizer::rmsprop:
                v = rho * v + (1.0 - rho) * g.cwiseProduct(g);
                theta -=
                    (lr * g.array() / (v.array().sqrt() + eps)).matrix();
                break;
            case Optimizer::adam: {
                m = beta1 * m + (1.0 - beta1) * g;
                v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
                const double mc = 1.0 - std::pow(beta1, step);
                const double vc = 1.0 - std::pow(beta2, step);
                theta -= (lr * (m.array() / mc) /
                          ((v.array() / vc).sqrt() + eps))
                             .matrix();
                break;
            }
            }
            net.set_flat_params(theta);
        }
        if (!theta.allFinite())
            throw Diverged("mlp '" + config.id +
                           "': parameters diverged at epoch " +
                           std::to_string(epoch));
    }
    model->epochs_run = params.epochs;

    const Eigen::VectorXd fitted = model->predict(X);
    model->final_train_rmse =
        std::sqrt((fitted - y).squaredNorm() / X.rows());
    return model;
}

namespace detail {

json mlp_params_json(const MlpModel& model) {
    json p;
    p["input_dim"] = model.core.input_dim;
    p["hidden"] = model.core.hidden;
    p["activation"] = to_string(model.core.activation);
    p["batch_norm"] = model.core.use_batch_norm;
    json layers = json::array();
    for (const auto& d : model.core.dense)
        layers.push_back(
            {{"W", matrix_to_json(d.W)}, {"b", vector_to_json(d.b)}});
    p["dense"] = std::move(layers);
    if (model.core.use_batch_norm) {
        json norms = json::array();
        for (const auto& norm : model.core.bn)
            norms.push_back({{"gamma", vector_to_json(norm.gamma)},
                             {"beta", vector_to_json(norm.beta)},
                             {"run_mean", vector_to_json(norm.run_mean)},
                             {"run_var", vector_to_json(norm.run_var)}});
        p["batch_norm_state"] = std::move(norms);
    }
    p["x_mean"] = vector_to_json(model.standardizer.mean);
    p["x_scale"] = vector_to_json(model.standardizer.scale);
    p["y_mean"] = model.y_mean;
    p["y_scale"] = model.y_scale;
    p["epochs_run"] = model.epochs_run;
    return p;
}

ModelPtr load_mlp_model(const json& j) {
    auto model = std::make_unique<MlpModel>();
    read_envelope(j, *model);
    const auto& p = j.at("params");
    MlpCore& net = model->core;
    net.input_dim = p.at("input_dim").get<int>();
    net.hidden = p.at("hidden").get<std::vector<int>>();
    net.activation =
        activation_from_string(p.at("activation").get<std::string>());
    net.use_batch_norm = p.at("batch_norm").get<bool>();
    for (const auto& d : p.at("dense")) {
        MlpCore::Dense dense;
        dense.W = matrix_from_json(d.at("W"));
        dense.b = vector_from_json(d.at("b"));
        if (dense.b.size() != dense.W.rows())
            throw MalformedRow("mlp model: bias width mismatch");
        net.dense.push_back(std::move(dense));
    }
    if (net.dense.size() != net.hidden.size() + 1)
        throw MalformedRow("mlp model: layer count mismatch");
    if (net.use_batch_norm) {
        for (const auto& b : p.at("batch_norm_state")) {
            MlpCore::BatchNorm norm;
            norm.gamma = vector_from_json(b.at("gamma"));
            norm.beta = vector_from_json(b.at("beta"));
            norm.run_mean = vector_from_json(b.at("run_mean"));
            norm.run_var = vector_from_json(b.at("run_var"));
            net.bn.push_back(std::move(norm));
        }
        if (net.bn.size() != net.hidden.size())
            throw MalformedRow("mlp model: batch norm count mismatch");
    }
    model->standardizer.mean = vector_from_json(p.at("x_mean"));
    model->standardizer.scale = vector_from_json(p.at("x_scale"));
    model->y_mean = p.at("y_mean").get<double>();
    model->y_scale = p.at("y_scale").get<double>();
    model->epochs_run = p.at("epochs_run").get<int>();
    if (model->standardizer.mean.size() !=
        static_cast<Eigen::Index>(model->feature_names.size()))
        throw MalformedRow("mlp model: standardizer width mismatch");
    return model;
}

} // namespace detail

} // namespace obpf
