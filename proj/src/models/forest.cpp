#include "obpf/models/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "model_json.hpp"
#include "obpf/parallel.hpp"
#include "obpf/rng.hpp"

namespace obpf {

namespace {

constexpr std::uint64_t tree_tag = 0x74726565; // stream label per tree

struct SplitChoice {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

struct TreeBuilder {
    const Eigen::MatrixXd& X;
    const Eigen::VectorXd& y;
    const RfParams& params;
    RandomStream rng;

    std::vector<int> indices;           // bootstrap rows, partitioned in place
    std::vector<int> feature_pool;      // for per-split subsampling
    std::vector<std::pair<double, int>> scratch; // (value, row) sort buffer

    ForestModel::Tree build() {
        const std::size_t n = static_cast<std::size_t>(X.rows());
        indices.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            indices[i] = static_cast<int>(rng.index(n));

        const double min_split =
            params.min_node_fraction * static_cast<double>(n);
        const int d = static_cast<int>(X.cols());
        const int k = std::clamp(
            static_cast<int>(
                std::ceil(params.feature_fraction * d - 1e-9)),
            1, d);

        ForestModel::Tree tree;
        struct Item {
            std::size_t node;
            std::size_t begin, end;
        };
        std::vector<Item> stack;
        tree.nodes.emplace_back();
        stack.push_back({0, 0, n});

        while (!stack.empty()) {
            const Item item = stack.back();
            stack.pop_back();
            const std::size_t m = item.end - item.begin;

            double sum = 0.0, sum2 = 0.0;
            for (std::size_t i = item.begin; i < item.end; ++i) {
                const double v = y(indices[i]);
                sum += v;
                sum2 += v * v;
            }
            const double mean = sum / static_cast<double>(m);
            tree.nodes[item.node].value = mean;

            // a node may split only when it is larger than the size floor
            if (!(static_cast<double>(m) > min_split) || m < 2)
                continue;
            const double parent_sse =
                std::max(0.0, sum2 - sum * sum / static_cast<double>(m));
            if (parent_sse <= 1e-12)
                continue;

            const SplitChoice split =
                best_split(item.begin, item.end, k, parent_sse, sum, sum2);
            if (split.feature < 0)
                continue;

            const auto mid = std::stable_partition(
                indices.begin() + static_cast<std::ptrdiff_t>(item.begin),
                indices.begin() + static_cast<std::ptrdiff_t>(item.end),
                [&](int row) {
                    return X(row, split.feature) <= split.threshold;
                });
            const std::size_t cut =
                static_cast<std::size_t>(mid - indices.begin());

            ForestModel::Node& node = tree.nodes[item.node];
            node.feature = split.feature;
            node.threshold = split.threshold;
            node.gain = split.gain;
            node.left = static_cast<int>(tree.nodes.size());
            node.right = node.left + 1;
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            const std::size_t left_node =
                static_cast<std::size_t>(tree.nodes[item.node].left);
            stack.push_back({left_node + 1, cut, item.end});
            stack.push_back({left_node, item.begin, cut});
        }
        return tree;
    }

    SplitChoice best_split(std::size_t begin, std::size_t end, int k,
                           double parent_sse, double sum, double sum2) {
        const std::size_t m = end - begin;
        const int d = static_cast<int>(X.cols());
        feature_pool.resize(static_cast<std::size_t>(d));
        std::iota(feature_pool.begin(), feature_pool.end(), 0);
        for (int j = 0; j < k; ++j) {
            const std::size_t pick =
                static_cast<std::size_t>(j) +
                rng.index(static_cast<std::size_t>(d - j));
            std::swap(feature_pool[static_cast<std::size_t>(j)],
                      feature_pool[pick]);
        }

        SplitChoice best;
        for (int j = 0; j < k; ++j) {
            const int f = feature_pool[static_cast<std::size_t>(j)];
            scratch.clear();
            scratch.reserve(m);
            for (std::size_t i = begin; i < end; ++i)
                scratch.emplace_back(X(indices[i], f), indices[i]);
            std::stable_sort(scratch.begin(), scratch.end(),
                             [](const auto& a, const auto& b) {
                                 return a.first < b.first;
                             });
            double sum_left = 0.0, sum2_left = 0.0;
            for (std::size_t i = 0; i + 1 < m; ++i) {
                const double v = y(scratch[i].second);
                sum_left += v;
                sum2_left += v * v;
                const double lo = scratch[i].first;
                const double hi = scratch[i + 1].first;
                if (lo == hi)
                    continue;
                const double n_left = static_cast<double>(i + 1);
                const double n_right = static_cast<double>(m - i - 1);
                const double sum_right = sum - sum_left;
                const double sse_left =
                    std::max(0.0, sum2_left - sum_left * sum_left / n_left);
                const double sse_right =
                    std::max(0.0, (sum2 - sum2_left) -
                                      sum_right * sum_right / n_right);
                const double gain = parent_sse - sse_left - sse_right;
                if (gain > best.gain && gain > 1e-12) {
                    double threshold = 0.5 * (lo + hi);
                    if (!(threshold > lo) || threshold >= hi)
                        threshold = lo; // adjacent doubles, split on them
                    best.gain = gain;
                    best.feature = f;
                    best.threshold = threshold;
                }
            }
        }
        return best;
    }
};

} // namespace

double ForestModel::Tree::predict(const Eigen::VectorXd& x) const {
    const Node* node = &nodes[0];
    while (node->feature >= 0)
        node = &nodes[static_cast<std::size_t>(
            x(node->feature) <= node->threshold ? node->left : node->right)];
    return node->value;
}

Eigen::VectorXd ForestModel::predict(const Eigen::MatrixXd& X) const {
    check_width(X);
    if (trees.empty())
        throw Error("forest has no trees");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const Eigen::VectorXd x = X.row(i);
        double sum = 0.0;
        for (const Tree& tree : trees)
            sum += tree.predict(x);
        out(i) = sum / static_cast<double>(trees.size());
    }
    return out;
}

FeatureImportance ForestModel::importance() const {
    FeatureImportance imp;
    imp.names = feature_names;
    imp.scores.assign(feature_names.size(), 0.0);
    double total = 0.0;
    for (const Tree& tree : trees)
        for (const Node& node : tree.nodes)
            if (node.feature >= 0) {
                imp.scores[static_cast<std::size_t>(node.feature)] +=
                    node.gain;
                total += node.gain;
            }
    if (total > 0.0) {
        for (double& s : imp.scores)
            s /= total;
    } else {
        // no split anywhere: every feature is equally uninformative
        const double u = 1.0 / static_cast<double>(imp.scores.size());
        for (double& s : imp.scores)
            s = u;
    }
    return imp;
}

ModelPtr rf_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                const std::vector<std::string>& names,
                const ModelConfig& config, std::uint64_t seed, int workers) {
    config.validate();
    if (X.rows() != y.size())
        throw DimensionMismatch("rf: rows of X and y disagree");
    if (X.rows() < 1 || X.cols() < 1)
        throw Error("rf: empty training data");
    if (static_cast<std::size_t>(X.cols()) != names.size())
        throw DimensionMismatch("rf: names do not match columns");

    auto model = std::make_unique<ForestModel>();
    model->feature_names = names;
    model->config = config;
    model->seed = seed;
    model->trees.resize(static_cast<std::size_t>(config.rf.n_trees));

    parallel_for(model->trees.size(), workers, [&](std::size_t i) {
        TreeBuilder builder{
            X, y, config.rf,
            RandomStream(derive_seed(seed, tree_tag, i)),
            {}, {}, {}};
        model->trees[i] = builder.build();
    });

    const Eigen::VectorXd fitted = model->predict(X);
    model->final_train_rmse =
        std::sqrt((fitted - y).squaredNorm() / X.rows());
    return model;
}

namespace detail {

json forest_params_json(const ForestModel& model) {
    json trees = json::array();
    for (const auto& tree : model.trees) {
        json features = json::array(), thresholds = json::array(),
             lefts = json::array(), rights = json::array(),
             values = json::array(), gains = json::array();
        for (const auto& node : tree.nodes) {
            features.push_back(node.feature);
            thresholds.push_back(node.threshold);
            lefts.push_back(node.left);
            rights.push_back(node.right);
            values.push_back(node.value);
            gains.push_back(node.gain);
        }
        trees.push_back({{"feature", std::move(features)},
                         {"threshold", std::move(thresholds)},
                         {"left", std::move(lefts)},
                         {"right", std::move(rights)},
                         {"value", std::move(values)},
                         {"gain", std::move(gains)}});
    }
    json p;
    p["trees"] = std::move(trees);
    return p;
}

ModelPtr load_forest_model(const json& j) {
    auto model = std::make_unique<ForestModel>();
    read_envelope(j, *model);
    for (const auto& t : j.at("params").at("trees")) {
        ForestModel::Tree tree;
        const auto& features = t.at("feature");
        const std::size_t n = features.size();
        if (t.at("threshold").size() != n || t.at("left").size() != n ||
            t.at("right").size() != n || t.at("value").size() != n ||
            t.at("gain").size() != n)
            throw MalformedRow("forest model: ragged tree arrays");
        tree.nodes.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto& node = tree.nodes[i];
            node.feature = t.at("feature").at(i).get<int>();
            node.threshold = t.at("threshold").at(i).get<double>();
            node.left = t.at("left").at(i).get<int>();
            node.right = t.at("right").at(i).get<int>();
            node.value = t.at("value").at(i).get<double>();
            node.gain = t.at("gain").at(i).get<double>();
            const int width = static_cast<int>(model->feature_names.size());
            if (node.feature >= width ||
                (node.feature >= 0 &&
                 (node.left < 0 || node.right < 0 ||
                  node.left >= static_cast<int>(n) ||
                  node.right >= static_cast<int>(n))))
                throw MalformedRow("forest model: bad node wiring");
        }
        model->trees.push_back(std::move(tree));
    }
    if (model->trees.empty())
        throw MalformedRow("forest model without trees");
    return model;
}

} // namespace detail

} // namespace obpf
