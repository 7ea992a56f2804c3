#include "obpf/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "obpf/errors.hpp"

namespace obpf {

double lower_median(std::vector<double> values) {
    if (values.empty())
        throw Error("median of empty set");
    const std::size_t idx = (values.size() - 1) / 2;
    std::nth_element(values.begin(), values.begin() + idx, values.end());
    return values[idx];
}

MetricReport compute_metrics(std::span<const double> predicted,
                             std::span<const double> truth) {
    if (predicted.size() != truth.size())
        throw DimensionMismatch("metrics: " + std::to_string(predicted.size()) +
                                " predictions vs " +
                                std::to_string(truth.size()) + " truths");
    if (predicted.empty())
        throw Error("metrics of empty vectors");

    MetricReport report;
    report.n = predicted.size();
    double sq_sum = 0.0, abs_sum = 0.0;
    std::vector<double> ape;
    ape.reserve(predicted.size());
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double err = predicted[i] - truth[i];
        sq_sum += err * err;
        abs_sum += std::abs(err);
        if (truth[i] != 0.0)
            ape.push_back(std::abs(err) / std::abs(truth[i]));
        else
            ++report.n_excluded;
    }
    report.rmse = std::sqrt(sq_sum / static_cast<double>(report.n));
    report.mae = abs_sum / static_cast<double>(report.n);
    report.mdape = ape.empty() ? 0.0 : lower_median(std::move(ape));
    return report;
}

} // namespace obpf
