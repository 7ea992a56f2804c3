#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace obpf {

struct MetricReport {
    double rmse = 0.0;
    double mae = 0.0;
    double mdape = 0.0;
    std::size_t n = 0;
    std::size_t n_excluded = 0; // rows with zero truth, skipped by MdAPE
};

// Lower median: middle element for odd n, lower of the two middle elements
// for even n. Takes its argument by value because it sorts.
double lower_median(std::vector<double> values);

// RMSE and MAE over all rows; MdAPE over rows with nonzero truth (their
// count is reported as n_excluded). Throws DimensionMismatch on length
// mismatch and Error on empty input.
MetricReport compute_metrics(std::span<const double> predicted,
                             std::span<const double> truth);

} // namespace obpf
