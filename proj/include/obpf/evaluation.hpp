#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "obpf/features.hpp"
#include "obpf/metrics.hpp"
#include "obpf/models/common.hpp"

namespace obpf {

// Row indices into a FeatureMatrix; rows stay in chronological order.
struct DataSplit {
    std::vector<int> train_rows;
    std::vector<int> test_rows;
};

// Test set = the last ceil(fraction * n) rows.
DataSplit chronological_split(std::size_t n_rows, double test_fraction);

// k contiguous blocks with sizes differing by at most one (earlier blocks
// take the remainder); fold i holds block i out for validation.
std::vector<DataSplit> cv_folds(std::size_t n_rows, int k);

// The feature columns a config trains on: everything, everything except the
// reference-day curve classes, or the top-n by importance.
std::vector<int> columns_for_config(const std::vector<std::string>& names,
                                    const ModelConfig& config,
                                    const FeatureImportance* importance);

struct CvCell {
    ModelConfig config;
    bool failed = false;
    std::string error;
    double mean_rmse = 0.0;
    std::vector<double> fold_rmse;
};

CvCell cross_validate(const FeatureMatrix& fm, const std::vector<int>& rows,
                      const ModelConfig& config,
                      const FeatureImportance* importance, int k,
                      std::uint64_t seed, int workers = 1);

struct GridResult {
    std::vector<CvCell> cells; // one per config, input order
    int best = -1;             // lowest mean RMSE among non-failed cells
};

// Failed cells stay in the table but cannot win. Results do not depend on
// the worker count.
GridResult grid_search(const FeatureMatrix& fm, const std::vector<int>& rows,
                       const std::vector<ModelConfig>& configs,
                       const FeatureImportance* importance, int k,
                       std::uint64_t seed, int workers = 1);

void save_cv_table(const GridResult& result,
                   const std::filesystem::path& path);

void save_importance(const FeatureImportance& importance,
                     const std::filesystem::path& path);

// Benchmark without features: workdays except Monday take yesterday's price
// for the same hour; all other days take the first day of the same type
// among the seven preceding days that has a price. Throws MissingHistory.
double naive_forecast(AuctionHour t,
                      const std::map<AuctionHour, double>& history,
                      const CalendarConfig& cal);

struct SuiteRow {
    std::string model;
    std::string split; // "train" or "test"
    MetricReport metrics;
};

// Metrics per model on both split halves plus the naive benchmark (which
// skips rows lacking history; its n tells how many scored).
std::vector<SuiteRow>
evaluate_suite(const FeatureMatrix& fm, const DataSplit& split,
               const std::vector<std::pair<std::string, const Model*>>& models,
               const CalendarConfig& cal);

void save_comparison(const std::vector<SuiteRow>& rows,
                     const std::filesystem::path& path);

// Materialize a row/column subset for training or prediction.
std::pair<Eigen::MatrixXd, Eigen::VectorXd>
materialize(const FeatureMatrix& fm, const std::vector<int>& rows,
            const std::vector<int>& cols);

} // namespace obpf
