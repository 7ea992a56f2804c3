#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "obpf/calendar.hpp"
#include "obpf/order_book.hpp"
#include "obpf/partition.hpp"
#include "obpf/price_curve.hpp"

namespace obpf {

// Exogenous forecasts published before the auction.
struct FundamentalForecasts {
    double solar_mwh = 0.0;
    double wind_mwh = 0.0;
    double demand_mwh = 0.0;
};

using BookStore = std::map<AuctionHour, OrderBook>;
using FundamentalsStore = std::map<AuctionHour, FundamentalForecasts>;

// Column names in assembly order: reference-day class volumes, reference-day
// inelastic demand, fundamentals for the hour and its reference, calendar
// block for the hour and for the reference date.
std::vector<std::string> feature_names(const PriceClassScheme& scheme);

// True for the reference-day class volume columns (the ones dropped by the
// "no_curve" feature mode).
bool is_curve_feature(std::string_view name);

struct AssembledRow {
    AuctionHour t;
    AuctionHour reference; // same hour on the reference date
    std::vector<double> values;
};

// Throws MissingData when the hour lacks fundamentals and NoReference when
// no usable reference day exists (a day is usable when it has both a book
// and fundamentals for this hour).
AssembledRow assemble_features(AuctionHour t, const BookStore& books,
                               const FundamentalsStore& fundamentals,
                               const CalendarConfig& cal,
                               const PriceClassScheme& scheme);

// Training target: the price implied by the hour's own aggregated curve.
double target_price(const OrderBook& book, const PriceClassScheme& scheme);

struct FeatureMatrix {
    std::vector<std::string> names; // feature columns of X
    std::vector<AuctionHour> hours; // ascending, one per row
    Eigen::MatrixXd X;              // rows x features
    Eigen::VectorXd y;              // target per row

    std::size_t rows() const { return hours.size(); }
    std::size_t cols() const { return names.size(); }
};

struct BuildReport {
    std::size_t built = 0;
    std::size_t skipped_no_reference = 0;
    std::size_t skipped_missing_data = 0;
};

// One row per book hour that has fundamentals and a usable reference day;
// the rest are counted in the report.
FeatureMatrix build_feature_matrix(const BookStore& books,
                                   const FundamentalsStore& fundamentals,
                                   const CalendarConfig& cal,
                                   const PriceClassScheme& scheme,
                                   BuildReport* report = nullptr);

// CSV with date and hour as row keys, then the feature columns, then the
// target. Doubles round-trip exactly.
void save_feature_matrix(const FeatureMatrix& fm,
                         const std::filesystem::path& path);
FeatureMatrix load_feature_matrix(const std::filesystem::path& path);

} // namespace obpf
