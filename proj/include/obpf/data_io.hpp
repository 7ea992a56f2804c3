#pragma once

#include <filesystem>

#include "obpf/features.hpp"

namespace obpf {

// Everything one run needs: books to clear and aggregate, forecasts and
// calendars to build features from.
struct DatasetBundle {
    BookStore books;
    FundamentalsStore fundamentals;
    CalendarConfig calendars;

    // Every book hour must have fundamentals. Throws MissingData.
    void validate() const;
};

// books.csv: date,hour,side,price,volume_mwh; duplicate (hour, side, price)
// rows accumulate. strict rejects off-grid prices, otherwise they snap to
// the nearest tick.
BookStore load_books(const std::filesystem::path& path, bool strict = true);
void save_books(const BookStore& books, const std::filesystem::path& path);

// fundamentals.csv: date,hour,solar_mwh,wind_mwh,demand_mwh; duplicate hours
// are an error.
FundamentalsStore load_fundamentals(const std::filesystem::path& path);
void save_fundamentals(const FundamentalsStore& fundamentals,
                       const std::filesystem::path& path);

// calendars.csv: kind,date with kind in {holiday, bridge}.
CalendarConfig load_calendars(const std::filesystem::path& path);
void save_calendars(const CalendarConfig& cal,
                    const std::filesystem::path& path);

// A directory holding books.csv, fundamentals.csv and calendars.csv.
DatasetBundle load_bundle(const std::filesystem::path& dir);
void save_bundle(const DatasetBundle& bundle,
                 const std::filesystem::path& dir);

} // namespace obpf
