#pragma once

#include <array>
#include <chrono>
#include <compare>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "obpf/errors.hpp"

namespace obpf {

// Calendar date, a value type over days since 1970-01-01.
class Date {
  public:
    constexpr Date() = default;
    Date(int year, unsigned month, unsigned day);
    static Date parse(std::string_view iso); // "YYYY-MM-DD"
    static constexpr Date from_days(int days) { return Date(days); }

    int year() const;
    unsigned month() const;    // 1..12
    unsigned day() const;      // 1..31
    unsigned weekday() const;  // 0 = Sunday .. 6 = Saturday
    int days_since_epoch() const { return days_; }

    Date plus_days(int n) const { return Date(days_ + n); }
    int operator-(Date other) const { return days_ - other.days_; }

    std::string str() const; // ISO form

    auto operator<=>(const Date&) const = default;

  private:
    constexpr explicit Date(int days) : days_(days) {}
    std::chrono::year_month_day ymd() const;
    int days_ = 0;
};

enum class DayType { workday, saturday_or_bridge, sunday_or_holiday };

std::string_view day_type_name(DayType t);

struct CalendarConfig {
    std::set<Date> holidays;
    std::set<Date> bridge_days;
};

// Holidays and Sundays collapse to one class, Saturdays and bridge days to
// another; everything else is a workday. Holiday beats bridge-day if a date
// is listed as both.
DayType classify_day(Date d, const CalendarConfig& cal);

// EU daylight saving: [last Sunday of March, last Sunday of October)
bool daylight_saving(Date d);

// (sin, cos) of 2*pi*value/period
std::array<double, 2> encode_cyclic(int value, int period);

// Most recent strictly earlier date with the same day type, looking back at
// most 365 days. `usable` (when set) must also accept the candidate; this is
// how callers skip days with missing data. Throws NoReference on failure.
Date reference_date(Date d, const CalendarConfig& cal,
                    const std::function<bool(Date)>& usable = {});

// One calendar block of the feature vector, in feature order.
struct CalendarInfo {
    double year = 0;
    double dst = 0;
    double day_workday = 0;
    double day_saturday_bridge = 0;
    double day_sunday_holiday = 0;
    double month_x = 0, month_y = 0;
    double hour_x = 0, hour_y = 0;

    static constexpr int size = 9;
    std::array<double, size> values() const;
    static std::array<std::string_view, size> names();
};

CalendarInfo calendar_features(Date d, int hour, const CalendarConfig& cal);

} // namespace obpf
