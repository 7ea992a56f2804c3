#include "obpf/calendar.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

namespace obpf {

namespace {

namespace chr = std::chrono;

chr::sys_days to_sys_days(int days) {
    return chr::sys_days(chr::days(days));
}

int parse_int(std::string_view s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw MalformedRow("bad date component '" + std::string(s) + "'");
    return v;
}

// last given weekday of a month, as days since epoch
Date last_weekday_of(int year, unsigned month, unsigned weekday) {
    const auto last = chr::year_month_day_last(
        chr::year(year), chr::month_day_last(chr::month(month)));
    Date d(year, month, static_cast<unsigned>(last.day()));
    while (d.weekday() != weekday)
        d = d.plus_days(-1);
    return d;
}

} // namespace

Date::Date(int year, unsigned month, unsigned day) {
    const chr::year_month_day ymd{chr::year(year), chr::month(month),
                                  chr::day(day)};
    if (!ymd.ok())
        throw MalformedRow("invalid date " + std::to_string(year) + "-" +
                           std::to_string(month) + "-" + std::to_string(day));
    days_ = chr::sys_days(ymd).time_since_epoch().count();
}

Date Date::parse(std::string_view iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-')
        throw MalformedRow("bad date '" + std::string(iso) +
                           "', want YYYY-MM-DD");
    return Date(parse_int(iso.substr(0, 4)),
                static_cast<unsigned>(parse_int(iso.substr(5, 2))),
                static_cast<unsigned>(parse_int(iso.substr(8, 2))));
}

chr::year_month_day Date::ymd() const {
    return chr::year_month_day(to_sys_days(days_));
}

int Date::year() const { return static_cast<int>(ymd().year()); }
unsigned Date::month() const { return static_cast<unsigned>(ymd().month()); }
unsigned Date::day() const { return static_cast<unsigned>(ymd().day()); }

unsigned Date::weekday() const {
    return chr::weekday(to_sys_days(days_)).c_encoding();
}

std::string Date::str() const {
    const auto d = ymd();
    char buf[11];
    const int y = static_cast<int>(d.year());
    const unsigned m = static_cast<unsigned>(d.month());
    const unsigned dd = static_cast<unsigned>(d.day());
    buf[0] = static_cast<char>('0' + y / 1000 % 10);
    buf[1] = static_cast<char>('0' + y / 100 % 10);
    buf[2] = static_cast<char>('0' + y / 10 % 10);
    buf[3] = static_cast<char>('0' + y % 10);
    buf[4] = '-';
    buf[5] = static_cast<char>('0' + m / 10);
    buf[6] = static_cast<char>('0' + m % 10);
    buf[7] = '-';
    buf[8] = static_cast<char>('0' + dd / 10);
    buf[9] = static_cast<char>('0' + dd % 10);
    buf[10] = '\0';
    return buf;
}

std::string_view day_type_name(DayType t) {
    switch (t) {
    case DayType::workday: return "workday";
    case DayType::saturday_or_bridge: return "saturday_or_bridge";
    case DayType::sunday_or_holiday: return "sunday_or_holiday";
    }
    return "?";
}

DayType classify_day(Date d, const CalendarConfig& cal) {
    const unsigned wd = d.weekday();
    if (wd == 0 || cal.holidays.count(d))
        return DayType::sunday_or_holiday;
    if (wd == 6 || cal.bridge_days.count(d))
        return DayType::saturday_or_bridge;
    return DayType::workday;
}

bool daylight_saving(Date d) {
    const int y = d.year();
    const Date begin = last_weekday_of(y, 3, 0);
    const Date end = last_weekday_of(y, 10, 0);
    return d >= begin && d < end;
}

std::array<double, 2> encode_cyclic(int value, int period) {
    if (period <= 0)
        throw Error("cyclic encoding needs a positive period");
    const double a = 2.0 * std::numbers::pi * value / period;
    return {std::sin(a), std::cos(a)};
}

Date reference_date(Date d, const CalendarConfig& cal,
                    const std::function<bool(Date)>& usable) {
    const DayType want = classify_day(d, cal);
    for (int back = 1; back <= 365; ++back) {
        const Date e = d.plus_days(-back);
        if (classify_day(e, cal) == want && (!usable || usable(e)))
            return e;
    }
    throw NoReference("no usable " + std::string(day_type_name(want)) +
                      " within 365 days before " + d.str());
}

std::array<double, CalendarInfo::size> CalendarInfo::values() const {
    return {year,    dst,     day_workday, day_saturday_bridge,
            day_sunday_holiday, month_x, month_y, hour_x, hour_y};
}

std::array<std::string_view, CalendarInfo::size> CalendarInfo::names() {
    return {"year",    "dst",     "day_workday", "day_saturday_bridge",
            "day_sunday_holiday", "month_x",     "month_y",
            "hour_x",  "hour_y"};
}

CalendarInfo calendar_features(Date d, int hour, const CalendarConfig& cal) {
    if (hour < 0 || hour > 23)
        throw Error("hour " + std::to_string(hour) + " outside 0..23");
    CalendarInfo info;
    info.year = d.year();
    info.dst = daylight_saving(d) ? 1.0 : 0.0;
    switch (classify_day(d, cal)) {
    case DayType::workday: info.day_workday = 1.0; break;
    case DayType::saturday_or_bridge: info.day_saturday_bridge = 1.0; break;
    case DayType::sunday_or_holiday: info.day_sunday_holiday = 1.0; break;
    }
    const auto m = encode_cyclic(static_cast<int>(d.month()), 12);
    info.month_x = m[0];
    info.month_y = m[1];
    const auto h = encode_cyclic(hour, 24);
    info.hour_x = h[0];
    info.hour_y = h[1];
    return info;
}

} // namespace obpf
