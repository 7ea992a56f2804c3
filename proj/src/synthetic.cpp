#include "obpf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "obpf/rng.hpp"
#include "obpf/textio.hpp"

namespace obpf {

namespace {

using nlohmann::json;

// Meeus/Jones/Butcher Gregorian computus
Date easter_sunday(int year) {
    const int a = year % 19;
    const int b = year / 100;
    const int c = year % 100;
    const int d = b / 4;
    const int e = b % 4;
    const int f = (b + 8) / 25;
    const int g = (b - f + 1) / 3;
    const int h = (19 * a + b - d - g + 15) % 30;
    const int i = c / 4;
    const int k = c % 4;
    const int l = (32 + 2 * e + 2 * i - h - k) % 7;
    const int m = (a + 11 * h + 22 * l) / 451;
    const int month = (h + l - 7 * m + 114) / 31;
    const int day = (h + l - 7 * m + 114) % 31 + 1;
    return Date(year, static_cast<unsigned>(month),
                static_cast<unsigned>(day));
}

CalendarConfig build_calendar(int first_year, int last_year) {
    CalendarConfig cal;
    for (int y = first_year; y <= last_year; ++y) {
        cal.holidays.insert(Date(y, 1, 1));
        cal.holidays.insert(Date(y, 5, 1));
        cal.holidays.insert(Date(y, 10, 3));
        cal.holidays.insert(Date(y, 12, 25));
        cal.holidays.insert(Date(y, 12, 26));
        const Date easter = easter_sunday(y);
        cal.holidays.insert(easter.plus_days(-2)); // Good Friday
        cal.holidays.insert(easter.plus_days(1));  // Easter Monday
        cal.holidays.insert(easter.plus_days(39)); // Ascension
        cal.holidays.insert(easter.plus_days(50)); // Whit Monday
    }
    for (Date h : cal.holidays) {
        if (h.weekday() == 4 && !cal.holidays.count(h.plus_days(1)))
            cal.bridge_days.insert(h.plus_days(1)); // Friday after Thursday
        if (h.weekday() == 2 && !cal.holidays.count(h.plus_days(-1)))
            cal.bridge_days.insert(h.plus_days(-1)); // Monday before Tuesday
    }
    return cal;
}

constexpr double hour_profile[24] = {
    0.05, 0.02, 0.00, 0.00, 0.03, 0.10, 0.28, 0.52, 0.68, 0.76, 0.80, 0.82,
    0.80, 0.76, 0.72, 0.70, 0.74, 0.82, 0.92, 1.00, 0.93, 0.72, 0.42, 0.18};

double solar_shape(int hour) {
    const double s = std::sin(std::numbers::pi * (hour - 6) / 12.0);
    return s <= 0.0 ? 0.0 : std::pow(s, 1.2);
}

// lognormal factor with mean one
double noise_factor(RandomStream& rng, double sigma) {
    return std::exp(sigma * rng.normal() - 0.5 * sigma * sigma);
}

double require(const json& j, const char* key, double fallback) {
    return j.contains(key) ? j.at(key).get<double>() : fallback;
}

} // namespace

void SyntheticSpec::validate() const {
    if (end < start)
        throw ConfigError("synthetic spec: end date before start date");
    if (stack.empty())
        throw ConfigError("synthetic spec: empty technology stack");
    double total_capacity = 0.0;
    double max_cost = stack.front().marginal_cost_eur;
    double min_cost = stack.front().marginal_cost_eur;
    for (const auto& block : stack) {
        if (block.capacity_mwh <= 0.0)
            throw ConfigError("synthetic spec: block '" + block.name +
                              "' has non-positive capacity");
        try {
            PriceTick::from_eur(block.marginal_cost_eur);
        } catch (const OffGridPrice&) {
            throw ConfigError("synthetic spec: marginal cost of '" +
                              block.name + "' is off the 0.1 grid");
        }
        total_capacity += block.capacity_mwh;
        max_cost = std::max(max_cost, block.marginal_cost_eur);
        min_cost = std::min(min_cost, block.marginal_cost_eur);
    }
    try {
        PriceTick::from_eur(renewable_bid_price);
    } catch (const OffGridPrice&) {
        throw ConfigError("synthetic spec: renewable bid is off the 0.1 grid");
    }
    if (renewable_bid_price >= min_cost)
        throw ConfigError("synthetic spec: renewable bid must undercut every "
                          "marginal cost");
    if (tail.levels < 1)
        throw ConfigError("synthetic spec: tail needs at least one level");
    if (tail.price_min_eur <= max_cost)
        throw ConfigError(
            "synthetic spec: elastic tail must be priced above every "
            "marginal cost");
    if (tail.price_max_eur < tail.price_min_eur ||
        tail.price_max_eur > PriceTick::max().eur())
        throw ConfigError("synthetic spec: bad tail price range");
    if (demand.base_mwh <= 0.0 || demand.amplitude_mwh < 0.0)
        throw ConfigError("synthetic spec: bad demand profile");
    if (demand.saturday_factor <= 0.0 || demand.saturday_factor > 1.0 ||
        demand.sunday_factor <= 0.0 || demand.sunday_factor > 1.0)
        throw ConfigError("synthetic spec: day factors must be in (0, 1]");
    if (solar.peak_mwh < 0.0 || wind.level_mwh < 0.0 ||
        tail.volume_mwh < 0.0)
        throw ConfigError("synthetic spec: negative volume parameter");
    // generous headroom so every hour clears on the conventional stack
    const double needed =
        1.6 * (demand.base_mwh + demand.amplitude_mwh) + 2.0 * tail.volume_mwh;
    if (total_capacity < needed)
        throw ConfigError(
            "synthetic spec: stack capacity cannot cover peak demand (need " +
            format_double(needed) + " MWh)");
}

SyntheticSpec default_synthetic_spec() {
    SyntheticSpec spec;
    spec.start = Date(2015, 1, 1);
    spec.end = Date(2016, 12, 31);
    spec.seed = 1;
    spec.stack = {
        {"nuclear", 5000.0, 5.0},   {"lignite", 4000.0, 18.0},
        {"coal", 3500.0, 35.0},     {"ccgt", 3000.0, 48.0},
        {"gas", 2500.0, 62.0},      {"gas_peak", 1500.0, 90.0},
        {"oil", 1000.0, 120.0},     {"reserve", 4500.0, 150.0},
    };
    return spec;
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw MalformedRow("synthetic spec " + path.string() + ": " +
                           e.what());
    }
    SyntheticSpec spec = default_synthetic_spec();
    try {
        if (!j.contains("start") || !j.contains("end"))
            throw MalformedRow("synthetic spec " + path.string() +
                               ": start and end are required");
        spec.start = Date::parse(j.at("start").get<std::string>());
        spec.end = Date::parse(j.at("end").get<std::string>());
        if (j.contains("seed"))
            spec.seed = j.at("seed").get<std::uint64_t>();
        spec.renewable_bid_price =
            require(j, "renewable_bid_price", spec.renewable_bid_price);
        spec.forecast_noise_sigma =
            require(j, "forecast_noise_sigma", spec.forecast_noise_sigma);
        if (j.contains("stack")) {
            spec.stack.clear();
            for (const auto& b : j.at("stack")) {
                TechBlock block;
                block.name = b.value("name", std::string("block"));
                block.capacity_mwh = b.at("capacity_mwh").get<double>();
                block.marginal_cost_eur =
                    b.at("marginal_cost_eur").get<double>();
                spec.stack.push_back(std::move(block));
            }
        }
        if (j.contains("solar")) {
            const auto& s = j.at("solar");
            spec.solar.peak_mwh = require(s, "peak_mwh", spec.solar.peak_mwh);
            spec.solar.cloud_sigma =
                require(s, "cloud_sigma", spec.solar.cloud_sigma);
        }
        if (j.contains("wind")) {
            const auto& w = j.at("wind");
            spec.wind.level_mwh = require(w, "level_mwh", spec.wind.level_mwh);
            spec.wind.day_sigma = require(w, "day_sigma", spec.wind.day_sigma);
            spec.wind.hour_sigma =
                require(w, "hour_sigma", spec.wind.hour_sigma);
        }
        if (j.contains("demand")) {
            const auto& d = j.at("demand");
            spec.demand.base_mwh = require(d, "base_mwh", spec.demand.base_mwh);
            spec.demand.amplitude_mwh =
                require(d, "amplitude_mwh", spec.demand.amplitude_mwh);
            spec.demand.noise_sigma =
                require(d, "noise_sigma", spec.demand.noise_sigma);
            spec.demand.saturday_factor =
                require(d, "saturday_factor", spec.demand.saturday_factor);
            spec.demand.sunday_factor =
                require(d, "sunday_factor", spec.demand.sunday_factor);
        }
        if (j.contains("tail")) {
            const auto& t = j.at("tail");
            spec.tail.volume_mwh = require(t, "volume_mwh", spec.tail.volume_mwh);
            spec.tail.price_min_eur =
                require(t, "price_min_eur", spec.tail.price_min_eur);
            spec.tail.price_max_eur =
                require(t, "price_max_eur", spec.tail.price_max_eur);
            if (t.contains("levels"))
                spec.tail.levels = t.at("levels").get<int>();
            spec.tail.noise_sigma =
                require(t, "noise_sigma", spec.tail.noise_sigma);
        }
    } catch (const json::exception& e) {
        throw MalformedRow("synthetic spec " + path.string() + ": " +
                           e.what());
    }
    spec.validate();
    return spec;
}

void save_synthetic_spec(const SyntheticSpec& spec,
                         const std::filesystem::path& path) {
    json j;
    j["start"] = spec.start.str();
    j["end"] = spec.end.str();
    j["seed"] = spec.seed;
    j["renewable_bid_price"] = spec.renewable_bid_price;
    j["forecast_noise_sigma"] = spec.forecast_noise_sigma;
    j["stack"] = json::array();
    for (const auto& b : spec.stack)
        j["stack"].push_back({{"name", b.name},
                              {"capacity_mwh", b.capacity_mwh},
                              {"marginal_cost_eur", b.marginal_cost_eur}});
    j["solar"] = {{"peak_mwh", spec.solar.peak_mwh},
                  {"cloud_sigma", spec.solar.cloud_sigma}};
    j["wind"] = {{"level_mwh", spec.wind.level_mwh},
                 {"day_sigma", spec.wind.day_sigma},
                 {"hour_sigma", spec.wind.hour_sigma}};
    j["demand"] = {{"base_mwh", spec.demand.base_mwh},
                   {"amplitude_mwh", spec.demand.amplitude_mwh},
                   {"noise_sigma", spec.demand.noise_sigma},
                   {"saturday_factor", spec.demand.saturday_factor},
                   {"sunday_factor", spec.demand.sunday_factor}};
    j["tail"] = {{"volume_mwh", spec.tail.volume_mwh},
                 {"price_min_eur", spec.tail.price_min_eur},
                 {"price_max_eur", spec.tail.price_max_eur},
                 {"levels", spec.tail.levels},
                 {"noise_sigma", spec.tail.noise_sigma}};
    write_file_atomic(path, j.dump(2) + "\n");
}

DatasetBundle generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    constexpr double two_pi = 2.0 * std::numbers::pi;

    DatasetBundle bundle;
    bundle.calendars = build_calendar(spec.start.year(), spec.end.year());

    const PriceTick renewable_tick =
        PriceTick::from_eur(spec.renewable_bid_price);
    std::vector<PriceTick> stack_ticks;
    stack_ticks.reserve(spec.stack.size());
    for (const auto& block : spec.stack)
        stack_ticks.push_back(PriceTick::from_eur(block.marginal_cost_eur));
    std::vector<PriceTick> tail_ticks;
    for (int j = 0; j < spec.tail.levels; ++j) {
        const double p =
            spec.tail.levels == 1
                ? spec.tail.price_min_eur
                : spec.tail.price_min_eur +
                      j * (spec.tail.price_max_eur - spec.tail.price_min_eur) /
                          (spec.tail.levels - 1);
        tail_ticks.push_back(
            PriceTick::from_tenths(static_cast<int>(std::round(p * 10.0))));
    }

    const int n_days = spec.end - spec.start + 1;
    for (int di = 0; di < n_days; ++di) {
        const Date date = spec.start.plus_days(di);
        const int doy = date - Date(date.year(), 1, 1);

        RandomStream day_rng(derive_seed(spec.seed, 1, di));
        const double cloud = noise_factor(day_rng, spec.solar.cloud_sigma);
        const double wind_day = noise_factor(day_rng, spec.wind.day_sigma);

        const double season_solar =
            0.6 - 0.4 * std::cos(two_pi * (doy - 171) / 365.25);
        const double season_wind =
            1.0 + 0.35 * std::cos(two_pi * (doy - 15) / 365.25);
        const double season_demand =
            1.0 + 0.18 * std::cos(two_pi * (doy - 20) / 365.25);

        double day_factor = 1.0;
        switch (classify_day(date, bundle.calendars)) {
        case DayType::workday: break;
        case DayType::saturday_or_bridge:
            day_factor = spec.demand.saturday_factor;
            break;
        case DayType::sunday_or_holiday:
            day_factor = spec.demand.sunday_factor;
            break;
        }

        for (int h = 0; h < 24; ++h) {
            RandomStream rng(derive_seed(spec.seed, 2,
                                         static_cast<std::uint64_t>(di) * 24 +
                                             static_cast<std::uint64_t>(h)));
            const double wind_hour =
                noise_factor(rng, spec.wind.hour_sigma);
            const double demand_noise =
                noise_factor(rng, spec.demand.noise_sigma);

            const double solar_true =
                spec.solar.peak_mwh * season_solar * cloud * solar_shape(h);
            const double wind_true =
                spec.wind.level_mwh * season_wind * wind_day * wind_hour;
            const double demand_true =
                (spec.demand.base_mwh +
                 spec.demand.amplitude_mwh * hour_profile[h]) *
                day_factor * season_demand * demand_noise;

            const AuctionHour t{date, h};
            OrderBook book(t);
            const double renewables = solar_true + wind_true;
            if (renewables > 0.0)
                book.add(Side::supply, renewable_tick, renewables);
            for (std::size_t b = 0; b < spec.stack.size(); ++b)
                book.add(Side::supply, stack_ticks[b],
                         spec.stack[b].capacity_mwh);
            book.add(Side::demand, PriceTick::max(), demand_true);
            const double level_volume =
                spec.tail.volume_mwh / spec.tail.levels;
            for (PriceTick tick : tail_ticks)
                book.add(Side::demand, tick,
                         level_volume *
                             noise_factor(rng, spec.tail.noise_sigma));

            FundamentalForecasts fc;
            fc.solar_mwh =
                solar_true * noise_factor(rng, spec.forecast_noise_sigma);
            fc.wind_mwh =
                wind_true * noise_factor(rng, spec.forecast_noise_sigma);
            fc.demand_mwh =
                demand_true * noise_factor(rng, spec.forecast_noise_sigma);

            bundle.books.emplace(t, std::move(book));
            bundle.fundamentals.emplace(t, fc);
        }
    }
    return bundle;
}

} // namespace obpf
