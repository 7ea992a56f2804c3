#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "obpf/data_io.hpp"

namespace obpf {

// One technology block of the merit order: capacity offered at its marginal
// cost, every hour.
struct TechBlock {
    std::string name;
    double capacity_mwh = 0.0;
    double marginal_cost_eur = 0.0;
};

struct SolarSpec {
    double peak_mwh = 6000.0;
    double cloud_sigma = 0.25; // day-level lognormal
};

struct WindSpec {
    double level_mwh = 4500.0;
    double day_sigma = 0.55;
    double hour_sigma = 0.20;
};

struct DemandSpec {
    double base_mwh = 9000.0;
    double amplitude_mwh = 5000.0;
    double noise_sigma = 0.04;
    double saturday_factor = 0.86;
    double sunday_factor = 0.78;
};

// Price-sensitive buyers far above every marginal cost; they keep demand
// curves from being a single block without ever moving the crossing.
struct ElasticTailSpec {
    double volume_mwh = 1200.0;
    double price_min_eur = 185.0;
    double price_max_eur = 400.0;
    int levels = 6;
    double noise_sigma = 0.15;
};

struct SyntheticSpec {
    Date start;
    Date end; // inclusive
    std::uint64_t seed = 1;
    double renewable_bid_price = -10.0;
    double forecast_noise_sigma = 0.05; // lognormal, mean one
    std::vector<TechBlock> stack;
    SolarSpec solar;
    WindSpec wind;
    DemandSpec demand;
    ElasticTailSpec tail;

    void validate() const; // throws ConfigError
};

// Two years of hourly auctions with a German-style holiday calendar.
SyntheticSpec default_synthetic_spec();

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);
void save_synthetic_spec(const SyntheticSpec& spec,
                         const std::filesystem::path& path);

// Deterministic in the spec (including its seed): order books from true
// renewables and demand, fundamentals as noisy forecasts of the truth,
// holidays and bridge days for the covered years.
DatasetBundle generate_synthetic(const SyntheticSpec& spec);

} // namespace obpf
