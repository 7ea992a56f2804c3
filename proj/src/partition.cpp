#include "obpf/partition.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "obpf/hash.hpp"
#include "obpf/textio.hpp"

namespace obpf {

namespace {

// Increments of the averaged curve in its accumulation direction, paired
// with the price at which each increment lands.
template <typename Fn>
void walk_increments(const StepCurve& curve, Fn&& fn) {
    if (curve.kind == Side::supply) {
        double prev = 0.0;
        for (const auto& pt : curve.points) {
            fn(pt.price, pt.cumulative - prev);
            prev = pt.cumulative;
        }
    } else {
        double prev = 0.0;
        for (auto it = curve.points.rbegin(); it != curve.points.rend();
             ++it) {
            fn(it->price, it->cumulative - prev);
            prev = it->cumulative;
        }
    }
}

std::vector<PriceTick> with_endpoints(std::vector<PriceTick> bounds) {
    bounds.push_back(PriceTick::min());
    bounds.push_back(PriceTick::max());
    std::sort(bounds.begin(), bounds.end());
    bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
    return bounds;
}

} // namespace

std::size_t PriceClassScheme::class_of(PriceTick p) const {
    if (merged_bounds.size() < 2 || p < merged_bounds.front() ||
        p > merged_bounds.back())
        throw Error("price " + p.str() + " outside scheme range");
    const auto it =
        std::upper_bound(merged_bounds.begin(), merged_bounds.end(), p);
    const std::size_t idx =
        static_cast<std::size_t>(it - merged_bounds.begin()) - 1;
    return std::min(idx, class_count() - 1); // upper endpoint joins last class
}

std::pair<StepCurve, StepCurve>
average_curves(const std::vector<const OrderBook*>& books) {
    if (books.empty())
        throw Error("cannot average curves over an empty book set");
    std::map<PriceTick, double> supply_vol;
    std::map<PriceTick, double> demand_vol;
    for (const OrderBook* book : books) {
        for (const auto& [p, v] : book->supply())
            supply_vol[p] += v;
        for (const auto& [p, v] : book->demand())
            demand_vol[p] += v;
    }
    const double n = static_cast<double>(books.size());

    StepCurve supply;
    supply.kind = Side::supply;
    supply.points.reserve(supply_vol.size());
    double cum = 0.0;
    for (const auto& [p, v] : supply_vol) {
        cum += v / n;
        supply.points.push_back({p, cum});
    }

    StepCurve demand;
    demand.kind = Side::demand;
    demand.points.reserve(demand_vol.size());
    cum = 0.0;
    for (auto it = demand_vol.rbegin(); it != demand_vol.rend(); ++it) {
        cum += it->second / n;
        demand.points.push_back({it->first, cum});
    }
    std::reverse(demand.points.begin(), demand.points.end());

    return {std::move(supply), std::move(demand)};
}

std::vector<PriceTick> compute_boundaries(const StepCurve& averaged,
                                          double target_volume) {
    if (target_volume <= 0.0)
        throw ConfigError("target volume must be positive");
    std::vector<PriceTick> emitted;
    double acc = 0.0;
    walk_increments(averaged, [&](PriceTick price, double inc) {
        acc += inc;
        if (acc >= target_volume) {
            emitted.push_back(price);
            acc = 0.0;
        }
    });
    return with_endpoints(std::move(emitted));
}

double max_tick_increment(const StepCurve& averaged) {
    double largest = 0.0;
    walk_increments(averaged, [&](PriceTick, double inc) {
        largest = std::max(largest, inc);
    });
    return largest;
}

std::vector<PriceTick> merge_boundaries(std::vector<PriceTick> a,
                                        const std::vector<PriceTick>& b) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    return a;
}

PriceClassScheme fit_scheme(const std::vector<const OrderBook*>& train_books,
                            double target_volume) {
    const auto [supply, demand] = average_curves(train_books);
    PriceClassScheme scheme;
    scheme.supply_bounds = compute_boundaries(supply, target_volume);
    scheme.demand_bounds = compute_boundaries(demand, target_volume);
    scheme.merged_bounds =
        merge_boundaries(scheme.supply_bounds, scheme.demand_bounds);
    scheme.target_volume = target_volume;
    scheme.train_hash = books_hash(train_books);
    return scheme;
}

PriceClassScheme per_tick_scheme(const std::vector<const OrderBook*>& books) {
    if (books.empty())
        throw Error("cannot build a scheme from an empty book set");
    std::set<PriceTick> supply_ticks;
    std::set<PriceTick> demand_ticks;
    for (const OrderBook* book : books) {
        for (const auto& [p, v] : book->supply())
            supply_ticks.insert(p);
        for (const auto& [p, v] : book->demand())
            demand_ticks.insert(p);
    }
    PriceClassScheme scheme;
    scheme.supply_bounds = with_endpoints(
        std::vector<PriceTick>(supply_ticks.begin(), supply_ticks.end()));
    scheme.demand_bounds = with_endpoints(
        std::vector<PriceTick>(demand_ticks.begin(), demand_ticks.end()));
    scheme.merged_bounds =
        merge_boundaries(scheme.supply_bounds, scheme.demand_bounds);
    scheme.target_volume = 0.0;
    scheme.train_hash = books_hash(books);
    return scheme;
}

std::uint64_t books_hash(const std::vector<const OrderBook*>& books) {
    Hasher h;
    for (const OrderBook* book : books) {
        h.add_i64(book->t.date.days_since_epoch());
        h.add_i64(book->t.hour);
        h.add("S");
        for (const auto& [p, v] : book->supply()) {
            h.add_i64(p.tenths());
            h.add_double(v);
        }
        h.add("D");
        for (const auto& [p, v] : book->demand()) {
            h.add_i64(p.tenths());
            h.add_double(v);
        }
    }
    return h.value();
}

void save_scheme(const PriceClassScheme& scheme,
                 const std::filesystem::path& path) {
    std::string out;
    out += "# obpf price class scheme v1\n";
    out += "# vstar=" + format_double(scheme.target_volume) + "\n";
    out += "# train_hash=" + hash_hex(scheme.train_hash) + "\n";
    out += "side,index,boundary_price\n";
    for (std::size_t i = 0; i < scheme.supply_bounds.size(); ++i)
        out += "S," + std::to_string(i) + "," +
               scheme.supply_bounds[i].str() + "\n";
    for (std::size_t i = 0; i < scheme.demand_bounds.size(); ++i)
        out += "D," + std::to_string(i) + "," +
               scheme.demand_bounds[i].str() + "\n";
    write_file_atomic(path, out);
}

namespace {

void check_bound_list(const std::vector<PriceTick>& bounds,
                      const std::filesystem::path& path) {
    if (bounds.size() < 2 || bounds.front() != PriceTick::min() ||
        bounds.back() != PriceTick::max() ||
        !std::is_sorted(bounds.begin(), bounds.end()) ||
        std::adjacent_find(bounds.begin(), bounds.end()) != bounds.end())
        throw MalformedRow("scheme file " + path.string() +
                           ": boundary list must be strictly ascending and "
                           "span the full price grid");
}

} // namespace

PriceClassScheme load_scheme(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    PriceClassScheme scheme;
    bool saw_vstar = false, saw_hash = false, saw_header = false;
    for (std::string_view line : split_lines(text)) {
        if (line.empty())
            continue;
        if (line.starts_with("# vstar=")) {
            scheme.target_volume = parse_double(line.substr(8));
            saw_vstar = true;
            continue;
        }
        if (line.starts_with("# train_hash=")) {
            scheme.train_hash = parse_hash_hex(line.substr(13));
            saw_hash = true;
            continue;
        }
        if (line.starts_with("#"))
            continue;
        if (!saw_header) {
            if (line != "side,index,boundary_price")
                throw MalformedRow("scheme file " + path.string() +
                                   ": unexpected header '" +
                                   std::string(line) + "'");
            saw_header = true;
            continue;
        }
        const auto fields = split_csv(line);
        if (fields.size() != 3)
            throw MalformedRow("scheme file " + path.string() +
                               ": bad row '" + std::string(line) + "'");
        const PriceTick price = PriceTick::parse(fields[2]);
        if (fields[0] == "S")
            scheme.supply_bounds.push_back(price);
        else if (fields[0] == "D")
            scheme.demand_bounds.push_back(price);
        else
            throw MalformedRow("scheme file " + path.string() +
                               ": side must be S or D, got '" +
                               std::string(fields[0]) + "'");
    }
    if (!saw_vstar || !saw_hash || !saw_header)
        throw MalformedRow("scheme file " + path.string() +
                           ": missing vstar/train_hash/header");
    check_bound_list(scheme.supply_bounds, path);
    check_bound_list(scheme.demand_bounds, path);
    scheme.merged_bounds =
        merge_boundaries(scheme.supply_bounds, scheme.demand_bounds);
    return scheme;
}

} // namespace obpf
