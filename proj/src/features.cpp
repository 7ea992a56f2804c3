#include "obpf/features.hpp"

#include <algorithm>

#include "obpf/textio.hpp"

namespace obpf {

namespace {

std::string curve_column_name(std::size_t index, std::size_t count) {
    std::size_t width = 3;
    for (std::size_t c = count; c >= 1000; c /= 10)
        ++width;
    std::string digits = std::to_string(index + 1);
    return "ref_curve_" + std::string(width - digits.size(), '0') + digits;
}

void append_calendar(std::vector<double>& out, const CalendarInfo& info) {
    const auto vals = info.values();
    out.insert(out.end(), vals.begin(), vals.end());
}

} // namespace

std::vector<std::string> feature_names(const PriceClassScheme& scheme) {
    std::vector<std::string> names;
    const std::size_t m = scheme.class_count();
    names.reserve(m + 1 + 6 + 2 * CalendarInfo::size);
    for (std::size_t k = 0; k < m; ++k)
        names.push_back(curve_column_name(k, m));
    names.emplace_back("ref_inelastic_demand");
    names.emplace_back("solar_fc");
    names.emplace_back("wind_fc");
    names.emplace_back("demand_fc");
    names.emplace_back("ref_solar_fc");
    names.emplace_back("ref_wind_fc");
    names.emplace_back("ref_demand_fc");
    for (auto n : CalendarInfo::names())
        names.emplace_back(n);
    for (auto n : CalendarInfo::names())
        names.emplace_back("ref_" + std::string(n));
    return names;
}

bool is_curve_feature(std::string_view name) {
    return name.starts_with("ref_curve_");
}

AssembledRow assemble_features(AuctionHour t, const BookStore& books,
                               const FundamentalsStore& fundamentals,
                               const CalendarConfig& cal,
                               const PriceClassScheme& scheme) {
    const auto fund_t = fundamentals.find(t);
    if (fund_t == fundamentals.end())
        throw MissingData("no fundamentals for " + t.str());

    const auto usable = [&](Date e) {
        const AuctionHour candidate{e, t.hour};
        return books.count(candidate) != 0 &&
               fundamentals.count(candidate) != 0;
    };
    const Date ref_date = reference_date(t.date, cal, usable);
    const AuctionHour ref{ref_date, t.hour};
    const OrderBook& ref_book = books.at(ref);
    const FundamentalForecasts& fund_ref = fundamentals.at(ref);

    const PriceCurve curve = aggregate_price_curve(ref_book, scheme);

    AssembledRow row;
    row.t = t;
    row.reference = ref;
    row.values.reserve(scheme.class_count() + 7 + 2 * CalendarInfo::size);
    row.values.insert(row.values.end(), curve.class_volumes.begin(),
                      curve.class_volumes.end());
    row.values.push_back(curve.inelastic_demand);
    row.values.push_back(fund_t->second.solar_mwh);
    row.values.push_back(fund_t->second.wind_mwh);
    row.values.push_back(fund_t->second.demand_mwh);
    row.values.push_back(fund_ref.solar_mwh);
    row.values.push_back(fund_ref.wind_mwh);
    row.values.push_back(fund_ref.demand_mwh);
    append_calendar(row.values, calendar_features(t.date, t.hour, cal));
    append_calendar(row.values,
                    calendar_features(ref.date, ref.hour, cal));
    return row;
}

double target_price(const OrderBook& book, const PriceClassScheme& scheme) {
    return clear_from_price_curve(aggregate_price_curve(book, scheme), scheme)
        .eur();
}

FeatureMatrix build_feature_matrix(const BookStore& books,
                                   const FundamentalsStore& fundamentals,
                                   const CalendarConfig& cal,
                                   const PriceClassScheme& scheme,
                                   BuildReport* report) {
    BuildReport local;
    std::vector<AssembledRow> rows;
    std::vector<double> targets;
    rows.reserve(books.size());
    for (const auto& [t, book] : books) {
        try {
            rows.push_back(
                assemble_features(t, books, fundamentals, cal, scheme));
        } catch (const NoReference&) {
            ++local.skipped_no_reference;
            continue;
        } catch (const MissingData&) {
            ++local.skipped_missing_data;
            continue;
        }
        targets.push_back(target_price(book, scheme));
    }
    local.built = rows.size();
    if (report)
        *report = local;

    FeatureMatrix fm;
    fm.names = feature_names(scheme);
    fm.hours.reserve(rows.size());
    fm.X.resize(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(fm.names.size()));
    fm.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].values.size() != fm.names.size())
            throw DimensionMismatch("feature row width mismatch at " +
                                    rows[i].t.str());
        fm.hours.push_back(rows[i].t);
        for (std::size_t j = 0; j < fm.names.size(); ++j)
            fm.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                rows[i].values[j];
        fm.y(static_cast<Eigen::Index>(i)) = targets[i];
    }
    return fm;
}

void save_feature_matrix(const FeatureMatrix& fm,
                         const std::filesystem::path& path) {
    std::string out = "date,hour";
    for (const auto& name : fm.names)
        out += "," + name;
    out += ",target\n";
    for (std::size_t i = 0; i < fm.rows(); ++i) {
        out += fm.hours[i].date.str();
        out += ',';
        out += std::to_string(fm.hours[i].hour);
        for (std::size_t j = 0; j < fm.cols(); ++j) {
            out += ',';
            out += format_double(fm.X(static_cast<Eigen::Index>(i),
                                      static_cast<Eigen::Index>(j)));
        }
        out += ',';
        out += format_double(fm.y(static_cast<Eigen::Index>(i)));
        out += '\n';
    }
    write_file_atomic(path, out);
}

FeatureMatrix load_feature_matrix(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    const auto lines = split_lines(text);
    if (lines.empty())
        throw MalformedRow("feature file " + path.string() + " is empty");

    const auto header = split_csv(lines[0]);
    if (header.size() < 4 || header[0] != "date" || header[1] != "hour" ||
        header.back() != "target")
        throw MalformedRow("feature file " + path.string() +
                           ": header must be date,hour,<features>,target");

    FeatureMatrix fm;
    for (std::size_t j = 2; j + 1 < header.size(); ++j)
        fm.names.emplace_back(header[j]);

    const std::size_t n = lines.size() - 1;
    fm.hours.reserve(n);
    fm.X.resize(static_cast<Eigen::Index>(n),
                static_cast<Eigen::Index>(fm.names.size()));
    fm.y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto fields = split_csv(lines[i + 1]);
        if (fields.size() != header.size())
            throw MalformedRow("feature file " + path.string() + " row " +
                               std::to_string(i + 2) + ": expected " +
                               std::to_string(header.size()) + " fields");
        AuctionHour t{Date::parse(fields[0]),
                      static_cast<int>(parse_long(fields[1]))};
        if (t.hour < 0 || t.hour > 23)
            throw MalformedRow("feature file " + path.string() + " row " +
                               std::to_string(i + 2) + ": bad hour");
        if (!fm.hours.empty() && !(fm.hours.back() < t))
            throw MalformedRow("feature file " + path.string() +
                               ": rows must be in ascending hour order");
        fm.hours.push_back(t);
        for (std::size_t j = 0; j < fm.names.size(); ++j)
            fm.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                parse_double(fields[j + 2]);
        fm.y(static_cast<Eigen::Index>(i)) = parse_double(fields.back());
    }
    return fm;
}

} // namespace obpf
