#include "obpf/data_io.hpp"

#include "obpf/textio.hpp"

namespace obpf {

namespace {

std::vector<std::string_view> body_rows(const std::string& text,
                                        std::string_view want_header,
                                        const std::filesystem::path& path) {
    auto lines = split_lines(text);
    if (lines.empty() || lines[0] != want_header)
        throw MalformedRow(path.string() + ": expected header '" +
                           std::string(want_header) + "'");
    lines.erase(lines.begin());
    return lines;
}

AuctionHour parse_hour_key(std::string_view date_field,
                           std::string_view hour_field,
                           const std::filesystem::path& path,
                           std::size_t row) {
    AuctionHour t{Date::parse(date_field),
                  static_cast<int>(parse_long(hour_field))};
    if (t.hour < 0 || t.hour > 23)
        throw MalformedRow(path.string() + " row " + std::to_string(row) +
                           ": hour must be 0..23");
    return t;
}

} // namespace

void DatasetBundle::validate() const {
    std::size_t missing = 0;
    const AuctionHour* first = nullptr;
    for (const auto& [t, book] : books) {
        if (fundamentals.count(t) == 0) {
            if (!first)
                first = &t;
            ++missing;
        }
    }
    if (missing > 0)
        throw MissingData("bundle: " + std::to_string(missing) +
                          " book hours lack fundamentals, first " +
                          first->str());
}

BookStore load_books(const std::filesystem::path& path, bool strict) {
    const std::string text = read_file(path);
    const auto rows =
        body_rows(text, "date,hour,side,price,volume_mwh", path);
    BookStore books;
    std::size_t row_no = 1;
    for (std::string_view line : rows) {
        ++row_no;
        if (line.empty())
            continue;
        const auto f = split_csv(line);
        if (f.size() != 5)
            throw MalformedRow(path.string() + " row " +
                               std::to_string(row_no) + ": expected 5 fields");
        const AuctionHour t = parse_hour_key(f[0], f[1], path, row_no);
        Side side;
        if (f[2] == "S")
            side = Side::supply;
        else if (f[2] == "D")
            side = Side::demand;
        else
            throw MalformedRow(path.string() + " row " +
                               std::to_string(row_no) +
                               ": side must be S or D");
        PriceTick price;
        try {
            price = PriceTick::parse(f[3], strict);
        } catch (const Error& e) {
            throw MalformedRow(path.string() + " row " +
                               std::to_string(row_no) + ": " + e.what());
        }
        const double volume = parse_double(f[4]);
        if (volume < 0.0)
            throw MalformedRow(path.string() + " row " +
                               std::to_string(row_no) + ": negative volume");
        auto [it, inserted] = books.try_emplace(t, t);
        it->second.add(side, price, volume);
    }
    return books;
}

void save_books(const BookStore& books, const std::filesystem::path& path) {
    std::string out = "date,hour,side,price,volume_mwh\n";
    for (const auto& [t, book] : books) {
        const std::string key = t.date.str() + "," + std::to_string(t.hour);
        for (const auto& [p, v] : book.supply())
            out += key + ",S," + p.str() + "," + format_double(v) + "\n";
        for (const auto& [p, v] : book.demand())
            out += key + ",D," + p.str() + "," + format_double(v) + "\n";
    }
    write_file_atomic(path, out);
}

FundamentalsStore load_fundamentals(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    const auto rows =
        body_rows(text, "date,hour,solar_mwh,wind_mwh,demand_mwh", path);
    FundamentalsStore fundamentals;
    std::size_t row_no = 1;
    for (std::string_view line : rows) {
        ++row_no;
        if (line.empty())
            continue;
        const auto f = split_csv(line);
        if (f.size() != 5)
            throw MalformedRow(path.string() + " row " +
                               std::to_string(row_no) + ": expected 5 fields");
        const AuctionHour t = parse_hour_key(f[0], f[1], path, row_no);
        FundamentalForecasts fc{parse_double(f[2]), parse_double(f[3]),
                                parse_double(f[4])};
        if (fc.solar_mwh < 0.0 || fc.wind_mwh < 0.0 || fc.demand_mwh < 0.0)
            throw MalformedRow(path.string() + " row " +
                               std::to_string(row_no) +
                               ": negative infeed or demand");
        if (!fundamentals.emplace(t, fc).second)
            throw MalformedRow(path.string() + " row " +
                               std::to_string(row_no) + ": duplicate hour " +
                               t.str());
    }
    return fundamentals;
}

void save_fundamentals(const FundamentalsStore& fundamentals,
                       const std::filesystem::path& path) {
    std::string out = "date,hour,solar_mwh,wind_mwh,demand_mwh\n";
    for (const auto& [t, fc] : fundamentals) {
        out += t.date.str() + "," + std::to_string(t.hour) + "," +
               format_double(fc.solar_mwh) + "," + format_double(fc.wind_mwh) +
               "," + format_double(fc.demand_mwh) + "\n";
    }
    write_file_atomic(path, out);
}

CalendarConfig load_calendars(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    const auto rows = body_rows(text, "kind,date", path);
    CalendarConfig cal;
    std::size_t row_no = 1;
    for (std::string_view line : rows) {
        ++row_no;
        if (line.empty())
            continue;
        const auto f = split_csv(line);
        if (f.size() != 2)
            throw MalformedRow(path.string() + " row " +
                               std::to_string(row_no) + ": expected 2 fields");
        const Date d = Date::parse(f[1]);
        if (f[0] == "holiday")
            cal.holidays.insert(d);
        else if (f[0] == "bridge")
            cal.bridge_days.insert(d);
        else
            throw MalformedRow(path.string() + " row " +
                               std::to_string(row_no) +
                               ": kind must be holiday or bridge");
    }
    return cal;
}

void save_calendars(const CalendarConfig& cal,
                    const std::filesystem::path& path) {
    std::string out = "kind,date\n";
    for (Date d : cal.holidays)
        out += "holiday," + d.str() + "\n";
    for (Date d : cal.bridge_days)
        out += "bridge," + d.str() + "\n";
    write_file_atomic(path, out);
}

DatasetBundle load_bundle(const std::filesystem::path& dir) {
    DatasetBundle bundle;
    bundle.books = load_books(dir / "books.csv");
    bundle.fundamentals = load_fundamentals(dir / "fundamentals.csv");
    bundle.calendars = load_calendars(dir / "calendars.csv");
    bundle.validate();
    return bundle;
}

void save_bundle(const DatasetBundle& bundle,
                 const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_books(bundle.books, dir / "books.csv");
    save_fundamentals(bundle.fundamentals, dir / "fundamentals.csv");
    save_calendars(bundle.calendars, dir / "calendars.csv");
}

} // namespace obpf
