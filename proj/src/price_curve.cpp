#include "obpf/price_curve.hpp"

#include <cmath>

namespace obpf {

PriceCurve aggregate_price_curve(const OrderBook& book,
                                 const PriceClassScheme& scheme) {
    PriceCurve curve;
    curve.t = book.t;
    curve.class_volumes.assign(scheme.class_count(), 0.0);
    for (const auto& [p, v] : book.supply())
        curve.class_volumes[scheme.class_of(p)] += v;
    for (const auto& [p, v] : book.demand())
        curve.class_volumes[scheme.class_of(p)] += v;
    curve.inelastic_demand = book.total_demand();
    return curve;
}

PriceTick clear_from_price_curve(const PriceCurve& curve,
                                 const PriceClassScheme& scheme) {
    if (curve.class_volumes.size() != scheme.class_count())
        throw DimensionMismatch("price curve has " +
                                std::to_string(curve.class_volumes.size()) +
                                " classes, scheme has " +
                                std::to_string(scheme.class_count()));
    double running = 0.0;
    for (std::size_t k = 0; k < curve.class_volumes.size(); ++k) {
        running += curve.class_volumes[k];
        if (running >= curve.inelastic_demand)
            return scheme.merged_bounds[k];
    }
    throw NoIntersection("class volumes cannot cover inelastic demand");
}

ApproximationReport
approximation_report(const std::vector<const OrderBook*>& books,
                     const PriceClassScheme& scheme) {
    if (books.empty())
        throw Error("approximation report over an empty book set");
    ApproximationReport report;
    report.n = books.size();
    double abs_sum = 0.0;
    std::vector<double> ape;
    ape.reserve(books.size());
    for (const OrderBook* book : books) {
        const double exact = clear_auction(*book).price.eur();
        const double approx =
            clear_from_price_curve(aggregate_price_curve(*book, scheme),
                                   scheme)
                .eur();
        const double err = std::abs(approx - exact);
        abs_sum += err;
        if (exact != 0.0)
            ape.push_back(err / std::abs(exact));
        else
            ++report.n_excluded;
    }
    report.mean_abs_error = abs_sum / static_cast<double>(books.size());
    report.mdape = ape.empty() ? 0.0 : lower_median(std::move(ape));
    return report;
}

} // namespace obpf
