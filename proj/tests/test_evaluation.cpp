#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "obpf/evaluation.hpp"
#include "obpf/rng.hpp"
#include "oracles.hpp"

using namespace obpf;
using oracle::at;

namespace {

// Feature matrix with a planted linear signal y = 3*x0 + noise over k noise
// columns, hours counted upward from Jan 1st.
FeatureMatrix planted_matrix(int n, int d, double noise, std::uint64_t seed) {
    FeatureMatrix fm;
    for (int j = 0; j < d; ++j)
        fm.names.push_back("f" + std::to_string(j));
    fm.X.resize(n, d);
    fm.y.resize(n);
    RandomStream rng(seed);
    Date day(2021, 1, 1);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j)
            fm.X(i, j) = rng.uniform(-1.0, 1.0);
        fm.y(i) = 3.0 * fm.X(i, 0) + noise * rng.normal();
        fm.hours.push_back({day.plus_days(i / 24), i % 24});
    }
    return fm;
}

} // namespace

TEST_CASE("metric formulas, hand case") {
    const std::vector<double> pred = {1.0, 2.0, 3.0};
    const std::vector<double> truth = {1.0, 1.0, 2.0};
    const MetricReport r = compute_metrics(pred, truth);
    CHECK(r.mae == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(r.rmse == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
    CHECK(r.mdape == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.n == 3);
    CHECK(r.n_excluded == 0);
}

TEST_CASE("metric edge cases") {
    const std::vector<double> same = {4.0, -2.0, 0.5};
    const MetricReport r = compute_metrics(same, same);
    CHECK(r.rmse == 0.0);
    CHECK(r.mae == 0.0);
    CHECK(r.mdape == 0.0);

    // zero truth rows leave the MdAPE pool and are counted
    const std::vector<double> pred = {1.0, 2.0};
    const std::vector<double> truth = {0.0, 4.0};
    const MetricReport z = compute_metrics(pred, truth);
    CHECK(z.n_excluded == 1);
    CHECK(z.mdape == doctest::Approx(0.5));

    CHECK_THROWS_AS(
        compute_metrics(std::vector<double>{1.0}, std::vector<double>{}),
        DimensionMismatch);
    CHECK_THROWS_AS(
        compute_metrics(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST_CASE("metrics match direct formula evaluation on random vectors") {
    RandomStream rng(1000);
    for (int rep = 0; rep < 1000; ++rep) {
        const int n = 1 + static_cast<int>(rng.index(40));
        std::vector<double> pred(n), truth(n);
        for (int i = 0; i < n; ++i) {
            pred[i] = rng.uniform(-100.0, 100.0);
            truth[i] = rng.uniform(-100.0, 100.0);
        }
        const MetricReport r = compute_metrics(pred, truth);
        double se = 0.0, ae = 0.0;
        std::vector<double> apes;
        for (int i = 0; i < n; ++i) {
            const double e = pred[i] - truth[i];
            se += e * e;
            ae += std::abs(e);
            if (truth[i] != 0.0)
                apes.push_back(std::abs(e) / std::abs(truth[i]));
        }
        REQUIRE(std::abs(r.rmse - std::sqrt(se / n)) < 1e-12);
        REQUIRE(std::abs(r.mae - ae / n) < 1e-12);
        std::sort(apes.begin(), apes.end());
        const double med = apes[(apes.size() - 1) / 2];
        REQUIRE(std::abs(r.mdape - med) < 1e-12);
    }
}

TEST_CASE("lower median convention") {
    CHECK(lower_median({5.0}) == 5.0);
    CHECK(lower_median({1.0, 2.0}) == 1.0);
    CHECK(lower_median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(lower_median({4.0, 1.0, 3.0, 2.0}) == 2.0);
}

TEST_CASE("chronological split takes the ceiling of the test share") {
    const DataSplit s = chronological_split(100, 0.2);
    REQUIRE(s.train_rows.size() == 80);
    REQUIRE(s.test_rows.size() == 20);
    CHECK(s.train_rows.front() == 0);
    CHECK(s.train_rows.back() == 79);
    CHECK(s.test_rows.front() == 80);
    CHECK(s.test_rows.back() == 99);

    const DataSplit t = chronological_split(3, 0.5);
    CHECK(t.train_rows.size() == 1);
    CHECK(t.test_rows.size() == 2);

    // fraction zero keeps everything in training
    const DataSplit all = chronological_split(5, 0.0);
    CHECK(all.train_rows.size() == 5);
    CHECK(all.test_rows.empty());

    CHECK_THROWS_AS(chronological_split(5, 1.0), ConfigError);
    CHECK_THROWS_AS(chronological_split(5, -0.1), ConfigError);
}

TEST_CASE("cv folds are contiguous, balanced and cover every row once") {
    for (std::size_t n : {10u, 23u, 100u}) {
        for (int k : {2, 5, 7}) {
            if (n < static_cast<std::size_t>(k))
                continue;
            const auto folds = cv_folds(n, k);
            REQUIRE(folds.size() == static_cast<std::size_t>(k));
            std::vector<int> holdout_count(n, 0);
            std::vector<int> train_count(n, 0);
            std::size_t min_size = n, max_size = 0;
            for (const auto& fold : folds) {
                for (int i : fold.test_rows)
                    ++holdout_count[static_cast<std::size_t>(i)];
                for (int i : fold.train_rows)
                    ++train_count[static_cast<std::size_t>(i)];
                // contiguous block
                for (std::size_t j = 1; j < fold.test_rows.size(); ++j)
                    CHECK(fold.test_rows[j] == fold.test_rows[j - 1] + 1);
                min_size = std::min(min_size, fold.test_rows.size());
                max_size = std::max(max_size, fold.test_rows.size());
            }
            CHECK(max_size - min_size <= 1);
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(holdout_count[i] == 1);
                CHECK(train_count[i] == k - 1);
            }
        }
    }
    CHECK_THROWS_AS(cv_folds(10, 1), ConfigError);
    CHECK_THROWS_AS(cv_folds(3, 5), Error);
}

TEST_CASE("naive benchmark mapping cases") {
    CalendarConfig cal;
    cal.holidays.insert(Date::parse("2021-03-08")); // a Monday holiday
    std::map<AuctionHour, double> history;
    Date d = Date::parse("2021-02-22");
    // three weeks of distinguishable prices
    for (int i = 0; i < 21; ++i)
        for (int h = 0; h < 24; ++h)
            history[{d.plus_days(i), h}] = i * 100.0 + h;

    // Wednesday -> Tuesday, same hour
    const Date wed = Date::parse("2021-03-10");
    CHECK(naive_forecast({wed, 10}, history, cal) ==
          history.at({Date::parse("2021-03-09"), 10}));

    // Monday -> previous Monday, not the preceding Friday
    const Date mon = Date::parse("2021-03-01");
    CHECK(naive_forecast({mon, 7}, history, cal) ==
          history.at({Date::parse("2021-02-22"), 7}));

    // Sunday -> previous Sunday
    const Date sun = Date::parse("2021-03-07");
    CHECK(naive_forecast({sun, 0}, history, cal) ==
          history.at({Date::parse("2021-02-28"), 0}));

    // the Monday holiday behaves like a Sunday: nearest same-type day in the
    // previous week is the Sunday right before it
    CHECK(naive_forecast({Date::parse("2021-03-08"), 12}, history, cal) ==
          history.at({Date::parse("2021-03-07"), 12}));

    // Tuesday after the Monday holiday is a workday and still takes the
    // previous calendar day even though it was a holiday
    CHECK(naive_forecast({Date::parse("2021-03-09"), 3}, history, cal) ==
          history.at({Date::parse("2021-03-08"), 3}));

    // missing history
    std::map<AuctionHour, double> empty;
    CHECK_THROWS_AS(naive_forecast({wed, 10}, empty, cal), MissingHistory);

    // never reads the future: erase everything before the hour and fail
    std::map<AuctionHour, double> only_future;
    for (int h = 0; h < 24; ++h)
        only_future[{wed.plus_days(1), h}] = 1.0;
    CHECK_THROWS_AS(naive_forecast({wed, 10}, only_future, cal),
                    MissingHistory);
}

TEST_CASE("column selection per feature mode") {
    std::vector<std::string> names = {"ref_curve_000", "ref_curve_001",
                                      "solar_fc", "year"};
    ModelConfig all;
    all.id = "a";
    CHECK(columns_for_config(names, all, nullptr) ==
          std::vector<int>{0, 1, 2, 3});

    ModelConfig nc = all;
    nc.features = FeatureMode::no_curve;
    CHECK(columns_for_config(names, nc, nullptr) == std::vector<int>{2, 3});

    ModelConfig sel = all;
    sel.features = FeatureMode::selected;
    sel.n_top_features = 2;
    FeatureImportance imp;
    imp.names = names;
    imp.scores = {0.1, 0.4, 0.45, 0.05};
    CHECK(columns_for_config(names, sel, &imp) == std::vector<int>{1, 2});
    CHECK_THROWS_AS(columns_for_config(names, sel, nullptr), ConfigError);
}

TEST_CASE("grid search prefers the data-generating model family") {
    const FeatureMatrix fm = planted_matrix(400, 3, 0.01, 92);
    std::vector<int> rows(fm.rows());
    for (std::size_t i = 0; i < rows.size(); ++i)
        rows[i] = static_cast<int>(i);

    ModelConfig linear;
    linear.id = "linear";
    ModelConfig stump;
    stump.id = "stumps";
    stump.family = ModelFamily::random_forest;
    stump.rf = {5, 1.0, 0.45}; // a handful of nearly-single-split trees

    const GridResult result =
        grid_search(fm, rows, {linear, stump}, nullptr, 5, 1, 1);
    REQUIRE(result.cells.size() == 2);
    REQUIRE(result.best == 0);
    CHECK(result.cells[0].mean_rmse < result.cells[1].mean_rmse);
    CHECK(result.cells[0].fold_rmse.size() == 5);
    // OLS on its own data generating process is nearly exact
    CHECK(result.cells[0].mean_rmse < 0.1);
}

TEST_CASE("serial and parallel grid searches agree exactly") {
    const FeatureMatrix fm = planted_matrix(300, 4, 0.5, 17);
    std::vector<int> rows(fm.rows());
    for (std::size_t i = 0; i < rows.size(); ++i)
        rows[i] = static_cast<int>(i);

    ModelConfig ols_cfg;
    ols_cfg.id = "ols";
    ModelConfig rf_cfg;
    rf_cfg.id = "rf";
    rf_cfg.family = ModelFamily::random_forest;
    rf_cfg.rf = {20, 0.5, 0.05};
    ModelConfig mlp_cfg;
    mlp_cfg.id = "mlp";
    mlp_cfg.family = ModelFamily::mlp;
    mlp_cfg.mlp.layers = {6};
    mlp_cfg.mlp.epochs = 10;
    mlp_cfg.mlp.batch_size = 32;

    const std::vector<ModelConfig> grid = {ols_cfg, rf_cfg, mlp_cfg};
    const GridResult serial = grid_search(fm, rows, grid, nullptr, 4, 7, 1);
    const GridResult parallel = grid_search(fm, rows, grid, nullptr, 4, 7, 8);
    REQUIRE(serial.cells.size() == parallel.cells.size());
    CHECK(serial.best == parallel.best);
    for (std::size_t c = 0; c < serial.cells.size(); ++c) {
        CHECK(serial.cells[c].failed == parallel.cells[c].failed);
        CHECK(serial.cells[c].mean_rmse == parallel.cells[c].mean_rmse);
        REQUIRE(serial.cells[c].fold_rmse.size() ==
                parallel.cells[c].fold_rmse.size());
        for (std::size_t f = 0; f < serial.cells[c].fold_rmse.size(); ++f)
            CHECK(serial.cells[c].fold_rmse[f] ==
                  parallel.cells[c].fold_rmse[f]);
    }
}

TEST_CASE("a failing cell is flagged and cannot win") {
    const FeatureMatrix fm = planted_matrix(60, 2, 0.1, 3);
    std::vector<int> rows(fm.rows());
    for (std::size_t i = 0; i < rows.size(); ++i)
        rows[i] = static_cast<int>(i);

    ModelConfig ok;
    ok.id = "ok";
    ModelConfig diverging;
    diverging.id = "diverges";
    diverging.family = ModelFamily::mlp;
    diverging.mlp.layers = {8};
    diverging.mlp.epochs = 60;
    diverging.mlp.optimizer = Optimizer::sgd;
    diverging.mlp.learning_rate = 1e12; // guaranteed blow-up

    const GridResult result =
        grid_search(fm, rows, {diverging, ok}, nullptr, 3, 1, 2);
    REQUIRE(result.cells.size() == 2);
    CHECK(result.cells[0].failed);
    CHECK(!result.cells[0].error.empty());
    CHECK(result.best == 1);
}

TEST_CASE("cross validate is the single-config grid search") {
    const FeatureMatrix fm = planted_matrix(100, 2, 0.2, 5);
    std::vector<int> rows(fm.rows());
    for (std::size_t i = 0; i < rows.size(); ++i)
        rows[i] = static_cast<int>(i);
    ModelConfig cfg;
    cfg.id = "lin";
    const CvCell cell = cross_validate(fm, rows, cfg, nullptr, 5, 11, 1);
    const GridResult grid = grid_search(fm, rows, {cfg}, nullptr, 5, 11, 1);
    CHECK(cell.mean_rmse == grid.cells[0].mean_rmse);
    CHECK(cell.fold_rmse == grid.cells[0].fold_rmse);
}

TEST_CASE("suite evaluation produces naive plus per-model rows") {
    const FeatureMatrix fm = planted_matrix(24 * 40, 3, 0.05, 44);
    const DataSplit split = chronological_split(fm.rows(), 0.25);
    ModelConfig cfg;
    cfg.id = "lin";
    auto [X, y] = materialize(fm, split.train_rows, {0, 1, 2});
    const ModelPtr model = fit_model(cfg, X, y, fm.names, 1, 1);

    CalendarConfig cal;
    const auto rows =
        evaluate_suite(fm, split, {{"lin", model.get()}}, cal);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].model == "naive");
    CHECK(rows[0].split == "train");
    CHECK(rows[1].model == "naive");
    CHECK(rows[1].split == "test");
    CHECK(rows[2].model == "lin");
    CHECK(rows[2].split == "train");
    CHECK(rows[3].model == "lin");
    CHECK(rows[3].split == "test");
    // the model sees planted linear data; the naive benchmark is hopeless
    CHECK(rows[3].metrics.rmse < rows[1].metrics.rmse);
    // naive skips the first day (no history) but scores the rest
    CHECK(rows[0].metrics.n > 0);
    CHECK(rows[0].metrics.n < split.train_rows.size());
}
