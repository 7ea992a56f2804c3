// End-to-end acceptance checks. Each numbered line states one requirement of
// the build and whether it holds; the binary exits nonzero when any check
// fails. argv[1] is the command line tool, argv[2] the shipped config
// directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "obpf/clearing.hpp"
#include "obpf/data_io.hpp"
#include "obpf/evaluation.hpp"
#include "obpf/hash.hpp"
#include "obpf/metrics.hpp"
#include "obpf/models/forest.hpp"
#include "obpf/models/mlp.hpp"
#include "obpf/models/ols.hpp"
#include "obpf/partition.hpp"
#include "obpf/price_curve.hpp"
#include "obpf/rng.hpp"
#include "obpf/synthetic.hpp"
#include "obpf/textio.hpp"

#include "oracles.hpp"

using namespace obpf;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& what,
            const std::string& detail = "") {
    if (!pass)
        ++g_failures;
    std::printf("criterion %2d: %s  %s%s%s\n", id, pass ? "PASS" : "FAIL",
                what.c_str(), detail.empty() ? "" : "  -- ", detail.c_str());
    std::fflush(stdout);
}

struct Stopwatch {
    std::chrono::steady_clock::time_point t0 =
        std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(
                   std::chrono::steady_clock::now() - t0)
            .count();
    }
};

int hardware_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ---- clearing / curves ----------------------------------------------------

// Cumulative volumes on the full grid straight from the book maps, summed in
// the same price direction the curves accumulate in.
struct GridSums {
    std::vector<double> supply, demand;

    explicit GridSums(const OrderBook& book)
        : supply(PriceTick::grid_size, 0.0),
          demand(PriceTick::grid_size, 0.0) {
        for (const auto& [p, v] : book.supply())
            supply[static_cast<std::size_t>(p.grid_index())] += v;
        for (const auto& [p, v] : book.demand())
            demand[static_cast<std::size_t>(p.grid_index())] += v;
        for (std::size_t i = 1; i < supply.size(); ++i)
            supply[i] += supply[i - 1];
        for (std::size_t i = demand.size() - 1; i-- > 0;)
            demand[i] += demand[i + 1];
    }
};

void check_1_clearing_oracle() {
    Stopwatch sw;
    RandomStream rng(20240101);
    int mismatches = 0;
    for (int k = 0; k < 1000; ++k) {
        const OrderBook book = oracle::random_book(rng, 200);
        const GridSums sums(book);
        std::optional<std::pair<PriceTick, double>> scan;
        for (int i = 0; i < PriceTick::grid_size; ++i) {
            const auto u = static_cast<std::size_t>(i);
            if (sums.supply[u] >= sums.demand[u]) {
                scan = {PriceTick::from_tenths(PriceTick::min_tenths + i),
                        std::min(sums.supply[u], sums.demand[u])};
                break;
            }
        }
        try {
            const ClearingResult r = clear_auction(book);
            if (!scan || r.price != scan->first || r.volume != scan->second)
                ++mismatches;
        } catch (const NoIntersection&) {
            if (scan)
                ++mismatches;
        }
    }
    const double elapsed = sw.seconds();
    report(1, mismatches == 0 && elapsed < 30.0,
           "clearing equals the full-grid scan on 1000 random books",
           std::to_string(mismatches) + " mismatches, " + fmt(elapsed) + " s");
}

void check_2_curve_construction() {
    RandomStream rng(20240202);
    int mismatches = 0;
    for (int k = 0; k < 100; ++k) {
        const OrderBook book = oracle::random_book(rng, 200);
        const GridSums sums(book);
        const StepCurve s = build_supply_curve(book);
        const StepCurve d = build_demand_curve(book);
        for (int i = 0; i < PriceTick::grid_size; ++i) {
            const PriceTick p =
                PriceTick::from_tenths(PriceTick::min_tenths + i);
            const auto u = static_cast<std::size_t>(i);
            if (s.value_at(p) != sums.supply[u] ||
                d.value_at(p) != sums.demand[u]) {
                ++mismatches;
                break;
            }
        }
    }
    report(2, mismatches == 0,
           "curve construction matches per-grid-point re-summation on 100 "
           "books",
           std::to_string(mismatches) + " books with mismatches");
}

// ---- partitioning ----------------------------------------------------------

std::vector<const OrderBook*> book_pointers(const DatasetBundle& bundle) {
    std::vector<const OrderBook*> out;
    out.reserve(bundle.books.size());
    for (const auto& [t, book] : bundle.books)
        out.push_back(&book);
    return out;
}

// Walk-direction masses of the averaged curve between consecutive fitted
// boundaries. The first chunk can merge with the starting endpoint and the
// last holds the remainder, so only the chunks between them are bounded.
bool interior_chunks_in_bound(const StepCurve& averaged,
                              std::vector<PriceTick> bounds, double vstar,
                              std::string& why) {
    if (averaged.kind == Side::demand)
        std::reverse(bounds.begin(), bounds.end());
    std::vector<double> chunks;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        const double a = averaged.value_at(bounds[i]);
        const double b = averaged.value_at(bounds[i + 1]);
        chunks.push_back(std::abs(b - a));
    }
    const double m = max_tick_increment(averaged);
    for (std::size_t i = 1; i + 1 < chunks.size(); ++i) {
        if (chunks[i] < vstar - 1e-9 || chunks[i] >= vstar + m + 1e-9) {
            why = "chunk " + std::to_string(i) + " = " + fmt(chunks[i]) +
                  " outside [" + fmt(vstar) + ", " + fmt(vstar + m) + ")";
            return false;
        }
    }
    return true;
}

void check_3_partition_properties(const DatasetBundle& bundle) {
    const double vstar = 1000.0;
    const auto books = book_pointers(bundle);
    const PriceClassScheme scheme = fit_scheme(books, vstar);

    bool partitions = !scheme.merged_bounds.empty() &&
                      scheme.merged_bounds.front() == PriceTick::min() &&
                      scheme.merged_bounds.back() == PriceTick::max();
    for (std::size_t i = 0; i + 1 < scheme.merged_bounds.size(); ++i)
        partitions = partitions &&
                     scheme.merged_bounds[i] < scheme.merged_bounds[i + 1];
    for (std::size_t k = 0; partitions && k < scheme.class_count(); ++k) {
        partitions = scheme.class_of(scheme.merged_bounds[k]) == k;
        if (k > 0)
            partitions =
                partitions &&
                scheme.class_of(PriceTick::from_tenths(
                    scheme.merged_bounds[k].tenths() - 1)) == k - 1;
    }

    double worst_conservation = 0.0;
    for (const OrderBook* book : books) {
        const PriceCurve curve = aggregate_price_curve(*book, scheme);
        double sum = 0.0;
        for (double v : curve.class_volumes)
            sum += v;
        const double total = book->total_supply() + book->total_demand();
        worst_conservation =
            std::max(worst_conservation, std::abs(sum - total));
    }

    const auto [avg_supply, avg_demand] = average_curves(books);
    std::string why_s, why_d;
    const bool chunks_ok =
        interior_chunks_in_bound(avg_supply, scheme.supply_bounds, vstar,
                                 why_s) &&
        interior_chunks_in_bound(avg_demand, scheme.demand_bounds, vstar,
                                 why_d);

    report(3,
           partitions && worst_conservation <= 1e-9 && chunks_ok,
           "class scheme partitions the grid, conserves volume, bounds "
           "interior chunks",
           std::to_string(scheme.class_count()) + " classes, worst |sum-total| = " +
               fmt(worst_conservation) + (why_s.empty() ? "" : ", " + why_s) +
               (why_d.empty() ? "" : ", " + why_d));
}

void check_4_refinement_convergence() {
    SyntheticSpec spec = default_synthetic_spec();
    spec.start = Date::parse("2021-03-01");
    spec.end = Date::parse("2021-08-31");
    spec.seed = 5;
    const DatasetBundle bundle = generate_synthetic(spec);
    const auto books = book_pointers(bundle);

    bool monotone = true;
    double prev = std::numeric_limits<double>::infinity();
    std::string ladder;
    for (double vstar : {4000.0, 2000.0, 1000.0, 500.0, 250.0}) {
        const ApproximationReport rep =
            approximation_report(books, fit_scheme(books, vstar));
        monotone = monotone && rep.mean_abs_error <= prev + 1e-12;
        prev = rep.mean_abs_error;
        ladder += (ladder.empty() ? "" : " >= ") + fmt(rep.mean_abs_error);
    }
    const ApproximationReport finest =
        approximation_report(books, per_tick_scheme(books));
    report(4, monotone && finest.mean_abs_error == 0.0,
           "class price error shrinks with finer schemes and hits 0 per tick",
           ladder + ", per-tick = " + fmt(finest.mean_abs_error));
}

// ---- models ----------------------------------------------------------------

void check_5_mlp_gradients() {
    RandomStream rng(404);
    const int n = 8, d = 5;
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j)
            X(i, j) = rng.uniform(-1.0, 1.0);
        y(i) = rng.uniform(-1.0, 1.0);
    }
    MlpCore net;
    net.init(d, {4, 3}, Activation::tanh_fn, false, 7);
    Eigen::VectorXd analytic(net.param_count());
    net.loss_and_grad(X, y, analytic);
    const Eigen::VectorXd theta = net.flat_params();
    Eigen::VectorXd scratch(net.param_count());
    const double h = 1e-5;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        Eigen::VectorXd t = theta;
        t(i) = theta(i) + h;
        net.set_flat_params(t);
        const double up = net.loss_and_grad(X, y, scratch);
        t(i) = theta(i) - h;
        net.set_flat_params(t);
        const double down = net.loss_and_grad(X, y, scratch);
        const double fd = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(analytic(i) - fd) /
                                    std::max({std::abs(analytic(i)),
                                              std::abs(fd), 1e-8}));
    }
    report(5, worst < 1e-4,
           "analytic network gradients match central differences",
           "max relative error = " + fmt(worst));
}

std::vector<std::string> axis_names(int d) {
    std::vector<std::string> names;
    for (int j = 0; j < d; ++j)
        names.push_back("x" + std::to_string(j));
    return names;
}

void check_6_ols() {
    // exact recovery on noiseless data
    RandomStream rng(606);
    const int n = 50, d = 4;
    Eigen::MatrixXd X(n, d);
    Eigen::VectorXd y(n);
    const std::vector<double> beta = {2.0, -0.5, 1.0, 3.0};
    for (int i = 0; i < n; ++i) {
        y(i) = -1.0;
        for (int j = 0; j < d; ++j) {
            X(i, j) = rng.uniform(-1.0, 1.0);
            y(i) += beta[static_cast<std::size_t>(j)] * X(i, j);
        }
    }
    ModelConfig cfg;
    cfg.id = "acceptance_ols";
    const ModelPtr exact = ols_fit(X, y, axis_names(d), cfg);
    Eigen::MatrixXd probes = Eigen::MatrixXd::Zero(d + 1, d);
    for (int j = 0; j < d; ++j)
        probes(j + 1, j) = 1.0;
    const Eigen::VectorXd pp = exact->predict(probes);
    double coef_err = std::abs(pp(0) - (-1.0));
    for (int j = 0; j < d; ++j)
        coef_err = std::max(coef_err, std::abs(pp(j + 1) - pp(0) -
                                               beta[static_cast<std::size_t>(j)]));

    // residual orthogonality on noisy data
    const int n2 = 200, d2 = 6;
    Eigen::MatrixXd X2(n2, d2);
    Eigen::VectorXd y2(n2);
    for (int i = 0; i < n2; ++i) {
        y2(i) = rng.normal(0.0, 1.0);
        for (int j = 0; j < d2; ++j) {
            X2(i, j) = rng.uniform(-1.0, 1.0);
            y2(i) += (j + 1) * X2(i, j);
        }
    }
    const ModelPtr noisy = ols_fit(X2, y2, axis_names(d2), cfg);
    const Eigen::VectorXd resid = y2 - noisy->predict(X2);
    const auto& ols = dynamic_cast<const OlsModel&>(*noisy);
    const Eigen::MatrixXd Z = ols.standardizer.apply(X2);
    const double ortho = std::max((Z.transpose() * resid).cwiseAbs().maxCoeff(),
                                  std::abs(resid.sum()));

    // normal-equations oracle on random well-conditioned problems
    double oracle_err = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const int n3 = 120, d3 = 8;
        Eigen::MatrixXd X3(n3, d3);
        Eigen::VectorXd y3(n3);
        for (int i = 0; i < n3; ++i) {
            y3(i) = rng.normal(0.0, 0.5);
            for (int j = 0; j < d3; ++j) {
                X3(i, j) = rng.uniform(-1.0, 1.0);
                y3(i) += rng.uniform(-0.1, 0.1) + (j % 3 - 1) * X3(i, j);
            }
        }
        const ModelPtr model = ols_fit(X3, y3, axis_names(d3), cfg);
        Eigen::MatrixXd A(n3, d3 + 1);
        A.col(0).setOnes();
        A.rightCols(d3) = X3;
        const Eigen::VectorXd theta =
            (A.transpose() * A).ldlt().solve(A.transpose() * y3);
        oracle_err = std::max(
            oracle_err,
            (model->predict(X3) - A * theta).cwiseAbs().maxCoeff());
    }

    report(6, coef_err < 1e-8 && ortho < 1e-6 && oracle_err < 1e-6,
           "least squares is exact, orthogonal and agrees with the normal "
           "equations",
           "coef err = " + fmt(coef_err) + ", orthogonality = " + fmt(ortho) +
               ", oracle err = " + fmt(oracle_err));
}

void check_7_forest_recovery() {
    Stopwatch sw;
    const int workers = hardware_workers();
    int wins = 0;
    for (int run = 0; run < 100; ++run) {
        RandomStream rng(derive_seed(777, 0x616363, // "acc"
                                     static_cast<std::uint64_t>(run)));
        const int n = 250, d = 10;
        Eigen::MatrixXd X(n, d);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j)
                X(i, j) = rng.uniform(-1.0, 1.0);
            y(i) = 3.0 * X(i, 0) + rng.normal(0.0, 0.7);
        }
        ModelConfig cfg;
        cfg.id = "planted";
        cfg.family = ModelFamily::random_forest;
        cfg.rf = {1000, 0.25, 0.05};
        const ModelPtr model =
            rf_fit(X, y, axis_names(d), cfg,
                   derive_seed(888, static_cast<std::uint64_t>(run)),
                   workers);
        const FeatureImportance imp =
            dynamic_cast<const ForestModel&>(*model).importance();
        const auto top = std::max_element(imp.scores.begin(),
                                          imp.scores.end());
        if (top - imp.scores.begin() == 0)
            ++wins;
    }
    const double elapsed = sw.seconds();
    report(7, wins >= 95 && elapsed < 120.0,
           "forests rank the planted feature first",
           std::to_string(wins) + "/100 runs, " + fmt(elapsed) + " s");
}

// ---- evaluation ------------------------------------------------------------

void check_8_metrics() {
    const std::vector<double> pred = {1.0, 2.0, 3.0};
    const std::vector<double> truth = {1.0, 1.0, 2.0};
    const MetricReport hand = compute_metrics(pred, truth);
    const bool hand_ok = hand.mae == 2.0 / 3.0 &&
                         hand.rmse == std::sqrt(2.0 / 3.0) &&
                         hand.mdape == 0.5;

    RandomStream rng(808);
    double worst = 0.0;
    bool structure_ok = true;
    for (int k = 0; k < 1000; ++k) {
        const std::size_t n = 1 + rng.index(50);
        std::vector<double> p(n), t(n);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = rng.uniform(-100.0, 100.0);
            t[i] = rng.uniform() < 0.1 ? 0.0 : rng.uniform(-100.0, 100.0);
        }
        const MetricReport got = compute_metrics(p, t);
        double se = 0.0, ae = 0.0;
        std::vector<double> ape;
        for (std::size_t i = 0; i < n; ++i) {
            const double diff = p[i] - t[i];
            se += diff * diff;
            ae += std::abs(diff);
            if (t[i] != 0.0)
                ape.push_back(std::abs(diff / t[i]));
        }
        const double nd = static_cast<double>(n);
        worst = std::max(worst, std::abs(got.rmse - std::sqrt(se / nd)));
        worst = std::max(worst, std::abs(got.mae - ae / nd));
        if (ape.empty()) {
            structure_ok = structure_ok && got.n_excluded == n;
        } else {
            std::sort(ape.begin(), ape.end());
            worst = std::max(
                worst, std::abs(got.mdape - ape[(ape.size() - 1) / 2]));
            structure_ok =
                structure_ok && got.n_excluded == n - ape.size();
        }
        structure_ok = structure_ok && got.n == n;
    }
    report(8, hand_ok && structure_ok && worst <= 1e-12,
           "metrics match direct formula evaluation",
           "hand case " + std::string(hand_ok ? "ok" : "WRONG") +
               ", worst random deviation = " + fmt(worst));
}

void check_9_naive_benchmark() {
    CalendarConfig cal;
    cal.holidays.insert(Date::parse("2021-03-18")); // a Thursday
    const Date base = Date::parse("2021-03-01");    // a Monday
    std::map<AuctionHour, double> history;
    for (int day = 0; day < 21; ++day)
        for (int hour = 0; hour < 24; ++hour)
            history[{base.plus_days(day), hour}] = day * 100.0 + hour;

    const auto src = [&](int day, int hour) { return day * 100.0 + hour; };
    bool ok = true;
    // midweek workday: the previous day
    ok = ok && naive_forecast({Date::parse("2021-03-17"), 13}, history, cal) ==
                   src(15, 13);
    // Monday: the previous Monday
    ok = ok && naive_forecast({Date::parse("2021-03-15"), 8}, history, cal) ==
                   src(7, 8);
    // Sunday: the previous Sunday
    ok = ok && naive_forecast({Date::parse("2021-03-14"), 0}, history, cal) ==
                   src(6, 0);
    // holiday: the nearest same-type day of the previous week (a Sunday)
    ok = ok && naive_forecast({Date::parse("2021-03-18"), 10}, history, cal) ==
                   src(13, 10);
    report(9, ok, "naive benchmark maps source hours exactly");
}

FeatureMatrix planted_feature_matrix(int n, int d, std::uint64_t seed) {
    FeatureMatrix fm;
    fm.names = axis_names(d);
    fm.X.resize(n, d);
    fm.y.resize(n);
    RandomStream rng(seed);
    const Date base = Date::parse("2021-01-01");
    for (int i = 0; i < n; ++i) {
        fm.hours.push_back({base.plus_days(i / 24), i % 24});
        for (int j = 0; j < d; ++j)
            fm.X(i, j) = rng.uniform(-1.0, 1.0);
        fm.y(i) = 3.0 * fm.X(i, 0) + rng.normal(0.0, 0.01);
    }
    return fm;
}

bool same_tables(const GridResult& a, const GridResult& b) {
    if (a.best != b.best || a.cells.size() != b.cells.size())
        return false;
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        const CvCell& x = a.cells[i];
        const CvCell& y = b.cells[i];
        if (x.failed != y.failed || x.error != y.error ||
            x.mean_rmse != y.mean_rmse || x.fold_rmse != y.fold_rmse)
            return false;
    }
    return true;
}

void check_10_grid_search() {
    const int n = 400;
    const FeatureMatrix fm = planted_feature_matrix(n, 6, 1010);
    std::vector<int> rows(n);
    for (int i = 0; i < n; ++i)
        rows[static_cast<std::size_t>(i)] = i;

    std::vector<ModelConfig> configs;
    ModelConfig linear;
    linear.id = "linear";
    configs.push_back(linear);
    ModelConfig stumps;
    stumps.id = "stumps";
    stumps.family = ModelFamily::random_forest;
    stumps.rf = {30, 0.5, 0.3};
    configs.push_back(stumps);
    ModelConfig tiny_net;
    tiny_net.id = "tiny_net";
    tiny_net.family = ModelFamily::mlp;
    tiny_net.mlp.layers = {4};
    tiny_net.mlp.optimizer = Optimizer::sgd;
    tiny_net.mlp.epochs = 5;
    tiny_net.mlp.batch_size = 64;
    configs.push_back(tiny_net);

    const GridResult serial =
        grid_search(fm, rows, configs, nullptr, 5, 31, 1);
    const GridResult parallel =
        grid_search(fm, rows, configs, nullptr, 5, 31, 8);

    const bool winner = serial.best == 0;

    bool folds_ok = true;
    const auto folds = cv_folds(static_cast<std::size_t>(n), 5);
    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    for (const DataSplit& fold : folds) {
        for (int r : fold.test_rows)
            ++seen[static_cast<std::size_t>(r)];
        folds_ok = folds_ok && fold.train_rows.size() + fold.test_rows.size() ==
                                   static_cast<std::size_t>(n);
    }
    for (int count : seen)
        folds_ok = folds_ok && count == 1;

    report(10, winner && folds_ok && same_tables(serial, parallel),
           "planted config wins, folds partition rows, worker count is "
           "irrelevant",
           std::string("winner ") +
               (serial.best >= 0
                    ? serial.cells[static_cast<std::size_t>(serial.best)]
                          .config.id
                    : "none") +
               ", serial == parallel " +
               (same_tables(serial, parallel) ? "yes" : "NO"));
}

// ---- end to end ------------------------------------------------------------

std::map<std::string, fs::path> file_tree(const fs::path& root) {
    std::map<std::string, fs::path> out;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file())
            out[fs::relative(entry.path(), root).string()] = entry.path();
    return out;
}

void check_11_pipeline(const std::string& cli) {
    const fs::path work = fs::temp_directory_path() / "obpf_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    const auto run = [&](const std::string& name) {
        const fs::path dir = work / name;
        const std::string cmd = "\"" + cli + "\" pipeline --out \"" +
                                dir.string() + "\" --seed 1 > \"" +
                                (work / (name + ".log")).string() + "\" 2>&1";
        return std::system(cmd.c_str());
    };

    Stopwatch sw;
    const int rc_a = run("run_a");
    const double first_run = sw.seconds();
    const int rc_b = run("run_b");
    if (rc_a != 0 || rc_b != 0) {
        report(11, false, "pipeline runs end to end",
               "exit codes " + std::to_string(rc_a) + " / " +
                   std::to_string(rc_b) + ", logs in " + work.string());
        return;
    }

    // byte-identical artifact trees
    const auto tree_a = file_tree(work / "run_a");
    const auto tree_b = file_tree(work / "run_b");
    bool identical = tree_a.size() == tree_b.size();
    std::string first_diff;
    for (const auto& [rel, path] : tree_a) {
        const auto it = tree_b.find(rel);
        if (it == tree_b.end() || read_file(path) != read_file(it->second)) {
            identical = false;
            if (first_diff.empty())
                first_diff = rel;
        }
    }

    // manifest hashes describe the artifacts on disk
    const json manifest =
        json::parse(read_file(work / "run_a" / "manifest.json"));
    bool hashes_ok = true;
    for (const auto& [rel, hex] : manifest.at("artifacts").items())
        hashes_ok =
            hashes_ok &&
            hash_hex(Hasher().add(read_file(work / "run_a" / rel)).value()) ==
                hex.get<std::string>();

    std::map<std::string, std::string> family_of;
    for (const auto& cfg : manifest.at("grid").at("configs"))
        family_of[cfg.at("id").get<std::string>()] =
            cfg.at("family").get<std::string>();

    // out-of-sample ordering: trained models beat the naive benchmark
    double naive_rmse = -1.0;
    std::map<std::string, double> test_rmse; // family -> winner rmse
    const std::string comparison =
        read_file(work / "run_a" / "comparison.csv");
    for (const auto& line : split_lines(comparison)) {
        const auto f = split_csv(line);
        if (f.size() < 4 || f[1] != "test")
            continue;
        const double rmse = parse_double(f[3]);
        if (f[0] == "naive")
            naive_rmse = rmse;
        else
            test_rmse[family_of[std::string(f[0])]] = rmse;
    }
    const bool ordering = naive_rmse > 0.0 && test_rmse.count("ols") &&
                          test_rmse.count("mlp") &&
                          test_rmse["ols"] < naive_rmse &&
                          test_rmse["mlp"] < naive_rmse;

    report(11,
           identical && hashes_ok && ordering && first_run < 300.0,
           "pipeline is byte-reproducible and beats the naive benchmark",
           fmt(first_run) + " s, naive test rmse = " + fmt(naive_rmse) +
               ", ols = " +
               fmt(test_rmse.count("ols") ? test_rmse["ols"] : -1.0) +
               ", mlp = " +
               fmt(test_rmse.count("mlp") ? test_rmse["mlp"] : -1.0) +
               (identical ? "" : ", first differing file: " + first_diff) +
               (hashes_ok ? "" : ", manifest hash mismatch"));
}

void check_12_reference_networks(const fs::path& configs_dir) {
    std::vector<ModelConfig> grid;
    try {
        grid = load_model_grid(configs_dir / "reference_networks.json");
    } catch (const std::exception& e) {
        report(12, false, "reference network grid parses", e.what());
        return;
    }
    if (grid.size() != 4) {
        report(12, false, "reference network grid parses",
               "expected 4 configs, got " + std::to_string(grid.size()));
        return;
    }

    SyntheticSpec spec = default_synthetic_spec();
    spec.start = Date::parse("2021-03-01");
    spec.end = Date::parse("2021-06-30");
    spec.seed = 11;
    const DatasetBundle bundle = generate_synthetic(spec);
    const auto books = book_pointers(bundle);
    const PriceClassScheme scheme = fit_scheme(books, 1000.0);
    const FeatureMatrix fm = build_feature_matrix(
        bundle.books, bundle.fundamentals, bundle.calendars, scheme);
    std::vector<int> rows(fm.rows());
    for (std::size_t i = 0; i < fm.rows(); ++i)
        rows[i] = static_cast<int>(i);

    const int workers = hardware_workers();
    ModelConfig ranker;
    ranker.id = "ranker";
    ranker.family = ModelFamily::random_forest;
    ranker.rf = {150, 0.25, 0.05};
    std::vector<int> all_cols(fm.cols());
    for (std::size_t j = 0; j < fm.cols(); ++j)
        all_cols[j] = static_cast<int>(j);
    auto [Xr, yr] = materialize(fm, rows, all_cols);
    const ModelPtr ranking_model =
        rf_fit(Xr, yr, fm.names, ranker, 1212, workers);
    const FeatureImportance importance =
        dynamic_cast<const ForestModel&>(*ranking_model).importance();

    const fs::path dir = fs::temp_directory_path() / "obpf_acceptance_nets";
    fs::create_directories(dir);
    bool ok = true;
    std::string detail;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const ModelConfig& cfg = grid[i];
        try {
            const auto cols = columns_for_config(fm.names, cfg, &importance);
            std::vector<std::string> names;
            for (int j : cols)
                names.push_back(fm.names[static_cast<std::size_t>(j)]);
            auto [X, y] = materialize(fm, rows, cols);
            const ModelPtr model = fit_model(
                cfg, X, y, names, derive_seed(2024, i), workers);
            const fs::path file = dir / (cfg.id + ".json");
            save_model(*model, file);
            const ModelPtr back = load_model(file);
            const Eigen::VectorXd p1 = model->predict(X);
            const Eigen::VectorXd p2 = back->predict(X);
            for (Eigen::Index r = 0; r < p1.size(); ++r)
                if (p1(r) != p2(r))
                    throw Error("round trip changed a prediction");
            detail += (detail.empty() ? "" : ", ") + cfg.id + " rmse " +
                      fmt(model->final_train_rmse);
        } catch (const std::exception& e) {
            ok = false;
            detail += (detail.empty() ? "" : ", ") + cfg.id + " FAILED: " +
                      e.what();
        }
    }
    report(12, ok, "reference network configs train and round-trip",
           detail);
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr,
                     "usage: %s <cli-binary> <configs-dir>\n", argv[0]);
        return 2;
    }
    const std::string cli = argv[1];
    const fs::path configs_dir = argv[2];

    check_1_clearing_oracle();
    check_2_curve_construction();

    const DatasetBundle two_years = generate_synthetic(default_synthetic_spec());
    check_3_partition_properties(two_years);
    check_4_refinement_convergence();

    check_5_mlp_gradients();
    check_6_ols();
    check_7_forest_recovery();

    check_8_metrics();
    check_9_naive_benchmark();
    check_10_grid_search();

    check_11_pipeline(cli);
    check_12_reference_networks(configs_dir);

    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
