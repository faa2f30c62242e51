#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "splitcop/errors.hpp"
#include "splitcop/pipeline.hpp"
#include "splitcop/rng.hpp"

using namespace splitcop;

namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
    const auto dir = fs::temp_directory_path() / "splitcop_pipe_test";
    fs::create_directories(dir);
    return dir;
}

std::string write_file(const std::string& name, const std::string& body) {
    const auto path = (work_dir() / name).string();
    std::ofstream out(path);
    out << body;
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string iso_date(int serial) {
    // synthetic weekly-ish calendar, strictly increasing
    const int year = 2007 + serial / 360;
    const int month = (serial % 360) / 30 + 1;
    const int day = serial % 30 + 1;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year % 10000, month, day);
    return buf;
}

// price and yield CSVs from simulated GARCH returns
struct SyntheticInputs {
    std::string stock_csv;
    std::string bond_csv;
    std::size_t n;
};

SyntheticInputs make_inputs(std::size_t n, std::uint64_t seed) {
    garch::GarchParams stock;
    stock.alpha0 = 0.2;
    stock.alpha1 = 0.1;
    stock.beta1 = 0.8;
    stock.nu = 7.0;
    garch::GarchParams bond;
    bond.alpha0 = 0.005;
    bond.alpha1 = 0.05;
    bond.beta1 = 0.9;
    bond.nu = 8.0;
    const auto rs = garch::simulate(stock, n, derive_seed(seed, 1));
    const auto rb = garch::simulate(bond, n, derive_seed(seed, 2));
    std::ostringstream s1, s2;
    s1 << "date,value\n";
    s2 << "date,value\n";
    double ps = 100.0, pb = 0.58;
    s1 << iso_date(0) << ',' << ps << '\n';
    s2 << iso_date(0) << ',' << 100.0 * (std::pow(pb, -0.1) - 1.0) << '\n';
    for (std::size_t t = 0; t < n; ++t) {
        ps *= std::exp(rs[t] / 100.0);
        pb *= std::exp(rb[t] / 100.0);
        const double yield = 100.0 * (std::pow(pb, -0.1) - 1.0);
        s1 << iso_date(static_cast<int>(t) + 1) << ',' << ps << '\n';
        s2 << iso_date(static_cast<int>(t) + 1) << ',' << yield << '\n';
    }
    return {write_file("stock.csv", s1.str()), write_file("bond.csv", s2.str()),
            n};
}

} // namespace

TEST_CASE("load_csv basics") {
    const auto p2 =
        write_file("two.csv", "date,value\n2020-01-03,1.5\n2020-01-10,2.5\n");
    const auto s = pipeline::load_csv(p2, pipeline::SeriesKind::stock_index);
    CHECK(s.dates.size() == 2);
    CHECK(s.values[1] == 2.5);
    CHECK(s.dropped_rows == 0);

    const auto shuffled =
        write_file("shuf.csv", "date,value\n2020-01-10,1\n2020-01-03,2\n");
    CHECK_THROWS_WITH_AS(pipeline::load_csv(shuffled, pipeline::SeriesKind::stock_index),
                         doctest::Contains("2020-01-03"), input_error);

    const auto missing = write_file(
        "miss.csv",
        "date,value\n2020-01-03,1\n2020-01-10,\n2020-01-17,3\n2020-01-24,4\n");
    const auto m = pipeline::load_csv(missing, pipeline::SeriesKind::stock_index);
    CHECK(m.dates.size() == 3);
    CHECK(m.dropped_rows == 1);

    const auto header = write_file("hdr.csv", "when,price\n2020-01-03,1\n");
    CHECK_THROWS_AS(pipeline::load_csv(header, pipeline::SeriesKind::stock_index),
                    input_error);

    std::ostringstream many;
    many << "date,value\n";
    for (int i = 0; i < 10; ++i)
        many << iso_date(i) << ",junk\n";
    for (int i = 10; i < 20; ++i)
        many << iso_date(i) << "," << i << "\n";
    CHECK_THROWS_WITH_AS(
        pipeline::load_csv(write_file("junk.csv", many.str()),
                       pipeline::SeriesKind::stock_index),
        doctest::Contains("unparseable"), input_error);

    const auto neg =
        write_file("neg.csv", "date,value\n2020-01-03,-0.5\n2020-01-10,1\n");
    CHECK_THROWS_AS(pipeline::load_csv(neg, pipeline::SeriesKind::bond_yield_percent),
                    input_error);
    CHECK_NOTHROW(pipeline::load_csv(neg, pipeline::SeriesKind::stock_index));
}

TEST_CASE("bond price from quoted percentage yield") {
    CHECK(pipeline::bond_price(0.0) == 1.0);
    CHECK(pipeline::bond_price(5.0) ==
          doctest::Approx(0.6139132535).epsilon(1e-9));
    CHECK(pipeline::bond_price(100.0) == doctest::Approx(1.0 / 1024.0));
    CHECK_THROWS_AS(pipeline::bond_price(-100.0), input_error);
}

TEST_CASE("to_returns") {
    pipeline::PriceSeries s;
    s.kind = pipeline::SeriesKind::stock_index;
    s.dates = {"2020-01-03", "2020-01-10", "2020-01-17"};
    s.values = {100.0, 100.0, 200.0};
    const auto r = pipeline::to_returns(s);
    REQUIRE(r.values.size() == 2);
    CHECK(r.dates[0] == "2020-01-10");
    CHECK(r.values[0] == 0.0);
    CHECK(r.values[1] == doctest::Approx(69.31471805599453).epsilon(1e-12));

    pipeline::PriceSeries y = s;
    y.kind = pipeline::SeriesKind::bond_yield_percent;
    y.values = {4.0, 5.0, 4.5};
    const auto rb = pipeline::to_returns(y);
    CHECK(rb.values[0] ==
          doctest::Approx(100.0 * (std::log(pipeline::bond_price(5.0)) -
                                   std::log(pipeline::bond_price(4.0))))
              .epsilon(1e-12));

    pipeline::PriceSeries bad = s;
    bad.values = {100.0, -1.0, 50.0};
    CHECK_THROWS_AS(pipeline::to_returns(bad), input_error);
    pipeline::PriceSeries one = s;
    one.dates = {"2020-01-03"};
    one.values = {100.0};
    CHECK_THROWS_AS(pipeline::to_returns(one), input_error);
}

TEST_CASE("align") {
    pipeline::ReturnSeries a, b;
    a.dates = {"2020-01-03", "2020-01-10", "2020-01-17"};
    a.values = {1.0, 2.0, 3.0};
    b.dates = a.dates;
    b.values = {4.0, 5.0, 6.0};
    const auto full = pipeline::align(a, b);
    CHECK(full.dates.size() == 3);
    CHECK(full.dropped_x == 0);
    CHECK(full.dropped_y == 0);

    b.dates = {"2020-01-03", "2020-01-12", "2020-01-17"};
    const auto partial = pipeline::align(a, b);
    CHECK(partial.dates.size() == 2);
    CHECK(partial.dropped_x == 1);
    CHECK(partial.dropped_y == 1);
    CHECK(partial.x[1] == 3.0);
    CHECK(partial.y[1] == 6.0);

    b.dates = {"2021-01-01", "2021-01-08", "2021-01-15"};
    CHECK_THROWS_AS(pipeline::align(a, b), input_error);
}

TEST_CASE("summary statistics match a direct reimplementation") {
    Rng rng(12);
    std::vector<double> x(400), y(400);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.normal() * 2.0 + 0.3;
        y[i] = 0.5 * x[i] + rng.normal();
    }
    const auto s = pipeline::summarize(x);
    const double n = 400.0;
    double mean = 0.0;
    for (double v : x)
        mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0, lo = x[0], hi = x[0];
    for (double v : x) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    CHECK(std::fabs(s.mean - mean) < 1e-10);
    CHECK(std::fabs(s.sd - std::sqrt(m2 * n / (n - 1.0))) < 1e-10);
    CHECK(std::fabs(s.min - lo) < 1e-14);
    CHECK(std::fabs(s.max - hi) < 1e-14);
    CHECK(std::fabs(s.skew - m3 / std::pow(m2, 1.5)) < 1e-10);
    CHECK(std::fabs(s.kurt - (m4 / (m2 * m2) - 3.0)) < 1e-10);

    // Kendall tau-b against the direct O(n^2) definition with tie handling
    long long conc = 0, disc = 0, tx = 0, ty = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const double dx = x[i] - x[j], dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0)
                continue;
            if (dx == 0.0)
                ++tx;
            else if (dy == 0.0)
                ++ty;
            else if (dx * dy > 0.0)
                ++conc;
            else
                ++disc;
        }
    const double n0 = n * (n - 1.0) / 2.0;
    const double tau = (conc - disc) /
                       std::sqrt((n0 - static_cast<double>(tx)) *
                                 (n0 - static_cast<double>(ty)));
    CHECK(std::fabs(pipeline::kendall_tau_b(x, y) - tau) < 1e-10);
    CHECK(pipeline::kendall_tau_b(x, y) > 0.2); // positively dependent by design
}

TEST_CASE("run config validation") {
    pipeline::RunConfig cfg;
    cfg.stock_csv = "s.csv";
    cfg.bond_csv = "b.csv";
    cfg.window = 10;
    CHECK_THROWS_AS(cfg.validate(), config_error);
    cfg.window = 100;
    cfg.grid_step = 0.004;
    CHECK_THROWS_AS(cfg.validate(), config_error);
    cfg.grid_step = 0.02;
    cfg.grid_lo = -0.999;
    CHECK_THROWS_AS(cfg.validate(), config_error);
    cfg.grid_lo = -0.5;
    cfg.grid_hi = 0.5;
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("empirical pipeline end to end on synthetic data") {
    const auto inputs = make_inputs(320, 20240521);
    pipeline::RunConfig cfg;
    cfg.stock_csv = inputs.stock_csv;
    cfg.bond_csv = inputs.bond_csv;
    cfg.window = 100;
    cfg.grid_step = 0.02;
    cfg.grid_lo = -0.5;
    cfg.grid_hi = 0.5;
    cfg.out_dir = (work_dir() / "run1").string();
    const auto art = pipeline::run_empirical(cfg);

    CHECK(art.returns.dates.size() == inputs.n);
    CHECK(art.pits.dates.size() ==
          inputs.n - static_cast<std::size_t>(std::max(art.stock_fit.spec.p,
                                                       art.bond_fit.spec.p)));
    CHECK(art.rolling.fits.size() ==
          art.pits.dates.size() - 100 + 1);
    CHECK(art.verdicts_u.size() == art.rolling.fits.size());

    for (const char* name :
         {"returns.csv", "summary_stats.csv", "garch_params.csv", "pit.csv",
          "rolling_correlations.csv", "run_manifest.txt"})
        CHECK(fs::exists(fs::path(cfg.out_dir) / name));

    SUBCASE("rerun is byte identical") {
        pipeline::RunConfig cfg2 = cfg;
        cfg2.out_dir = (work_dir() / "run2").string();
        pipeline::run_empirical(cfg2);
        for (const char* name :
             {"returns.csv", "summary_stats.csv", "garch_params.csv", "pit.csv",
              "rolling_correlations.csv"})
            CHECK(slurp((fs::path(cfg.out_dir) / name).string()) ==
                  slurp((fs::path(cfg2.out_dir) / name).string()));
    }

    SUBCASE("rolling stage reruns exactly from the saved PIT file") {
        const auto pits = pipeline::load_pair_csv(
            (fs::path(cfg.out_dir) / "pit.csv").string(), "x", "y");
        std::vector<std::pair<double, double>> pairs(pits.dates.size());
        for (std::size_t i = 0; i < pairs.size(); ++i)
            pairs[i] = {pits.x[i], pits.y[i]};
        const grid::ModelCache cache(cfg.grid_spec(), cfg.m_points);
        const auto rolling = grid::fit_rolling(pairs, 100, cache);
        const auto& table = mc::default_critical_values();
        std::vector<mc::TestDecision> vu, vl;
        for (const auto& f : rolling.fits) {
            vu.push_back(mc::one_sided_test(f.rho_u, f.rho_l, table));
            vl.push_back(mc::one_sided_test(f.rho_l, f.rho_u, table));
        }
        const auto replay = (work_dir() / "rolling_replay.csv").string();
        pipeline::write_rolling_csv(replay, pits, rolling, vu, vl);
        CHECK(slurp(replay) ==
              slurp((fs::path(cfg.out_dir) / "rolling_correlations.csv")
                        .string()));
    }
}

TEST_CASE("pipeline stage errors carry a stage tag") {
    const auto inputs = make_inputs(160, 5);
    pipeline::RunConfig cfg;
    cfg.stock_csv = inputs.stock_csv;
    cfg.bond_csv = inputs.bond_csv;
    cfg.window = 500; // longer than the data
    cfg.grid_step = 0.05;
    cfg.grid_lo = -0.5;
    cfg.grid_hi = 0.5;
    cfg.out_dir = (work_dir() / "run_err").string();
    CHECK_THROWS_WITH_AS(pipeline::run_empirical(cfg), doctest::Contains("[rolling]"),
                         input_error);

    pipeline::RunConfig cfg2 = cfg;
    cfg2.window = 100;
    cfg2.stock_csv = (work_dir() / "absent.csv").string();
    CHECK_THROWS_WITH_AS(pipeline::run_empirical(cfg2),
                         doctest::Contains("[returns]"), input_error);
}
