#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "splitcop/estimation.hpp"
#include "splitcop/marginals.hpp"
#include "splitcop/simulation.hpp"

namespace splitcop::pipeline {

inline constexpr const char* library_version = "0.1.0";

enum class SeriesKind { stock_index, bond_yield_percent };

/// Dated observations with strictly increasing ISO-8601 dates.
struct PriceSeries {
    SeriesKind kind = SeriesKind::stock_index;
    std::vector<std::string> dates;
    std::vector<double> values;
    int dropped_rows = 0; // rows with missing/unparseable fields
};

struct ReturnSeries {
    SeriesKind kind = SeriesKind::stock_index;
    std::vector<std::string> dates; // date of period t
    std::vector<double> values;     // percent log returns
};

/// Two series inner-joined on dates.
struct AlignedPairs {
    std::vector<std::string> dates;
    std::vector<double> x;
    std::vector<double> y;
    int dropped_x = 0; // dates only present on one side
    int dropped_y = 0;
};

struct SummaryStats {
    double mean = 0.0, sd = 0.0, min = 0.0, max = 0.0, skew = 0.0, kurt = 0.0;
};

struct RunConfig {
    std::string stock_csv;
    std::string bond_csv;
    int window = 100;
    double grid_step = 0.01;
    double grid_lo = -0.95;
    double grid_hi = 0.95;
    int m_points = 50;
    std::uint64_t seed = 1;
    int max_ar = garch::max_ar_order;
    std::string cv_table_path; // empty: bundled defaults
    std::string out_dir = ".";

    void validate() const;
    grid::GridSpec grid_spec() const { return {grid_lo, grid_hi, grid_step}; }
};

/// CSV with header `date,value`, ISO dates, decimal values.
PriceSeries load_csv(const std::string& path, SeriesKind kind);

/// Price of a 10-year discount bond from its quoted percentage yield.
double bond_price(double yield_percent);

/// Percent log returns; bond yields are first converted to prices.
ReturnSeries to_returns(const PriceSeries& series);

AlignedPairs align(const ReturnSeries& a, const ReturnSeries& b);

SummaryStats summarize(std::span<const double> x);
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

struct RunArtifacts {
    AlignedPairs returns;
    garch::GarchFit stock_fit;
    garch::GarchFit bond_fit;
    AlignedPairs pits;
    grid::RollingResult rolling;
    std::vector<mc::TestDecision> verdicts_u;
    std::vector<mc::TestDecision> verdicts_l;
};

/// Full empirical workflow: returns, summary stats, AR-GARCH marginals,
/// PIT, rolling copula MLE, significance verdicts; writes one CSV per
/// stage plus a manifest into cfg.out_dir.
RunArtifacts run_empirical(const RunConfig& cfg);

struct McTablesConfig {
    int sample_size = 100;
    int reps = 500;
    std::uint64_t seed = 1;
    double grid_step = 0.02;
    double grid_lo = -0.95;
    double grid_hi = 0.95;
    int m_points = 50;
    std::vector<double> moment_rhos = {0.6, 0.4, 0.2, 0.0, -0.2, -0.4, -0.6};
    std::vector<double> cv_rhos = {-0.8, -0.6, -0.4, -0.2, 0.0,
                                   0.2,  0.4,  0.6,  0.8};
    bool moments = true;
    bool critical_values = true;
    std::string out_dir = ".";
};

/// Regenerates the estimator-moments grid and/or the critical-value table.
void mc_tables(const McTablesConfig& cfg);

// Stage writers, shared by run_empirical and the stage-isolation path.
void write_returns_csv(const std::string& path, const AlignedPairs& r);
void write_summary_csv(const std::string& path, const AlignedPairs& r);
void write_garch_csv(const std::string& path,
                     std::span<const std::pair<std::string, const garch::GarchFit*>> fits);
void write_garch_csv(const std::string& path, const garch::GarchFit& stock,
                     const garch::GarchFit& bond);
void write_pit_csv(const std::string& path, const AlignedPairs& pits);
void write_rolling_csv(const std::string& path, const AlignedPairs& pits,
                       const grid::RollingResult& rolling,
                       const std::vector<mc::TestDecision>& verdicts_u,
                       const std::vector<mc::TestDecision>& verdicts_l);
AlignedPairs load_pair_csv(const std::string& path, const char* xname,
                           const char* yname);

} // namespace splitcop::pipeline
