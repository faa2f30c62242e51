#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splitcop/estimation.hpp"

namespace splitcop::mc {

/// Sampling moments of the estimated lower-tail correlation for one pair
/// of true correlations. Kurtosis is excess kurtosis.
struct MomentsRow {
    double true_rho_u = 0.0;
    double true_rho_l = 0.0;
    double mean = 0.0;
    double sd = 0.0;
    double skew = 0.0;
    double kurt = 0.0;
    int dropped = 0;
};

struct Percentiles {
    double p05 = 0.0;
    double p10 = 0.0;
    double p90 = 0.0;
    double p95 = 0.0;
};

/// Null-distribution percentiles of an estimated tail correlation whose
/// true value is zero, indexed by the other tail's true correlation.
struct CriticalValueTable {
    std::vector<double> rho_other; // ascending
    std::vector<Percentiles> rows;
};

enum class Verdict {
    positive_at_5,
    positive_at_10,
    negative_at_5,
    negative_at_10,
    not_significant,
};

std::string to_string(Verdict v);

struct TestDecision {
    double estimate = 0.0;
    Verdict verdict = Verdict::not_significant;
    Percentiles critical_values; // interpolated values actually used
    bool clamped = false;        // rho_other fell outside the table range
};

struct McConfig {
    int sample_size = 100;
    int reps = 500;
    std::uint64_t seed = 1;
    double max_drop_fraction = 0.01; // failed replicates tolerated
};

/// Monte Carlo sampling moments of rho_l-hat: `reps` synthetic datasets of
/// `sample_size` draws, uniformized through the true model's own marginal
/// table and fitted on the cached grid.
MomentsRow mc_moments(double true_rho_u, double true_rho_l, const McConfig& cfg,
                      const grid::ModelCache& cache);

/// Null-distribution percentiles of the tested tail's estimate when its
/// true correlation is zero and the other tail's is `true_rho_other`.
Percentiles mc_critical_values(double true_rho_other, const McConfig& cfg,
                               const grid::ModelCache& cache);

struct CvInterp {
    Percentiles p;
    bool clamped = false;
};

/// Componentwise linear interpolation between bracketing rows; rho_other is
/// clamped to the tabulated range (flagged in the result).
CvInterp interpolate_cv(const CriticalValueTable& table, double rho_other);

/// One-sided zero-correlation test with strict inequalities: the estimate
/// must exceed p95 (fall below p05) for significance at 5%, and so on.
TestDecision one_sided_test(double estimate, double rho_other_estimate,
                            const CriticalValueTable& table);

/// Bundled default table (grid width 0.02, sample size 100).
const CriticalValueTable& default_critical_values();

CriticalValueTable load_cv_csv(const std::string& path);
void write_cv_csv(const std::string& path, const CriticalValueTable& table);

/// Empirical percentile with linear interpolation between order statistics.
double percentile(std::vector<double> sorted_or_not, double p);

} // namespace splitcop::mc
