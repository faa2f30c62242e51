#include "splitcop/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "splitcop/errors.hpp"
#include "splitcop/parallel.hpp"
#include "splitcop/rng.hpp"

namespace splitcop::mc {

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::positive_at_5:
        return "Positive at 0.05";
    case Verdict::positive_at_10:
        return "Positive at 0.10";
    case Verdict::negative_at_5:
        return "Negative at 0.05";
    case Verdict::negative_at_10:
        return "Negative at 0.10";
    case Verdict::not_significant:
        return "Not Significant";
    }
    return "Not Significant";
}

namespace {

void check_mc_config(const McConfig& cfg) {
    if (cfg.sample_size < 20)
        throw input_error("monte carlo: sample_size must be >= 20");
    if (cfg.reps < 1)
        throw input_error("monte carlo: reps must be >= 1");
}

// All replicates: sample the split normal, uniformize through the true
// model's own marginal table, fit in one batched pass over the grid.
std::vector<double> run_replicates(const splitnorm::Params& truth,
                                   const McConfig& cfg,
                                   const grid::ModelCache& cache,
                                   int* dropped_out) {
    const copula::MarginalTable table =
        copula::build_marginal_table(truth, cache.m_points());
    const std::size_t reps = static_cast<std::size_t>(cfg.reps);
    std::vector<std::vector<std::pair<double, double>>> datasets(reps);
    parallel_for_blocks(reps, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            const auto raw =
                splitnorm::sample(truth, static_cast<std::size_t>(cfg.sample_size),
                                  derive_seed(cfg.seed, r));
            auto& u = datasets[r];
            u.resize(raw.size());
            for (std::size_t i = 0; i < raw.size(); ++i)
                u[i] = {table.cdf(raw[i].first), table.cdf(raw[i].second)};
        }
    });
    std::vector<double> est(reps, std::numeric_limits<double>::quiet_NaN());
    int hard_failures = 0;
    try {
        const auto fits = grid::fit_grid_batch(datasets, cache);
        for (std::size_t r = 0; r < reps; ++r)
            est[r] = fits[r].rho_l;
    } catch (const std::exception&) {
        // batch-level failure: refit one by one so a single bad replicate
        // cannot take down the whole study
        for (std::size_t r = 0; r < reps; ++r) {
            try {
                est[r] = grid::fit_grid(datasets[r], cache).rho_l;
            } catch (const std::exception&) {
                ++hard_failures;
            }
        }
    }
    std::vector<double> kept;
    kept.reserve(est.size());
    for (double e : est)
        if (std::isfinite(e))
            kept.push_back(e);
    const int dropped = static_cast<int>(est.size() - kept.size());
    if (dropped_out)
        *dropped_out = dropped;
    if (kept.empty() ||
        static_cast<double>(dropped) > cfg.max_drop_fraction * cfg.reps) {
        std::ostringstream os;
        os << "monte carlo: " << dropped << " of " << cfg.reps
           << " replicates failed";
        throw numeric_error(os.str());
    }
    return kept;
}

} // namespace

MomentsRow mc_moments(double true_rho_u, double true_rho_l, const McConfig& cfg,
                      const grid::ModelCache& cache) {
    check_mc_config(cfg);
    const auto truth = splitnorm::complete_params(true_rho_u, true_rho_l);
    MomentsRow row;
    row.true_rho_u = true_rho_u;
    row.true_rho_l = true_rho_l;
    const auto est = run_replicates(truth, cfg, cache, &row.dropped);

    const double n = static_cast<double>(est.size());
    double mean = 0.0;
    for (double e : est)
        mean += e;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double e : est) {
        const double d = e - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    row.mean = mean;
    row.sd = n > 1 ? std::sqrt(m2 * n / (n - 1.0)) : 0.0;
    row.skew = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    row.kurt = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
    return row;
}

double percentile(std::vector<double> v, double p) {
    if (v.empty())
        throw input_error("percentile: empty sample");
    std::sort(v.begin(), v.end());
    const double h = p * (static_cast<double>(v.size()) - 1.0);
    const std::size_t i = static_cast<std::size_t>(h);
    if (i + 1 >= v.size())
        return v.back();
    const double frac = h - static_cast<double>(i);
    return v[i] + frac * (v[i + 1] - v[i]);
}

Percentiles mc_critical_values(double true_rho_other, const McConfig& cfg,
                               const grid::ModelCache& cache) {
    check_mc_config(cfg);
    // Null: the tested tail's true correlation is zero; by the exchange
    // symmetry of the construction we place the nonzero value on the other
    // tail and read off the tested tail's estimates.
    const auto truth = splitnorm::complete_params(true_rho_other, 0.0);
    const auto est = run_replicates(truth, cfg, cache, nullptr);
    Percentiles out;
    out.p05 = percentile(est, 0.05);
    out.p10 = percentile(est, 0.10);
    out.p90 = percentile(est, 0.90);
    out.p95 = percentile(est, 0.95);
    return out;
}

CvInterp interpolate_cv(const CriticalValueTable& table, double rho_other) {
    if (table.rho_other.empty() || table.rows.size() != table.rho_other.size())
        throw input_error("critical-value table is empty or inconsistent");
    CvInterp out;
    double r = rho_other;
    if (r < table.rho_other.front()) {
        r = table.rho_other.front();
        out.clamped = true;
    }
    if (r > table.rho_other.back()) {
        r = table.rho_other.back();
        out.clamped = true;
    }
    const auto it =
        std::lower_bound(table.rho_other.begin(), table.rho_other.end(), r);
    std::size_t hi = static_cast<std::size_t>(it - table.rho_other.begin());
    if (hi == 0) {
        out.p = table.rows.front();
        return out;
    }
    if (hi >= table.rho_other.size())
        hi = table.rho_other.size() - 1;
    const std::size_t lo = hi - 1;
    const double span = table.rho_other[hi] - table.rho_other[lo];
    const double t = span > 0.0 ? (r - table.rho_other[lo]) / span : 0.0;
    const Percentiles& a = table.rows[lo];
    const Percentiles& b = table.rows[hi];
    out.p = Percentiles{a.p05 + t * (b.p05 - a.p05), a.p10 + t * (b.p10 - a.p10),
                        a.p90 + t * (b.p90 - a.p90), a.p95 + t * (b.p95 - a.p95)};
    return out;
}

TestDecision one_sided_test(double estimate, double rho_other_estimate,
                            const CriticalValueTable& table) {
    if (!std::isfinite(estimate) || !std::isfinite(rho_other_estimate))
        throw input_error("one_sided_test: non-finite input");
    const CvInterp cv = interpolate_cv(table, rho_other_estimate);
    TestDecision d;
    d.estimate = estimate;
    d.critical_values = cv.p;
    d.clamped = cv.clamped;
    if (estimate > cv.p.p95)
        d.verdict = Verdict::positive_at_5;
    else if (estimate > cv.p.p90)
        d.verdict = Verdict::positive_at_10;
    else if (estimate < cv.p.p05)
        d.verdict = Verdict::negative_at_5;
    else if (estimate < cv.p.p10)
        d.verdict = Verdict::negative_at_10;
    else
        d.verdict = Verdict::not_significant;
    return d;
}

const CriticalValueTable& default_critical_values() {
    static const CriticalValueTable table = [] {
        CriticalValueTable t;
        t.rho_other = {-0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8};
        t.rows = {
            {-0.23, -0.17, 0.19, 0.23}, {-0.29, -0.23, 0.19, 0.25},
            {-0.31, -0.21, 0.23, 0.29}, {-0.41, -0.29, 0.27, 0.31},
            {-0.35, -0.29, 0.25, 0.31}, {-0.50, -0.38, 0.27, 0.35},
            {-0.52, -0.41, 0.29, 0.37}, {-0.58, -0.41, 0.31, 0.41},
            {-0.84, -0.62, 0.38, 0.50},
        };
        return t;
    }();
    return table;
}

CriticalValueTable load_cv_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw input_error("cannot open critical-value table: " + path);
    std::string line;
    if (!std::getline(in, line))
        throw input_error("critical-value table is empty: " + path);
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != "rho_other,p05,p10,p90,p95")
        throw input_error("critical-value table: unexpected header '" + line +
                          "'");
    CriticalValueTable t;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        std::istringstream row(line);
        double vals[5];
        char comma;
        row >> vals[0];
        for (int i = 1; i < 5; ++i)
            row >> comma >> vals[i];
        if (!row)
            throw input_error("critical-value table: bad row '" + line + "'");
        t.rho_other.push_back(vals[0]);
        t.rows.push_back(Percentiles{vals[1], vals[2], vals[3], vals[4]});
    }
    if (t.rho_other.empty())
        throw input_error("critical-value table has no rows: " + path);
    for (std::size_t i = 0; i + 1 < t.rho_other.size(); ++i)
        if (!(t.rho_other[i] < t.rho_other[i + 1]))
            throw input_error("critical-value table: rho_other not increasing");
    for (const auto& r : t.rows)
        if (!(r.p05 <= r.p10 && r.p10 <= r.p90 && r.p90 <= r.p95))
            throw input_error("critical-value table: percentiles out of order");
    return t;
}

void write_cv_csv(const std::string& path, const CriticalValueTable& table) {
    std::ofstream out(path);
    if (!out)
        throw input_error("cannot write critical-value table: " + path);
    out << "rho_other,p05,p10,p90,p95\n";
    char buf[160];
    for (std::size_t i = 0; i < table.rho_other.size(); ++i) {
        const Percentiles& p = table.rows[i];
        std::snprintf(buf, sizeof(buf), "%.4g,%.6g,%.6g,%.6g,%.6g\n",
                      table.rho_other[i], p.p05, p.p10, p.p90, p.p95);
        out << buf;
    }
}

} // namespace splitcop::mc
