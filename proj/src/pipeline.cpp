#include "splitcop/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "splitcop/errors.hpp"

namespace splitcop::pipeline {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n\xEF\xBB\xBF");
    if (b == std::string::npos)
        return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool valid_iso_date(const std::string& d) {
    if (d.size() != 10 || d[4] != '-' || d[7] != '-')
        return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(d[i])))
            return false;
    const int month = (d[5] - '0') * 10 + (d[6] - '0');
    const int day = (d[8] - '0') * 10 + (d[9] - '0');
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

bool parse_value(const std::string& field, double* out) {
    const std::string t = trim(field);
    if (t.empty())
        return false;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || !std::isfinite(v))
        return false;
    *out = v;
    return true;
}

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

} // namespace

PriceSeries load_csv(const std::string& path, SeriesKind kind) {
    std::ifstream in(path);
    if (!in)
        throw input_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw input_error(path + ": empty file");
    if (trim(line) != "date,value")
        throw input_error(path + ": expected header 'date,value', got '" +
                          trim(line) + "'");
    PriceSeries out;
    out.kind = kind;
    int unparseable = 0;
    int total = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty())
            continue;
        ++total;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos) {
            ++unparseable;
            continue;
        }
        const std::string date = trim(line.substr(0, comma));
        const std::string value_field = line.substr(comma + 1);
        if (trim(value_field).empty()) {
            ++out.dropped_rows; // missing value: dropped, counted
            continue;
        }
        double v;
        if (!valid_iso_date(date) || !parse_value(value_field, &v)) {
            ++unparseable;
            continue;
        }
        if (kind == SeriesKind::bond_yield_percent && v < 0.0)
            throw input_error(path + ": negative yield at " + date);
        if (!out.dates.empty() && !(out.dates.back() < date))
            throw input_error(path + ": dates not strictly increasing at " +
                              date);
        out.dates.push_back(date);
        out.values.push_back(v);
    }
    if (total > 0 && unparseable > 0.05 * total) {
        std::ostringstream os;
        os << path << ": " << unparseable << " of " << total
           << " rows unparseable (> 5%)";
        throw input_error(os.str());
    }
    out.dropped_rows += unparseable;
    if (out.dates.empty())
        throw input_error(path + ": no usable rows");
    return out;
}

double bond_price(double yield_percent) {
    if (!std::isfinite(yield_percent))
        throw input_error("bond_price: non-finite yield");
    const double base = 1.0 + yield_percent / 100.0;
    if (base <= 0.0)
        throw input_error("bond_price: 1 + y/100 must be positive");
    return 1.0 / std::pow(base, 10.0);
}

ReturnSeries to_returns(const PriceSeries& series) {
    if (series.values.size() < 2)
        throw input_error("to_returns: need at least two observations");
    std::vector<double> price(series.values.size());
    for (std::size_t i = 0; i < price.size(); ++i) {
        price[i] = series.kind == SeriesKind::bond_yield_percent
                       ? bond_price(series.values[i])
                       : series.values[i];
        if (!(price[i] > 0.0))
            throw input_error("to_returns: non-positive price at " +
                              series.dates[i]);
    }
    ReturnSeries out;
    out.kind = series.kind;
    out.dates.assign(series.dates.begin() + 1, series.dates.end());
    out.values.resize(price.size() - 1);
    for (std::size_t i = 0; i + 1 < price.size(); ++i)
        out.values[i] = 100.0 * (std::log(price[i + 1]) - std::log(price[i]));
    return out;
}

namespace {

AlignedPairs align_on_dates(const std::vector<std::string>& dx,
                            std::span<const double> vx,
                            const std::vector<std::string>& dy,
                            std::span<const double> vy) {
    AlignedPairs out;
    std::size_t i = 0, j = 0;
    while (i < dx.size() && j < dy.size()) {
        if (dx[i] == dy[j]) {
            out.dates.push_back(dx[i]);
            out.x.push_back(vx[i]);
            out.y.push_back(vy[j]);
            ++i;
            ++j;
        } else if (dx[i] < dy[j]) {
            ++out.dropped_x;
            ++i;
        } else {
            ++out.dropped_y;
            ++j;
        }
    }
    out.dropped_x += static_cast<int>(dx.size() - i);
    out.dropped_y += static_cast<int>(dy.size() - j);
    if (out.dates.empty())
        throw input_error("align: no common dates");
    return out;
}

} // namespace

AlignedPairs align(const ReturnSeries& a, const ReturnSeries& b) {
    if (a.values.empty() || b.values.empty())
        throw input_error("align: empty input series");
    return align_on_dates(a.dates, a.values, b.dates, b.values);
}

SummaryStats summarize(std::span<const double> x) {
    if (x.empty())
        throw input_error("summarize: empty series");
    SummaryStats s;
    const double n = static_cast<double>(x.size());
    s.min = x[0];
    s.max = x[0];
    for (double v : x) {
        s.mean += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    s.mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - s.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    s.sd = n > 1 ? std::sqrt(m2 * n / (n - 1.0)) : 0.0;
    s.skew = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    s.kurt = m2 > 0.0 ? m4 / (m2 * m2) - 3.0 : 0.0;
    return s;
}

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw input_error("kendall_tau_b: need two equal-length series");
    long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0)
                continue;
            if (dx == 0.0)
                ++ties_x;
            else if (dy == 0.0)
                ++ties_y;
            else if (dx * dy > 0.0)
                ++concordant;
            else
                ++discordant;
        }
    }
    const double n0 = 0.5 * static_cast<double>(n) * (static_cast<double>(n) - 1.0);
    const double denom = std::sqrt((n0 - static_cast<double>(ties_x)) *
                                   (n0 - static_cast<double>(ties_y)));
    if (denom == 0.0)
        throw numeric_error("kendall_tau_b: degenerate series");
    return (static_cast<double>(concordant) - static_cast<double>(discordant)) /
           denom;
}

void RunConfig::validate() const {
    if (window < 50)
        throw config_error("config: window must be >= 50");
    if (!(grid_step >= 0.01 && grid_step <= 0.1))
        throw config_error("config: grid step must lie in [0.01, 0.1]");
    if (m_points < 10)
        throw config_error("config: m_points must be >= 10");
    if (max_ar < 0 || max_ar > garch::max_ar_order)
        throw config_error("config: max_ar out of range");
    grid_spec().validate();
}

// ---------------------------------------------------------------------------
// Stage writers. Numeric fields that later stages re-read are written with
// round-trip precision ('%.17g') so reruns from intermediates are exact.

void write_returns_csv(const std::string& path, const AlignedPairs& r) {
    std::ofstream out(path);
    if (!out)
        throw input_error("cannot write " + path);
    out << "date,stock_return,bond_return\n";
    for (std::size_t i = 0; i < r.dates.size(); ++i)
        out << r.dates[i] << ',' << fmt("%.17g", r.x[i]) << ','
            << fmt("%.17g", r.y[i]) << '\n';
}

void write_summary_csv(const std::string& path, const AlignedPairs& r) {
    const SummaryStats sx = summarize(r.x);
    const SummaryStats sy = summarize(r.y);
    const double tau = kendall_tau_b(r.x, r.y);
    std::ofstream out(path);
    if (!out)
        throw input_error("cannot write " + path);
    out << "series,mean,sd,min,max,skew,kurt,kendall_tau\n";
    auto row = [&](const char* name, const SummaryStats& s) {
        out << name << ',' << fmt("%.6f", s.mean) << ',' << fmt("%.6f", s.sd)
            << ',' << fmt("%.6f", s.min) << ',' << fmt("%.6f", s.max) << ','
            << fmt("%.6f", s.skew) << ',' << fmt("%.6f", s.kurt) << ','
            << fmt("%.6f", tau) << '\n';
    };
    row("stock", sx);
    row("bond", sy);
}

void write_garch_csv(const std::string& path,
                     std::span<const std::pair<std::string, const garch::GarchFit*>> fits) {
    std::ofstream out(path);
    if (!out)
        throw input_error("cannot write " + path);
    out << "series,p,alpha0,se_alpha0,alpha1,se_alpha1,beta1,se_beta1,nu,se_nu,"
           "mu,se_mu,ar_coeffs,ar_se,loglik,aic\n";
    auto row = [&](const std::string& name, const garch::GarchFit& f) {
        const std::size_t base = f.spec.include_mean ? 1 : 0;
        const std::size_t ig = base + static_cast<std::size_t>(f.spec.p);
        auto se = [&](std::size_t i) {
            return i < f.std_errors.size() ? f.std_errors[i]
                                           : std::numeric_limits<double>::quiet_NaN();
        };
        out << name << ',' << f.spec.p << ',' << fmt("%.6f", f.params.alpha0)
            << ',' << fmt("%.6f", se(ig)) << ',' << fmt("%.6f", f.params.alpha1)
            << ',' << fmt("%.6f", se(ig + 1)) << ','
            << fmt("%.6f", f.params.beta1) << ',' << fmt("%.6f", se(ig + 2))
            << ',' << fmt("%.6f", f.params.nu) << ',' << fmt("%.6f", se(ig + 3))
            << ',' << fmt("%.6f", f.params.mu) << ','
            << fmt("%.6f", f.spec.include_mean ? se(0) : 0.0) << ',';
        for (std::size_t i = 0; i < f.params.ar.size(); ++i)
            out << (i ? " " : "") << fmt("%.6f", f.params.ar[i]);
        out << ',';
        for (std::size_t i = 0; i < f.params.ar.size(); ++i)
            out << (i ? " " : "") << fmt("%.6f", se(base + i));
        out << ',' << fmt("%.6f", f.loglik) << ',' << fmt("%.6f", f.aic) << '\n';
    };
    for (const auto& [name, fit] : fits)
        row(name, *fit);
}

void write_garch_csv(const std::string& path, const garch::GarchFit& stock,
                     const garch::GarchFit& bond) {
    const std::pair<std::string, const garch::GarchFit*> fits[] = {
        {"stock", &stock}, {"bond", &bond}};
    write_garch_csv(path, fits);
}

void write_pit_csv(const std::string& path, const AlignedPairs& pits) {
    std::ofstream out(path);
    if (!out)
        throw input_error("cannot write " + path);
    out << "date,x,y\n";
    for (std::size_t i = 0; i < pits.dates.size(); ++i)
        out << pits.dates[i] << ',' << fmt("%.17g", pits.x[i]) << ','
            << fmt("%.17g", pits.y[i]) << '\n';
}

void write_rolling_csv(const std::string& path, const AlignedPairs& pits,
                       const grid::RollingResult& rolling,
                       const std::vector<mc::TestDecision>& verdicts_u,
                       const std::vector<mc::TestDecision>& verdicts_l) {
    std::ofstream out(path);
    if (!out)
        throw input_error("cannot write " + path);
    out << "center_date,rho_u,rho_l,loglik,verdict_u,verdict_l\n";
    for (std::size_t i = 0; i < rolling.fits.size(); ++i) {
        const auto& f = rolling.fits[i];
        out << pits.dates[rolling.center_indices[i]] << ','
            << fmt("%.4f", f.rho_u) << ',' << fmt("%.4f", f.rho_l) << ','
            << fmt("%.10g", f.loglik) << ',' << mc::to_string(verdicts_u[i].verdict)
            << ',' << mc::to_string(verdicts_l[i].verdict) << '\n';
    }
}

AlignedPairs load_pair_csv(const std::string& path, const char* xname,
                           const char* yname) {
    std::ifstream in(path);
    if (!in)
        throw input_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line))
        throw input_error(path + ": empty file");
    const std::string expect = std::string("date,") + xname + "," + yname;
    if (trim(line) != expect)
        throw input_error(path + ": expected header '" + expect + "'");
    AlignedPairs out;
    while (std::getline(in, line)) {
        if (trim(line).empty())
            continue;
        std::istringstream row(line);
        std::string date, xs, ys;
        if (!std::getline(row, date, ',') || !std::getline(row, xs, ',') ||
            !std::getline(row, ys))
            throw input_error(path + ": bad row '" + line + "'");
        double x, y;
        if (!valid_iso_date(trim(date)) || !parse_value(xs, &x) ||
            !parse_value(ys, &y))
            throw input_error(path + ": bad row '" + line + "'");
        out.dates.push_back(trim(date));
        out.x.push_back(x);
        out.y.push_back(y);
    }
    if (out.dates.empty())
        throw input_error(path + ": no rows");
    return out;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string config_string(const RunConfig& cfg) {
    std::ostringstream os;
    os << "stock=" << cfg.stock_csv << ";bond=" << cfg.bond_csv
       << ";window=" << cfg.window << ";step=" << cfg.grid_step
       << ";lo=" << cfg.grid_lo << ";hi=" << cfg.grid_hi
       << ";m=" << cfg.m_points << ";seed=" << cfg.seed
       << ";max_ar=" << cfg.max_ar << ";cv=" << cfg.cv_table_path;
    return os.str();
}

void write_manifest(const std::string& path, const RunConfig& cfg,
                    const RunArtifacts& art) {
    std::ofstream out(path);
    if (!out)
        throw input_error("cannot write " + path);
    const std::string cs = config_string(cfg);
    out << "splitcop " << library_version << "\n"
        << "config: " << cs << "\n"
        << "config_hash: " << fnv1a(cs) << "\n"
        << "aligned_returns: " << art.returns.dates.size() << "\n"
        << "returns_dropped: stock=" << art.returns.dropped_x
        << " bond=" << art.returns.dropped_y << "\n"
        << "ar_order: stock=" << art.stock_fit.spec.p
        << " bond=" << art.bond_fit.spec.p << "\n"
        << "pit_pairs: " << art.pits.dates.size() << "\n"
        << "windows: " << art.rolling.fits.size() << "\n";
}

} // namespace

RunArtifacts run_empirical(const RunConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const auto path_in = [&](const char* name) {
        return (fs::path(cfg.out_dir) / name).string();
    };

    RunArtifacts art;
    try {
        const PriceSeries stock = load_csv(cfg.stock_csv, SeriesKind::stock_index);
        const PriceSeries bond =
            load_csv(cfg.bond_csv, SeriesKind::bond_yield_percent);
        art.returns = align(to_returns(stock), to_returns(bond));
        write_returns_csv(path_in("returns.csv"), art.returns);
        write_summary_csv(path_in("summary_stats.csv"), art.returns);
    } catch (const std::exception& e) {
        throw input_error(std::string("[returns] ") + e.what());
    }

    try {
        auto [spec_s, fit_s] = garch::select_and_fit(art.returns.x, cfg.max_ar);
        auto [spec_b, fit_b] = garch::select_and_fit(art.returns.y, cfg.max_ar);
        art.stock_fit = std::move(fit_s);
        art.bond_fit = std::move(fit_b);
        write_garch_csv(path_in("garch_params.csv"), art.stock_fit, art.bond_fit);
    } catch (const std::exception& e) {
        throw numeric_error(std::string("[garch] ") + e.what());
    }

    try {
        // Residuals start at index p of the aligned dates; re-align the two
        // PIT series in case the AR orders differ.
        const std::vector<std::string> dx(
            art.returns.dates.begin() + art.stock_fit.spec.p,
            art.returns.dates.end());
        const std::vector<std::string> dy(
            art.returns.dates.begin() + art.bond_fit.spec.p,
            art.returns.dates.end());
        art.pits = align_on_dates(dx, art.stock_fit.pit_values, dy,
                                  art.bond_fit.pit_values);
        write_pit_csv(path_in("pit.csv"), art.pits);
    } catch (const std::exception& e) {
        throw numeric_error(std::string("[pit] ") + e.what());
    }

    try {
        if (static_cast<int>(art.pits.dates.size()) < cfg.window)
            throw input_error("fewer PIT pairs than the rolling window");
        const grid::ModelCache cache(cfg.grid_spec(), cfg.m_points);
        std::vector<std::pair<double, double>> pairs(art.pits.dates.size());
        for (std::size_t i = 0; i < pairs.size(); ++i)
            pairs[i] = {art.pits.x[i], art.pits.y[i]};
        art.rolling =
            grid::fit_rolling(pairs, static_cast<std::size_t>(cfg.window), cache);

        const mc::CriticalValueTable table =
            cfg.cv_table_path.empty() ? mc::default_critical_values()
                                      : mc::load_cv_csv(cfg.cv_table_path);
        art.verdicts_u.reserve(art.rolling.fits.size());
        art.verdicts_l.reserve(art.rolling.fits.size());
        for (const auto& f : art.rolling.fits) {
            art.verdicts_u.push_back(mc::one_sided_test(f.rho_u, f.rho_l, table));
            art.verdicts_l.push_back(mc::one_sided_test(f.rho_l, f.rho_u, table));
        }
        write_rolling_csv(path_in("rolling_correlations.csv"), art.pits,
                          art.rolling, art.verdicts_u, art.verdicts_l);
    } catch (const input_error& e) {
        throw input_error(std::string("[rolling] ") + e.what());
    } catch (const std::exception& e) {
        throw numeric_error(std::string("[rolling] ") + e.what());
    }

    write_manifest(path_in("run_manifest.txt"), cfg, art);
    return art;
}

void mc_tables(const McTablesConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const grid::GridSpec spec{cfg.grid_lo, cfg.grid_hi, cfg.grid_step};
    const grid::ModelCache cache(spec, cfg.m_points);
    const mc::McConfig mcc{cfg.sample_size, cfg.reps, cfg.seed, 0.01};

    if (cfg.moments) {
        std::ofstream out((fs::path(cfg.out_dir) / "mc_moments.csv").string());
        if (!out)
            throw input_error("cannot write mc_moments.csv");
        out << "true_rho_u,true_rho_l,mean,sd,skew,kurt,dropped\n";
        for (double ru : cfg.moment_rhos) {
            for (double rl : cfg.moment_rhos) {
                const mc::MomentsRow row = mc::mc_moments(ru, rl, mcc, cache);
                out << fmt("%.4g", ru) << ',' << fmt("%.4g", rl) << ','
                    << fmt("%.6g", row.mean) << ',' << fmt("%.6g", row.sd) << ','
                    << fmt("%.6g", row.skew) << ',' << fmt("%.6g", row.kurt)
                    << ',' << row.dropped << '\n';
            }
        }
    }
    if (cfg.critical_values) {
        mc::CriticalValueTable table;
        for (double r : cfg.cv_rhos) {
            table.rho_other.push_back(r);
            table.rows.push_back(mc::mc_critical_values(r, mcc, cache));
        }
        mc::write_cv_csv(
            (fs::path(cfg.out_dir) / "mc_critical_values.csv").string(), table);
    }
}

} // namespace splitcop::pipeline
