// Command-line driver for the split normal copula toolkit.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include "CLI11.hpp"
#include "splitcop/errors.hpp"
#include "splitcop/pipeline.hpp"

namespace {

using namespace splitcop;

int cmd_run(const pipeline::RunConfig& cfg) {
    const auto art = pipeline::run_empirical(cfg);
    std::cout << "aligned returns: " << art.returns.dates.size() << "\n"
              << "AR orders: stock p=" << art.stock_fit.spec.p
              << ", bond p=" << art.bond_fit.spec.p << "\n"
              << "windows fitted: " << art.rolling.fits.size() << "\n"
              << "outputs written to " << cfg.out_dir << "\n";
    return 0;
}

struct McCommon {
    pipeline::McTablesConfig cfg;
    double rho_u = std::numeric_limits<double>::quiet_NaN();
    double rho_l = std::numeric_limits<double>::quiet_NaN();
    double rho_other = std::numeric_limits<double>::quiet_NaN();
};

int cmd_mc_moments(McCommon& opt) {
    opt.cfg.moments = true;
    opt.cfg.critical_values = false;
    const bool have_u = !std::isnan(opt.rho_u);
    const bool have_l = !std::isnan(opt.rho_l);
    if (have_u != have_l)
        throw config_error("mc-moments: give both --rho-u and --rho-l or neither");
    if (have_u) {
        grid::GridSpec spec{opt.cfg.grid_lo, opt.cfg.grid_hi, opt.cfg.grid_step};
        const grid::ModelCache cache(spec, opt.cfg.m_points);
        const mc::McConfig mcc{opt.cfg.sample_size, opt.cfg.reps, opt.cfg.seed,
                               0.01};
        const auto row = mc::mc_moments(opt.rho_u, opt.rho_l, mcc, cache);
        std::printf("true_rho_u,true_rho_l,mean,sd,skew,kurt,dropped\n");
        std::printf("%.4g,%.4g,%.6g,%.6g,%.6g,%.6g,%d\n", row.true_rho_u,
                    row.true_rho_l, row.mean, row.sd, row.skew, row.kurt,
                    row.dropped);
        return 0;
    }
    pipeline::mc_tables(opt.cfg);
    std::cout << "wrote mc_moments.csv to " << opt.cfg.out_dir << "\n";
    return 0;
}

int cmd_mc_critical_values(McCommon& opt) {
    opt.cfg.moments = false;
    opt.cfg.critical_values = true;
    if (!std::isnan(opt.rho_other))
        opt.cfg.cv_rhos = {opt.rho_other};
    if (opt.cfg.reps < 20)
        std::cerr << "warning: percentiles from " << opt.cfg.reps
                  << " replicates are degenerate\n";
    pipeline::mc_tables(opt.cfg);
    std::cout << "wrote mc_critical_values.csv to " << opt.cfg.out_dir << "\n";
    return 0;
}

int cmd_simulate(double rho_u, double rho_l, int n, std::uint64_t seed,
                 const std::string& out_path) {
    const auto params = splitnorm::complete_params(rho_u, rho_l);
    const auto table = copula::build_marginal_table(params);
    const auto raw = splitnorm::sample(params, static_cast<std::size_t>(n), seed);
    std::ofstream out(out_path);
    if (!out)
        throw input_error("cannot write " + out_path);
    char buf[80];
    out << "x,y\n";
    for (const auto& [w, v] : raw) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", table.cdf(w),
                      table.cdf(v));
        out << buf;
    }
    std::cout << "wrote " << n << " copula samples to " << out_path << "\n";
    return 0;
}

int cmd_fit(const std::string& pit_path, const pipeline::RunConfig& cfg) {
    const auto pits = pipeline::load_pair_csv(pit_path, "x", "y");
    std::vector<std::pair<double, double>> pairs(pits.dates.size());
    for (std::size_t i = 0; i < pairs.size(); ++i)
        pairs[i] = {pits.x[i], pits.y[i]};
    const auto fit = grid::fit_grid(pairs, cfg.grid_spec(), cfg.m_points);
    const auto& table = cfg.cv_table_path.empty()
                            ? mc::default_critical_values()
                            : mc::load_cv_csv(cfg.cv_table_path);
    const auto tu = mc::one_sided_test(fit.rho_u, fit.rho_l, table);
    const auto tl = mc::one_sided_test(fit.rho_l, fit.rho_u, table);
    std::printf("n,rho_u,rho_l,loglik,verdict_u,verdict_l\n");
    std::printf("%zu,%.4f,%.4f,%.10g,%s,%s\n", pairs.size(), fit.rho_u,
                fit.rho_l, fit.loglik, mc::to_string(tu.verdict).c_str(),
                mc::to_string(tl.verdict).c_str());
    return 0;
}

int cmd_garch(const std::string& input, const std::string& kind, int max_ar,
              const std::string& out_dir) {
    std::vector<double> returns;
    std::vector<std::string> dates;
    if (kind == "returns") {
        const auto series =
            pipeline::load_csv(input, pipeline::SeriesKind::stock_index);
        returns = series.values;
        dates = series.dates;
    } else {
        const auto series = pipeline::load_csv(
            input, kind == "bond-yields" ? pipeline::SeriesKind::bond_yield_percent
                                         : pipeline::SeriesKind::stock_index);
        const auto rs = pipeline::to_returns(series);
        returns = rs.values;
        dates = rs.dates;
    }
    auto [spec, fit] = garch::select_and_fit(returns, max_ar);
    std::filesystem::create_directories(out_dir);
    const std::pair<std::string, const garch::GarchFit*> fits[] = {{kind, &fit}};
    pipeline::write_garch_csv(
        (std::filesystem::path(out_dir) / "garch_params.csv").string(), fits);
    std::printf("p=%d alpha0=%.4f alpha1=%.4f beta1=%.4f nu=%.3f loglik=%.4f "
                "aic=%.4f\n",
                spec.p, fit.params.alpha0, fit.params.alpha1, fit.params.beta1,
                fit.params.nu, fit.loglik, fit.aic);
    std::ofstream pit_out((std::filesystem::path(out_dir) / "pit.csv").string());
    pit_out << "date,u\n";
    char buf[64];
    for (std::size_t i = 0; i < fit.pit_values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g\n", fit.pit_values[i]);
        pit_out << dates[static_cast<std::size_t>(fit.spec.p) + i] << ',' << buf;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"split normal copula: tail-correlation estimation toolkit"};
    app.require_subcommand(1);

    pipeline::RunConfig run_cfg;
    auto* run = app.add_subcommand("run", "full empirical pipeline");
    run->add_option("--stock", run_cfg.stock_csv, "stock index CSV (date,value)")
        ->required();
    run->add_option("--bond", run_cfg.bond_csv, "bond yield CSV (date,value)")
        ->required();
    run->add_option("--window", run_cfg.window, "rolling window length");
    run->add_option("--grid-step", run_cfg.grid_step, "grid width");
    run->add_option("--grid-lo", run_cfg.grid_lo, "grid lower bound");
    run->add_option("--grid-hi", run_cfg.grid_hi, "grid upper bound");
    run->add_option("--m-points", run_cfg.m_points, "marginal table size");
    run->add_option("--cv-table", run_cfg.cv_table_path,
                    "critical-value table CSV");
    run->add_option("--seed", run_cfg.seed, "run seed (recorded in manifest)");
    run->add_option("--out", run_cfg.out_dir, "output directory");
    run->add_option("--max-ar", run_cfg.max_ar, "maximum AR order");

    McCommon mc_opt;
    auto add_mc_options = [&](CLI::App* cmd) {
        cmd->add_option("--n", mc_opt.cfg.sample_size, "sample size");
        cmd->add_option("--reps", mc_opt.cfg.reps, "replicates");
        cmd->add_option("--seed", mc_opt.cfg.seed, "seed");
        cmd->add_option("--grid-step", mc_opt.cfg.grid_step, "grid width");
        cmd->add_option("--grid-lo", mc_opt.cfg.grid_lo, "grid lower bound");
        cmd->add_option("--grid-hi", mc_opt.cfg.grid_hi, "grid upper bound");
        cmd->add_option("--m-points", mc_opt.cfg.m_points, "marginal table size");
        cmd->add_option("--out", mc_opt.cfg.out_dir, "output directory");
    };
    auto* mcm = app.add_subcommand("mc-moments",
                                   "estimator sampling moments by Monte Carlo");
    add_mc_options(mcm);
    mcm->add_option("--rho-u", mc_opt.rho_u, "single true rho_u");
    mcm->add_option("--rho-l", mc_opt.rho_l, "single true rho_l");
    auto* mcv = app.add_subcommand("mc-critical-values",
                                   "one-sided test critical values");
    add_mc_options(mcv);
    mcv->add_option("--rho-other", mc_opt.rho_other,
                    "single other-tail correlation");

    double sim_rho_u = 0.0, sim_rho_l = 0.0;
    int sim_n = 1000;
    std::uint64_t sim_seed = 1;
    std::string sim_out = "copula_samples.csv";
    auto* sim = app.add_subcommand("simulate", "emit synthetic copula samples");
    sim->add_option("--rho-u", sim_rho_u, "upper tail correlation")->required();
    sim->add_option("--rho-l", sim_rho_l, "lower tail correlation")->required();
    sim->add_option("--n", sim_n, "number of samples");
    sim->add_option("--seed", sim_seed, "seed");
    sim->add_option("--out", sim_out, "output CSV");

    std::string fit_input;
    pipeline::RunConfig fit_cfg;
    auto* fit = app.add_subcommand("fit", "single fit on a PIT CSV (date,x,y)");
    fit->add_option("--input", fit_input, "PIT CSV")->required();
    fit->add_option("--grid-step", fit_cfg.grid_step, "grid width");
    fit->add_option("--grid-lo", fit_cfg.grid_lo, "grid lower bound");
    fit->add_option("--grid-hi", fit_cfg.grid_hi, "grid upper bound");
    fit->add_option("--m-points", fit_cfg.m_points, "marginal table size");
    fit->add_option("--cv-table", fit_cfg.cv_table_path,
                    "critical-value table CSV");

    std::string garch_input, garch_kind = "stock-prices", garch_out = ".";
    int garch_max_ar = garch::max_ar_order;
    auto* gar = app.add_subcommand("garch", "fit one AR(p)-GARCH(1,1)-t margin");
    gar->add_option("--input", garch_input, "CSV (date,value)")->required();
    gar->add_option("--kind", garch_kind, "stock-prices | bond-yields | returns")
        ->check(CLI::IsMember({"stock-prices", "bond-yields", "returns"}));
    gar->add_option("--max-ar", garch_max_ar, "maximum AR order");
    gar->add_option("--out", garch_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 4;
    }

    try {
        if (run->parsed())
            return cmd_run(run_cfg);
        if (mcm->parsed())
            return cmd_mc_moments(mc_opt);
        if (mcv->parsed())
            return cmd_mc_critical_values(mc_opt);
        if (sim->parsed())
            return cmd_simulate(sim_rho_u, sim_rho_l, sim_n, sim_seed, sim_out);
        if (fit->parsed())
            return cmd_fit(fit_input, fit_cfg);
        if (gar->parsed())
            return cmd_garch(garch_input, garch_kind, garch_max_ar, garch_out);
    } catch (const config_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 4;
    } catch (const input_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
