#include "splitcop/estimation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>

#include "splitcop/errors.hpp"
#include "splitcop/parallel.hpp"

namespace splitcop::grid {

void GridSpec::validate() const {
    if (!(lo < hi))
        throw config_error("grid: lo must be < hi");
    if (!(step > 0.0))
        throw config_error("grid: step must be > 0");
    const double steps = (hi - lo) / step;
    if (std::fabs(steps - std::round(steps)) > 1e-9)
        throw config_error("grid: (hi - lo) must be an integral number of steps");
    if (std::fabs(lo) > splitnorm::max_abs_correlation ||
        std::fabs(hi) > splitnorm::max_abs_correlation)
        throw config_error("grid: bounds exceed the supported correlation range");
}

int GridSpec::points_per_axis() const {
    return static_cast<int>(std::round((hi - lo) / step)) + 1;
}

ModelCache::ModelCache(const GridSpec& spec, int m_points)
    : spec_(spec), m_points_(m_points) {
    spec_.validate();
    n_ = static_cast<std::size_t>(spec_.points_per_axis());
    cells_.resize(n_ * n_);
    parallel_for_blocks(cells_.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t idx = begin; idx < end; ++idx) {
            try {
                cells_[idx].emplace(
                    splitnorm::complete_params(rho_u_of(idx), rho_l_of(idx)),
                    m_points_);
            } catch (const std::exception&) {
                cells_[idx].reset();
            }
        }
    });
}

namespace {

struct CellScore {
    double loglik = -std::numeric_limits<double>::infinity();
    double rho_u = 0.0;
    double rho_l = 0.0;
    bool valid = false;
    bool tied = false;
};

// Strict total preference order: higher loglik, then smaller
// |rho_u| + |rho_l|, then lexicographic.
bool prefer(double ll, double ru, double rl, const CellScore& best) {
    if (ll != best.loglik)
        return ll > best.loglik;
    const double ka = std::fabs(ru) + std::fabs(rl);
    const double kb = std::fabs(best.rho_u) + std::fabs(best.rho_l);
    if (ka != kb)
        return ka < kb;
    if (ru != best.rho_u)
        return ru < best.rho_u;
    return rl < best.rho_l;
}

void absorb(CellScore& best, double ll, double ru, double rl) {
    if (!best.valid) {
        best = {ll, ru, rl, true, false};
        return;
    }
    if (ll > best.loglik) {
        best.loglik = ll;
        best.rho_u = ru;
        best.rho_l = rl;
        best.tied = false;
    } else if (ll == best.loglik) {
        best.tied = true;
        if (prefer(ll, ru, rl, best)) {
            best.rho_u = ru;
            best.rho_l = rl;
        }
    }
}

void merge(CellScore& into, const CellScore& other) {
    if (!other.valid)
        return;
    if (!into.valid) {
        into = other;
        return;
    }
    if (other.loglik > into.loglik) {
        into = other;
    } else if (other.loglik == into.loglik) {
        if (prefer(other.loglik, other.rho_u, other.rho_l, into))
            into = other;
        into.tied = true;
    }
}

void check_data(PairData data) {
    if (data.empty())
        throw input_error("fit_grid: empty data");
    if (data.size() < 20)
        throw input_error("fit_grid: need at least 20 observations");
    for (std::size_t i = 0; i < data.size(); ++i)
        if (!std::isfinite(data[i].first) || !std::isfinite(data[i].second)) {
            std::ostringstream os;
            os << "fit_grid: non-finite pair at index " << i;
            throw input_error(os.str());
        }
}

} // namespace

std::vector<FitResult> fit_grid_batch(
    std::span<const std::vector<std::pair<double, double>>> datasets,
    const ModelCache& cache) {
    if (datasets.empty())
        throw input_error("fit_grid: no datasets");
    for (const auto& d : datasets)
        check_data(d);
    const std::size_t n_sets = datasets.size();
    const std::size_t cells = cache.cell_count();
    const std::size_t blocks =
        std::min<std::size_t>(cells, static_cast<std::size_t>(max_threads()) * 8);
    const std::size_t per_block = (cells + blocks - 1) / blocks;
    std::vector<std::vector<CellScore>> block_best(blocks);
    std::vector<std::vector<int>> block_skips(blocks);

    parallel_for_blocks(blocks, [&](std::size_t bfirst, std::size_t blast) {
        for (std::size_t b = bfirst; b < blast; ++b) {
            auto& best = block_best[b];
            auto& skips = block_skips[b];
            best.assign(n_sets, CellScore{});
            skips.assign(n_sets, 0);
            const std::size_t lo = b * per_block;
            const std::size_t hi = std::min(cells, lo + per_block);
            for (std::size_t idx = lo; idx < hi; ++idx) {
                const copula::CopulaModel* model = cache.cell(idx);
                if (!model) {
                    for (auto& s : skips)
                        ++s;
                    continue;
                }
                const double ru = cache.rho_u_of(idx);
                const double rl = cache.rho_l_of(idx);
                for (std::size_t s = 0; s < n_sets; ++s) {
                    double ll = 0.0;
                    for (const auto& [x, y] : datasets[s])
                        ll += model->log_density_fast(x, y);
                    if (!std::isfinite(ll))
                        ++skips[s];
                    else
                        absorb(best[s], ll, ru, rl);
                }
            }
        }
    });

    std::vector<FitResult> out(n_sets);
    for (std::size_t s = 0; s < n_sets; ++s) {
        CellScore best;
        int skipped = 0;
        for (std::size_t b = 0; b < blocks; ++b) {
            if (!block_best[b].empty()) {
                merge(best, block_best[b][s]);
                skipped += block_skips[b][s];
            }
        }
        if (!best.valid)
            throw numeric_error("fit_grid: likelihood failed on every grid cell");
        out[s] = FitResult{best.rho_u, best.rho_l, best.loglik, !best.tied,
                           skipped};
    }
    return out;
}

FitResult fit_grid(PairData data, const ModelCache& cache) {
    const std::vector<std::pair<double, double>> copy(data.begin(), data.end());
    return fit_grid_batch({&copy, 1}, cache)[0];
}

FitResult fit_grid(PairData data, const GridSpec& spec, int m_points) {
    return fit_grid(data, ModelCache(spec, m_points));
}

FitResult fit_grid_coarse_fine(PairData data, const GridSpec& fine_spec,
                               int m_points) {
    fine_spec.validate();
    const double coarse_step = 0.05;
    const int coarse_cells =
        static_cast<int>(std::floor((fine_spec.hi - fine_spec.lo) / coarse_step));
    GridSpec coarse{fine_spec.lo, fine_spec.lo + coarse_step * coarse_cells,
                    coarse_step};
    const FitResult rough = fit_grid(data, ModelCache(coarse, m_points));

    auto clamp_to_fine = [&](double x) {
        const double snapped =
            fine_spec.lo +
            fine_spec.step * std::round((x - fine_spec.lo) / fine_spec.step);
        return std::clamp(snapped, fine_spec.lo, fine_spec.hi);
    };
    GridSpec local;
    local.step = fine_spec.step;
    local.lo = clamp_to_fine(rough.rho_u - 0.06);
    local.hi = clamp_to_fine(rough.rho_u + 0.06);
    GridSpec local_l;
    local_l.step = fine_spec.step;
    local_l.lo = clamp_to_fine(rough.rho_l - 0.06);
    local_l.hi = clamp_to_fine(rough.rho_l + 0.06);

    // rectangular refinement window around the coarse argmax
    const int nu =
        static_cast<int>(std::round((local.hi - local.lo) / local.step)) + 1;
    const int nl =
        static_cast<int>(std::round((local_l.hi - local_l.lo) / local_l.step)) + 1;
    FitResult best = rough;
    best.cells_skipped = rough.cells_skipped;
    bool have = false;
    for (int iu = 0; iu < nu; ++iu) {
        for (int il = 0; il < nl; ++il) {
            const double ru = local.lo + local.step * iu;
            const double rl = local_l.lo + local_l.step * il;
            try {
                const copula::CopulaModel model(
                    splitnorm::complete_params(ru, rl), m_points);
                double ll = 0.0;
                for (const auto& [x, y] : data)
                    ll += model.log_density_fast(x, y);
                if (!std::isfinite(ll)) {
                    ++best.cells_skipped;
                    continue;
                }
                if (!have || ll > best.loglik ||
                    (ll == best.loglik &&
                     std::fabs(ru) + std::fabs(rl) <
                         std::fabs(best.rho_u) + std::fabs(best.rho_l))) {
                    best.rho_u = ru;
                    best.rho_l = rl;
                    best.loglik = ll;
                    have = true;
                }
            } catch (const std::exception&) {
                ++best.cells_skipped;
            }
        }
    }
    if (!have)
        throw numeric_error("fit_grid_coarse_fine: refinement failed");
    return best;
}

RollingResult fit_rolling(PairData data, std::size_t window,
                          const ModelCache& cache) {
    if (window < 20)
        throw input_error("fit_rolling: window must be >= 20");
    if (data.size() < window)
        throw input_error("fit_rolling: data shorter than the window");
    check_data(data);

    const std::size_t n_windows = data.size() - window + 1;
    const std::size_t cells = cache.cell_count();
    const std::size_t blocks =
        std::min<std::size_t>(cells, static_cast<std::size_t>(max_threads()) * 8);
    const std::size_t per_block = (cells + blocks - 1) / blocks;
    std::vector<std::vector<CellScore>> block_best(blocks);
    std::atomic<int> skipped{0};

    parallel_for_blocks(blocks, [&](std::size_t bfirst, std::size_t blast) {
        std::vector<double> prefix(data.size() + 1);
        for (std::size_t b = bfirst; b < blast; ++b) {
            auto& best = block_best[b];
            best.assign(n_windows, CellScore{});
            const std::size_t lo = b * per_block;
            const std::size_t hi = std::min(cells, lo + per_block);
            for (std::size_t idx = lo; idx < hi; ++idx) {
                const copula::CopulaModel* model = cache.cell(idx);
                if (!model) {
                    skipped.fetch_add(1, std::memory_order_relaxed);
                    continue;
                }
                prefix[0] = 0.0;
                bool ok = true;
                for (std::size_t t = 0; t < data.size(); ++t) {
                    const double ld =
                        model->log_density_fast(data[t].first, data[t].second);
                    if (!std::isfinite(ld)) {
                        ok = false;
                        break;
                    }
                    prefix[t + 1] = prefix[t] + ld;
                }
                if (!ok) {
                    skipped.fetch_add(1, std::memory_order_relaxed);
                    continue;
                }
                const double ru = cache.rho_u_of(idx);
                const double rl = cache.rho_l_of(idx);
                for (std::size_t wi = 0; wi < n_windows; ++wi)
                    absorb(best[wi], prefix[wi + window] - prefix[wi], ru, rl);
            }
        }
    });

    RollingResult out;
    out.window = window;
    out.center_indices.resize(n_windows);
    out.fits.resize(n_windows);
    const int cell_skips = skipped.load();
    for (std::size_t wi = 0; wi < n_windows; ++wi) {
        CellScore best;
        for (const auto& blk : block_best)
            if (!blk.empty())
                merge(best, blk[wi]);
        if (!best.valid)
            throw numeric_error("fit_rolling: likelihood failed on every cell");
        out.center_indices[wi] = wi + window / 2;
        out.fits[wi] = FitResult{best.rho_u, best.rho_l, best.loglik,
                                 !best.tied, cell_skips};
    }
    return out;
}

} // namespace splitcop::grid
