#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "splitcop/copula.hpp"

namespace splitcop::grid {

/// Uniform lattice over (rho_u, rho_l). The span must be an integral
/// number of steps.
struct GridSpec {
    double lo = -0.95;
    double hi = 0.95;
    double step = 0.01;

    void validate() const;
    int points_per_axis() const;
    double value(int i) const { return lo + step * i; }
};

struct FitResult {
    double rho_u = 0.0;
    double rho_l = 0.0;
    double loglik = 0.0;
    bool grid_argmax_unique = true;
    int cells_skipped = 0;
};

struct RollingResult {
    std::size_t window = 0;
    std::vector<std::size_t> center_indices; // start + window/2, one per window
    std::vector<FitResult> fits;
};

/// One copula model per grid cell. Tables depend only on the cell's
/// parameters, never on data, so a cache is shared across windows and
/// Monte Carlo replicates. Immutable after construction and safe for
/// concurrent reads.
class ModelCache {
public:
    ModelCache(const GridSpec& spec, int m_points = 50);

    const GridSpec& spec() const { return spec_; }
    int m_points() const { return m_points_; }
    std::size_t cell_count() const { return cells_.size(); }
    std::size_t axis_points() const { return n_; }

    const copula::CopulaModel* cell(std::size_t idx) const {
        return cells_[idx] ? &*cells_[idx] : nullptr;
    }
    double rho_u_of(std::size_t idx) const {
        return spec_.value(static_cast<int>(idx / n_));
    }
    double rho_l_of(std::size_t idx) const {
        return spec_.value(static_cast<int>(idx % n_));
    }

private:
    GridSpec spec_;
    int m_points_;
    std::size_t n_;
    std::vector<std::optional<copula::CopulaModel>> cells_;
};

using PairData = std::span<const std::pair<double, double>>;

/// Exhaustive grid-search MLE. Ties are broken toward the smallest
/// |rho_u| + |rho_l|, then lexicographically, so results are deterministic
/// and independent of evaluation order and thread count.
FitResult fit_grid(PairData data, const ModelCache& cache);
FitResult fit_grid(PairData data, const GridSpec& spec, int m_points = 50);

/// Independent datasets fitted in one pass over the cells, so each cell's
/// tables are read once instead of once per dataset. Matches fit_grid
/// result-for-result.
std::vector<FitResult> fit_grid_batch(
    std::span<const std::vector<std::pair<double, double>>> datasets,
    const ModelCache& cache);

/// Two-stage search: a 0.05-step scan of the full range, then the fine
/// grid within +/- 0.06 of the best coarse cell. Cheaper than the
/// exhaustive scan but can miss a distant secondary mode; off by default
/// everywhere.
FitResult fit_grid_coarse_fine(PairData data, const GridSpec& fine_spec,
                               int m_points = 50);

/// One fit per contiguous window, advancing by one observation.
RollingResult fit_rolling(PairData data, std::size_t window,
                          const ModelCache& cache);

} // namespace splitcop::grid
