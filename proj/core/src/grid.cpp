#include "sparsedit/grid.hpp"

#include "sparsedit/opcost.hpp"

namespace sparsedit {

std::vector<std::pair<std::int64_t, std::int64_t>> pool_bins(std::int64_t n, std::int64_t m) {
    std::vector<std::pair<std::int64_t, std::int64_t>> bins;
    bins.reserve(static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < m; ++i) {
        const std::int64_t lo = (i * n) / m;                 // floor
        const std::int64_t hi = ((i + 1) * n + m - 1) / m;   // ceil
        bins.emplace_back(lo, hi);
    }
    return bins;
}

Tensor pool_to_grid(const Tensor& x, TokenGrid from, TokenGrid to) {
    if (x.ndim() != 2 || x.shape[0] != from.count()) {
        throw ShapeError("pool_to_grid: tokens " + x.shape_str() + " do not match grid " + from.str());
    }
    if (to.h > from.h || to.w > from.w || to.h < 1 || to.w < 1) {
        throw ShapeError("pool_to_grid: cannot pool " + from.str() + " to " + to.str());
    }
    const std::int64_t c = x.shape[1];
    const auto hbins = pool_bins(from.h, to.h);
    const auto wbins = pool_bins(from.w, to.w);
    Tensor out({to.count(), c});
    std::int64_t pooled_cells = 0;
    for (std::int64_t bi = 0; bi < to.h; ++bi) {
        for (std::int64_t bj = 0; bj < to.w; ++bj) {
            const auto [r0, r1] = hbins[static_cast<std::size_t>(bi)];
            const auto [c0, c1] = wbins[static_cast<std::size_t>(bj)];
            const std::int64_t m = bi * to.w + bj;
            const double inv = 1.0 / static_cast<double>((r1 - r0) * (c1 - c0));
            for (std::int64_t r = r0; r < r1; ++r) {
                for (std::int64_t cc = c0; cc < c1; ++cc) {
                    const std::int64_t src = r * from.w + cc;
                    for (std::int64_t k = 0; k < c; ++k) out.at(m, k) += x.at(src, k);
                }
            }
            for (std::int64_t k = 0; k < c; ++k) out.at(m, k) *= inv;
            pooled_cells += (r1 - r0) * (c1 - c0);
        }
    }
    opcost::charge(opcost::kElementwise * (pooled_cells * c + to.count() * c));
    return out;
}

Tensor upsample_from_grid(const Tensor& xs, TokenGrid from, TokenGrid to) {
    if (xs.ndim() != 2 || xs.shape[0] != from.count()) {
        throw ShapeError("upsample_from_grid: tokens " + xs.shape_str() + " do not match grid " + from.str());
    }
    if (to.h < from.h || to.w < from.w) {
        throw ShapeError("upsample_from_grid: cannot upsample " + from.str() + " to " + to.str());
    }
    const std::int64_t c = xs.shape[1];
    Tensor out({to.count(), c});
    for (std::int64_t i = 0; i < to.h; ++i) {
        const std::int64_t si = (i * from.h) / to.h;
        for (std::int64_t j = 0; j < to.w; ++j) {
            const std::int64_t sj = (j * from.w) / to.w;
            const std::int64_t src = si * from.w + sj;
            const std::int64_t dst = i * to.w + j;
            for (std::int64_t k = 0; k < c; ++k) out.at(dst, k) = xs.at(src, k);
        }
    }
    return out;
}

std::int64_t pool_cost(TokenGrid from, TokenGrid to, std::int64_t channels) {
    const auto hbins = pool_bins(from.h, to.h);
    const auto wbins = pool_bins(from.w, to.w);
    std::int64_t pooled_cells = 0;
    for (const auto& [r0, r1] : hbins) {
        for (const auto& [c0, c1] : wbins) pooled_cells += (r1 - r0) * (c1 - c0);
    }
    return opcost::kElementwise * (pooled_cells * channels + to.count() * channels);
}

}  // namespace sparsedit
