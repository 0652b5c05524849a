#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sparsedit/tensor.hpp"

namespace sparsedit {

// Spatial layout of a token set; token count is h*w, rows stored row-major.
struct TokenGrid {
    std::int64_t h = 0;
    std::int64_t w = 0;

    std::int64_t count() const { return h * w; }
    bool operator==(const TokenGrid&) const = default;
    std::string str() const { return std::to_string(h) + "x" + std::to_string(w); }
};

// Bins for adaptive average pooling along one axis: bin i covers input
// indices [floor(i*n/m), ceil((i+1)*n/m)). Bins may overlap when m does not
// divide n; every input index is covered.
std::vector<std::pair<std::int64_t, std::int64_t>> pool_bins(std::int64_t n, std::int64_t m);

// Adaptive average pooling of (N,C) tokens laid out on `from` down to `to`.
Tensor pool_to_grid(const Tensor& x, TokenGrid from, TokenGrid to);

// Nearest-neighbor upsampling of (M,C) tokens from `from` up to `to`;
// output cell (i,j) copies source cell (floor(i*from.h/to.h), floor(j*from.w/to.w)).
Tensor upsample_from_grid(const Tensor& xs, TokenGrid from, TokenGrid to);

// FLOPs charged by pool_to_grid for the given grids under the 2*MAC
// convention: one add per pooled input cell plus one divide per output cell.
std::int64_t pool_cost(TokenGrid from, TokenGrid to, std::int64_t channels);

}  // namespace sparsedit
