#pragma once

#include <functional>

#include "sparsedit/grid.hpp"
#include "sparsedit/tensor.hpp"

namespace sparsedit {

inline constexpr double kLayerNormEps = 1e-6;

// Multi-head attention parameters; all projections are (C,Cout) applied as
// x*w + b. num_heads must divide C.
struct AttnParams {
    Tensor wq, bq;
    Tensor wk, bk;
    Tensor wv, bv;
    Tensor wo, bo;
    int num_heads = 1;
};

// Per-call attention controls: force_uniform replaces every post-softmax map
// with 1/B, observe receives each head's post-softmax map.
struct MhaOptions {
    bool force_uniform = false;
    std::function<void(int head, const Tensor& probs)> observe;
};

// Conditioning projection for adaLN modulation: u = silu(c)*w + b, chunked
// into (shift, scale, gate) triplets per branch.
struct AdaLnParams {
    Tensor w, b;  // (C, 6C) for transformer blocks
};

enum class AdaLnBranch { attention, mlp };

struct Modulated {
    Tensor x;     // layernorm(x) * (1 + scale) + shift
    Tensor gate;  // (1, C), multiplies the residual branch output
};

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor softmax_rows(const Tensor& x);
Tensor layer_norm(const Tensor& x, double eps = kLayerNormEps);
Tensor gelu_tanh(const Tensor& x);
Tensor silu(const Tensor& x);

Tensor mha(const Tensor& q_in, const Tensor& kv_in, const AttnParams& p, const MhaOptions* opt = nullptr);

Modulated adaln_modulate(const Tensor& x, const Tensor& c, const AdaLnParams& p, AdaLnBranch branch);

// Fixed 2-D sine-cosine table, one row per grid cell (row-major), channel
// layout [sin_h | cos_h | sin_w | cos_w]; C must be divisible by 4.
Tensor sincos_posembed_2d(TokenGrid grid, std::int64_t c);

// (H,W,ch) image to (N, patch*patch*ch) tokens, row-major over patches, and
// its exact inverse.
Tensor patchify(const Tensor& img, std::int64_t patch);
Tensor unpatchify(const Tensor& tokens, std::int64_t patch, std::int64_t h, std::int64_t w, std::int64_t ch);

// Sinusoidal timestep features: [cos(t*f_k) | sin(t*f_k)], f_k = 10000^(-k/half).
Tensor timestep_embedding(double t, std::int64_t dim);

}  // namespace sparsedit
