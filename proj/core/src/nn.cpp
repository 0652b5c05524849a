#include "sparsedit/nn.hpp"

#include <cmath>

#include "sparsedit/opcost.hpp"

namespace sparsedit {

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.ndim() != 2 || w.ndim() != 2 || x.shape[1] != w.shape[0]) {
        throw ShapeError("linear: input " + x.shape_str() + " incompatible with weight " + w.shape_str());
    }
    if (b.numel() != w.shape[1]) {
        throw ShapeError("linear: bias " + b.shape_str() + " incompatible with weight " + w.shape_str());
    }
    Tensor y = matmul(x, w);
    const std::int64_t n = y.shape[0], c = y.shape[1];
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < c; ++j) y.at(i, j) += b.data[static_cast<std::size_t>(j)];
    }
    opcost::charge(opcost::kElementwise * n * c);
    return y;
}

Tensor softmax_rows(const Tensor& x) {
    if (x.ndim() != 2) throw ShapeError("softmax_rows: expected 2-D, got " + x.shape_str());
    const std::int64_t n = x.shape[0], k = x.shape[1];
    Tensor y = x;
    for (std::int64_t i = 0; i < n; ++i) {
        double m = y.at(i, 0);
        for (std::int64_t j = 1; j < k; ++j) m = std::max(m, y.at(i, j));
        double s = 0.0;
        for (std::int64_t j = 0; j < k; ++j) {
            const double e = std::exp(y.at(i, j) - m);
            y.at(i, j) = e;
            s += e;
        }
        const double inv = 1.0 / s;
        for (std::int64_t j = 0; j < k; ++j) y.at(i, j) *= inv;
    }
    opcost::charge(opcost::kSoftmax * n * k);
    return y;
}

Tensor layer_norm(const Tensor& x, double eps) {
    if (x.ndim() != 2) throw ShapeError("layer_norm: expected 2-D, got " + x.shape_str());
    const std::int64_t n = x.shape[0], c = x.shape[1];
    Tensor y = x;
    for (std::int64_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (std::int64_t j = 0; j < c; ++j) mean += y.at(i, j);
        mean /= static_cast<double>(c);
        double var = 0.0;
        for (std::int64_t j = 0; j < c; ++j) {
            const double d = y.at(i, j) - mean;
            var += d * d;
        }
        var /= static_cast<double>(c);
        const double inv_std = 1.0 / std::sqrt(var + eps);
        for (std::int64_t j = 0; j < c; ++j) y.at(i, j) = (y.at(i, j) - mean) * inv_std;
    }
    opcost::charge(opcost::kLayerNorm * n * c);
    return y;
}

Tensor gelu_tanh(const Tensor& x) {
    constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
    Tensor y = x;
    for (auto& v : y.data) {
        const double u = k * (v + 0.044715 * v * v * v);
        v = 0.5 * v * (1.0 + std::tanh(u));
    }
    opcost::charge(opcost::kActivation * x.numel());
    return y;
}

Tensor silu(const Tensor& x) {
    Tensor y = x;
    for (auto& v : y.data) v = v / (1.0 + std::exp(-v));
    opcost::charge(opcost::kActivation * x.numel());
    return y;
}

Tensor mha(const Tensor& q_in, const Tensor& kv_in, const AttnParams& p, const MhaOptions* opt) {
    const std::int64_t c = q_in.shape[1];
    if (kv_in.shape[1] != c) {
        throw ShapeError("mha: query width " + q_in.shape_str() + " vs key/value width " + kv_in.shape_str());
    }
    if (p.num_heads < 1 || c % p.num_heads != 0) {
        throw ShapeError("mha: num_heads " + std::to_string(p.num_heads) + " does not divide width " +
                         std::to_string(c));
    }
    const std::int64_t a = q_in.shape[0], b = kv_in.shape[0];
    const std::int64_t hd = c / p.num_heads;
    const double sc = 1.0 / std::sqrt(static_cast<double>(hd));

    const Tensor q = linear(q_in, p.wq, p.bq);
    const Tensor k = linear(kv_in, p.wk, p.bk);
    const Tensor v = linear(kv_in, p.wv, p.bv);

    Tensor o({a, c});
    for (int h = 0; h < p.num_heads; ++h) {
        const std::int64_t c0 = h * hd;
        const Tensor qh = slice_cols(q, c0, c0 + hd);
        const Tensor kh = slice_cols(k, c0, c0 + hd);
        const Tensor vh = slice_cols(v, c0, c0 + hd);
        Tensor probs;
        if (opt != nullptr && opt->force_uniform) {
            probs = Tensor::full({a, b}, 1.0 / static_cast<double>(b));
        } else {
            probs = softmax_rows(scale(matmul_nt(qh, kh), sc));
        }
        if (opt != nullptr && opt->observe) opt->observe(h, probs);
        const Tensor oh = matmul(probs, vh);
        for (std::int64_t i = 0; i < a; ++i) {
            for (std::int64_t j = 0; j < hd; ++j) o.at(i, c0 + j) = oh.at(i, j);
        }
    }
    return linear(o, p.wo, p.bo);
}

Modulated adaln_modulate(const Tensor& x, const Tensor& c, const AdaLnParams& p, AdaLnBranch branch) {
    const Tensor u = linear(silu(c), p.w, p.b);  // (1, 6C)
    const std::int64_t cw = x.shape[1];
    if (u.shape[1] != 6 * cw) {
        throw ShapeError("adaln_modulate: projection " + u.shape_str() + " must be [1x" +
                         std::to_string(6 * cw) + "]");
    }
    const std::int64_t base = branch == AdaLnBranch::attention ? 0 : 3 * cw;
    const Tensor shift = slice_cols(u, base, base + cw);
    const Tensor sc = slice_cols(u, base + cw, base + 2 * cw);
    Modulated m;
    m.gate = slice_cols(u, base + 2 * cw, base + 3 * cw);
    m.x = add_rows(mul_rows(layer_norm(x), add_scalar(sc, 1.0)), shift);
    return m;
}

Tensor sincos_posembed_2d(TokenGrid grid, std::int64_t c) {
    if (c % 4 != 0) {
        throw ShapeError("sincos_posembed_2d: width " + std::to_string(c) + " must be divisible by 4");
    }
    const std::int64_t quarter = c / 4;
    std::vector<double> omega(static_cast<std::size_t>(quarter));
    for (std::int64_t k = 0; k < quarter; ++k) {
        omega[static_cast<std::size_t>(k)] =
            std::pow(10000.0, -static_cast<double>(k) / static_cast<double>(quarter));
    }
    Tensor out({grid.count(), c});
    for (std::int64_t r = 0; r < grid.h; ++r) {
        for (std::int64_t col = 0; col < grid.w; ++col) {
            const std::int64_t row = r * grid.w + col;
            for (std::int64_t k = 0; k < quarter; ++k) {
                const double ah = static_cast<double>(r) * omega[static_cast<std::size_t>(k)];
                const double aw = static_cast<double>(col) * omega[static_cast<std::size_t>(k)];
                out.at(row, k) = std::sin(ah);
                out.at(row, quarter + k) = std::cos(ah);
                out.at(row, 2 * quarter + k) = std::sin(aw);
                out.at(row, 3 * quarter + k) = std::cos(aw);
            }
        }
    }
    return out;
}

Tensor patchify(const Tensor& img, std::int64_t patch) {
    if (img.ndim() != 3) throw ShapeError("patchify: expected (H,W,ch), got " + img.shape_str());
    const std::int64_t h = img.shape[0], w = img.shape[1], ch = img.shape[2];
    if (h % patch != 0 || w % patch != 0) {
        throw ShapeError("patchify: image " + img.shape_str() + " not divisible by patch " +
                         std::to_string(patch));
    }
    const std::int64_t gh = h / patch, gw = w / patch;
    Tensor out({gh * gw, patch * patch * ch});
    for (std::int64_t pi = 0; pi < gh; ++pi) {
        for (std::int64_t pj = 0; pj < gw; ++pj) {
            const std::int64_t row = pi * gw + pj;
            std::int64_t col = 0;
            for (std::int64_t di = 0; di < patch; ++di) {
                for (std::int64_t dj = 0; dj < patch; ++dj) {
                    for (std::int64_t k = 0; k < ch; ++k) {
                        out.at(row, col++) = img.at(pi * patch + di, pj * patch + dj, k);
                    }
                }
            }
        }
    }
    return out;
}

Tensor unpatchify(const Tensor& tokens, std::int64_t patch, std::int64_t h, std::int64_t w, std::int64_t ch) {
    const std::int64_t gh = h / patch, gw = w / patch;
    if (tokens.ndim() != 2 || tokens.shape[0] != gh * gw || tokens.shape[1] != patch * patch * ch) {
        throw ShapeError("unpatchify: tokens " + tokens.shape_str() + " do not match image " +
                         std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(ch) +
                         " with patch " + std::to_string(patch));
    }
    Tensor img({h, w, ch});
    for (std::int64_t pi = 0; pi < gh; ++pi) {
        for (std::int64_t pj = 0; pj < gw; ++pj) {
            const std::int64_t row = pi * gw + pj;
            std::int64_t col = 0;
            for (std::int64_t di = 0; di < patch; ++di) {
                for (std::int64_t dj = 0; dj < patch; ++dj) {
                    for (std::int64_t k = 0; k < ch; ++k) {
                        img.at(pi * patch + di, pj * patch + dj, k) = tokens.at(row, col++);
                    }
                }
            }
        }
    }
    return img;
}

Tensor timestep_embedding(double t, std::int64_t dim) {
    const std::int64_t half = dim / 2;
    Tensor out({1, dim});
    for (std::int64_t k = 0; k < half; ++k) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(k) / static_cast<double>(half));
        const double arg = t * freq;
        out.at(0, k) = std::cos(arg);
        out.at(0, half + k) = std::sin(arg);
    }
    opcost::charge(half * opcost::kElementwise + 2 * half * opcost::kActivation);
    return out;
}

}  // namespace sparsedit
