#include "sparsedit/tape_ops.hpp"

#include <cmath>

namespace sparsedit::ops {

namespace sd = ::sparsedit;

NodeId matmul(Tape& t, NodeId a, NodeId b) {
    Tensor y = sd::matmul(t.val(a), t.val(b));
    return t.emit(std::move(y), {a, b}, [a, b](Tape& tp, NodeId self) {
        const Tensor g = tp.grad(self);
        if (tp.needs_grad(a)) tp.accum_grad(a, sd::matmul_nt(g, tp.val(b)));
        if (tp.needs_grad(b)) tp.accum_grad(b, sd::matmul_tn(tp.val(a), g));
    });
}

NodeId add(Tape& t, NodeId a, NodeId b) {
    return t.emit(sd::add(t.val(a), t.val(b)), {a, b}, [a, b](Tape& tp, NodeId self) {
        const Tensor g = tp.grad(self);
        tp.accum_grad(a, g);
        tp.accum_grad(b, g);
    });
}

NodeId sub(Tape& t, NodeId a, NodeId b) {
    return t.emit(sd::sub(t.val(a), t.val(b)), {a, b}, [a, b](Tape& tp, NodeId self) {
        const Tensor g = tp.grad(self);
        tp.accum_grad(a, g);
        if (tp.needs_grad(b)) tp.accum_grad(b, sd::scale(g, -1.0));
    });
}

NodeId mul(Tape& t, NodeId a, NodeId b) {
    return t.emit(sd::mul(t.val(a), t.val(b)), {a, b}, [a, b](Tape& tp, NodeId self) {
        const Tensor g = tp.grad(self);
        if (tp.needs_grad(a)) tp.accum_grad(a, sd::mul(g, tp.val(b)));
        if (tp.needs_grad(b)) tp.accum_grad(b, sd::mul(g, tp.val(a)));
    });
}

NodeId scale(Tape& t, NodeId a, double s) {
    return t.emit(sd::scale(t.val(a), s), {a}, [a, s](Tape& tp, NodeId self) {
        tp.accum_grad(a, sd::scale(tp.grad(self), s));
    });
}

NodeId add_scalar(Tape& t, NodeId a, double s) {
    return t.emit(sd::add_scalar(t.val(a), s), {a}, [a](Tape& tp, NodeId self) {
        tp.accum_grad(a, tp.grad(self));
    });
}

NodeId add_rows(Tape& t, NodeId x, NodeId r) {
    return t.emit(sd::add_rows(t.val(x), t.val(r)), {x, r}, [x, r](Tape& tp, NodeId self) {
        const Tensor g = tp.grad(self);
        tp.accum_grad(x, g);
        if (tp.needs_grad(r)) tp.accum_grad(r, sd::colsum(g));
    });
}

NodeId mul_rows(Tape& t, NodeId x, NodeId r) {
    return t.emit(sd::mul_rows(t.val(x), t.val(r)), {x, r}, [x, r](Tape& tp, NodeId self) {
        const Tensor g = tp.grad(self);
        if (tp.needs_grad(x)) tp.accum_grad(x, sd::mul(g, sd::broadcast_rows(tp.val(r), g.shape[0])));
        if (tp.needs_grad(r)) tp.accum_grad(r, sd::colsum(sd::mul(g, tp.val(x))));
    });
}

NodeId mean_rows(Tape& t, NodeId x) {
    return t.emit(sd::mean_rows(t.val(x)), {x}, [x](Tape& tp, NodeId self) {
        const Tensor g = tp.grad(self);
        const std::int64_t n = tp.val(x).shape[0];
        tp.accum_grad(x, sd::broadcast_rows(sd::scale(g, 1.0 / static_cast<double>(n)), n));
    });
}

NodeId broadcast_rows(Tape& t, NodeId r, std::int64_t n) {
    return t.emit(sd::broadcast_rows(t.val(r), n), {r}, [r](Tape& tp, NodeId self) {
        tp.accum_grad(r, sd::colsum(tp.grad(self)));
    });
}

NodeId slice_cols(Tape& t, NodeId x, std::int64_t c0, std::int64_t c1) {
    return t.emit(sd::slice_cols(t.val(x), c0, c1), {x}, [x, c0, c1](Tape& tp, NodeId self) {
        const Tensor g = tp.grad(self);
        Tensor gx = Tensor::zeros(tp.val(x).shape);
        for (std::int64_t i = 0; i < g.shape[0]; ++i) {
            for (std::int64_t j = 0; j < c1 - c0; ++j) gx.at(i, c0 + j) = g.at(i, j);
        }
        tp.accum_grad(x, gx);
    });
}

NodeId layer_norm(Tape& t, NodeId x) {
    Tensor y = sd::layer_norm(t.val(x));
    return t.emit(std::move(y), {x}, [x](Tape& tp, NodeId self) {
        // dx = inv_std * (g - mean(g) - y * mean(g*y)), means taken per row.
        const Tensor& g = tp.grad(self);
        const Tensor& y = tp.val(self);
        const Tensor& xv = tp.val(x);
        const std::int64_t n = xv.shape[0], c = xv.shape[1];
        Tensor gx({n, c});
        for (std::int64_t i = 0; i < n; ++i) {
            double mean = 0.0, var = 0.0;
            for (std::int64_t j = 0; j < c; ++j) mean += xv.at(i, j);
            mean /= static_cast<double>(c);
            for (std::int64_t j = 0; j < c; ++j) {
                const double d = xv.at(i, j) - mean;
                var += d * d;
            }
            var /= static_cast<double>(c);
            const double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
            double gm = 0.0, gym = 0.0;
            for (std::int64_t j = 0; j < c; ++j) {
                gm += g.at(i, j);
                gym += g.at(i, j) * y.at(i, j);
            }
            gm /= static_cast<double>(c);
            gym /= static_cast<double>(c);
            for (std::int64_t j = 0; j < c; ++j) {
                gx.at(i, j) = inv_std * (g.at(i, j) - gm - y.at(i, j) * gym);
            }
        }
        tp.accum_grad(x, gx);
    });
}

NodeId gelu_tanh(Tape& t, NodeId x) {
    return t.emit(sd::gelu_tanh(t.val(x)), {x}, [x](Tape& tp, NodeId self) {
        constexpr double k = 0.7978845608028654;
        constexpr double a = 0.044715;
        const Tensor& g = tp.grad(self);
        const Tensor& xv = tp.val(x);
        Tensor gx = g;
        for (std::size_t i = 0; i < gx.data.size(); ++i) {
            const double v = xv.data[i];
            const double u = k * (v + a * v * v * v);
            const double th = std::tanh(u);
            const double d = 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * k * (1.0 + 3.0 * a * v * v);
            gx.data[i] *= d;
        }
        tp.accum_grad(x, gx);
    });
}

NodeId silu(Tape& t, NodeId x) {
    return t.emit(sd::silu(t.val(x)), {x}, [x](Tape& tp, NodeId self) {
        const Tensor& g = tp.grad(self);
        const Tensor& xv = tp.val(x);
        Tensor gx = g;
        for (std::size_t i = 0; i < gx.data.size(); ++i) {
            const double v = xv.data[i];
            const double s = 1.0 / (1.0 + std::exp(-v));
            gx.data[i] *= s * (1.0 + v * (1.0 - s));
        }
        tp.accum_grad(x, gx);
    });
}

NodeId linear(Tape& t, NodeId x, NodeId w, NodeId b) {
    Tensor y = sd::linear(t.val(x), t.val(w), t.val(b));
    return t.emit(std::move(y), {x, w, b}, [x, w, b](Tape& tp, NodeId self) {
        const Tensor g = tp.grad(self);
        if (tp.needs_grad(x)) tp.accum_grad(x, sd::matmul_nt(g, tp.val(w)));
        if (tp.needs_grad(w)) tp.accum_grad(w, sd::matmul_tn(tp.val(x), g));
        if (tp.needs_grad(b)) tp.accum_grad(b, sd::colsum(g));
    });
}

NodeId select_row(Tape& t, NodeId table, std::int64_t row) {
    const Tensor& tab = t.val(table);
    Tensor y({1, tab.shape[1]});
    for (std::int64_t j = 0; j < tab.shape[1]; ++j) y.at(0, j) = tab.at(row, j);
    return t.emit(std::move(y), {table}, [table, row](Tape& tp, NodeId self) {
        const Tensor g = tp.grad(self);
        Tensor gt = Tensor::zeros(tp.val(table).shape);
        for (std::int64_t j = 0; j < g.shape[1]; ++j) gt.at(row, j) = g.at(0, j);
        tp.accum_grad(table, gt);
    });
}

NodeId sum_all(Tape& t, NodeId x) {
    Tensor y({1, 1});
    y.at(0, 0) = sd::sum(t.val(x));
    return t.emit(std::move(y), {x}, [x](Tape& tp, NodeId self) {
        const double g = tp.grad(self).at(0, 0);
        tp.accum_grad(x, Tensor::full(tp.val(x).shape, g));
    });
}

NodeId pool_to_grid(Tape& t, NodeId x, TokenGrid from, TokenGrid to) {
    Tensor y = sd::pool_to_grid(t.val(x), from, to);
    return t.emit(std::move(y), {x}, [x, from, to](Tape& tp, NodeId self) {
        const Tensor& g = tp.grad(self);
        const std::int64_t c = g.shape[1];
        Tensor gx = Tensor::zeros(tp.val(x).shape);
        const auto hbins = pool_bins(from.h, to.h);
        const auto wbins = pool_bins(from.w, to.w);
        for (std::int64_t bi = 0; bi < to.h; ++bi) {
            for (std::int64_t bj = 0; bj < to.w; ++bj) {
                const auto [r0, r1] = hbins[static_cast<std::size_t>(bi)];
                const auto [c0, c1] = wbins[static_cast<std::size_t>(bj)];
                const std::int64_t m = bi * to.w + bj;
                const double inv = 1.0 / static_cast<double>((r1 - r0) * (c1 - c0));
                for (std::int64_t r = r0; r < r1; ++r) {
                    for (std::int64_t cc = c0; cc < c1; ++cc) {
                        const std::int64_t src = r * from.w + cc;
                        for (std::int64_t k = 0; k < c; ++k) gx.at(src, k) += g.at(m, k) * inv;
                    }
                }
            }
        }
        tp.accum_grad(x, gx);
    });
}

NodeId upsample_from_grid(Tape& t, NodeId xs, TokenGrid from, TokenGrid to) {
    Tensor y = sd::upsample_from_grid(t.val(xs), from, to);
    return t.emit(std::move(y), {xs}, [xs, from, to](Tape& tp, NodeId self) {
        const Tensor& g = tp.grad(self);
        const std::int64_t c = g.shape[1];
        Tensor gx = Tensor::zeros(tp.val(xs).shape);
        for (std::int64_t i = 0; i < to.h; ++i) {
            const std::int64_t si = (i * from.h) / to.h;
            for (std::int64_t j = 0; j < to.w; ++j) {
                const std::int64_t sj = (j * from.w) / to.w;
                const std::int64_t src = si * from.w + sj;
                const std::int64_t dst = i * to.w + j;
                for (std::int64_t k = 0; k < c; ++k) gx.at(src, k) += g.at(dst, k);
            }
        }
        tp.accum_grad(xs, gx);
    });
}

NodeId patchify(Tape& t, NodeId img, std::int64_t patch) {
    Tensor y = sd::patchify(t.val(img), patch);
    return t.emit(std::move(y), {img}, [img, patch](Tape& tp, NodeId self) {
        const Tensor& shape_src = tp.val(img);
        const Tensor g = tp.grad(self);
        tp.accum_grad(img, sd::unpatchify(g, patch, shape_src.shape[0], shape_src.shape[1], shape_src.shape[2]));
    });
}

NodeId unpatchify(Tape& t, NodeId tokens, std::int64_t patch, std::int64_t h, std::int64_t w, std::int64_t ch) {
    Tensor y = sd::unpatchify(t.val(tokens), patch, h, w, ch);
    return t.emit(std::move(y), {tokens}, [tokens, patch](Tape& tp, NodeId self) {
        const Tensor g = tp.grad(self);
        tp.accum_grad(tokens, sd::patchify(g, patch));
    });
}

namespace {

// Saved activations for the fused attention backward pass.
struct MhaSaved {
    Tensor q, k, v, o;
    std::vector<Tensor> probs;
    int heads = 1;
    bool uniform = false;
};

}  // namespace

NodeId mha(Tape& t, NodeId q_in, NodeId kv_in, const AttnNodes& p, int num_heads, const MhaOptions* opt) {
    const Tensor& qin = t.val(q_in);
    const Tensor& kvin = t.val(kv_in);
    const std::int64_t c = qin.shape[1];
    if (kvin.shape[1] != c) {
        throw ShapeError("mha: query width " + qin.shape_str() + " vs key/value width " + kvin.shape_str());
    }
    if (num_heads < 1 || c % num_heads != 0) {
        throw ShapeError("mha: num_heads " + std::to_string(num_heads) + " does not divide width " +
                         std::to_string(c));
    }
    const std::int64_t a = qin.shape[0], b = kvin.shape[0];
    const std::int64_t hd = c / num_heads;
    const double sc = 1.0 / std::sqrt(static_cast<double>(hd));

    auto saved = std::make_shared<MhaSaved>();
    saved->heads = num_heads;
    saved->uniform = opt != nullptr && opt->force_uniform;
    saved->q = sd::linear(qin, t.val(p.wq), t.val(p.bq));
    saved->k = sd::linear(kvin, t.val(p.wk), t.val(p.bk));
    saved->v = sd::linear(kvin, t.val(p.wv), t.val(p.bv));

    saved->o = Tensor({a, c});
    for (int h = 0; h < num_heads; ++h) {
        const std::int64_t c0 = h * hd;
        const Tensor qh = sd::slice_cols(saved->q, c0, c0 + hd);
        const Tensor kh = sd::slice_cols(saved->k, c0, c0 + hd);
        const Tensor vh = sd::slice_cols(saved->v, c0, c0 + hd);
        Tensor probs;
        if (saved->uniform) {
            probs = Tensor::full({a, b}, 1.0 / static_cast<double>(b));
        } else {
            probs = sd::softmax_rows(sd::scale(sd::matmul_nt(qh, kh), sc));
        }
        if (opt != nullptr && opt->observe) opt->observe(h, probs);
        const Tensor oh = sd::matmul(probs, vh);
        for (std::int64_t i = 0; i < a; ++i) {
            for (std::int64_t j = 0; j < hd; ++j) saved->o.at(i, c0 + j) = oh.at(i, j);
        }
        saved->probs.push_back(std::move(probs));
    }
    Tensor out = sd::linear(saved->o, t.val(p.wo), t.val(p.bo));

    std::vector<NodeId> parents = {q_in, kv_in, p.wq, p.bq, p.wk, p.bk, p.wv, p.bv, p.wo, p.bo};
    return t.emit(std::move(out), std::move(parents),
                  [q_in, kv_in, p, saved, a, b, hd, sc](Tape& tp, NodeId self) {
        const int heads = saved->heads;
        const std::int64_t c = hd * heads;
        const Tensor g = tp.grad(self);

        // Output projection.
        const Tensor d_o = sd::matmul_nt(g, tp.val(p.wo));
        if (tp.needs_grad(p.wo)) tp.accum_grad(p.wo, sd::matmul_tn(saved->o, g));
        if (tp.needs_grad(p.bo)) tp.accum_grad(p.bo, sd::colsum(g));

        Tensor dq({a, c}), dk({b, c}), dv({b, c});
        for (int h = 0; h < heads; ++h) {
            const std::int64_t c0 = h * hd;
            const Tensor& probs = saved->probs[static_cast<std::size_t>(h)];
            const Tensor d_oh = sd::slice_cols(d_o, c0, c0 + hd);
            const Tensor vh = sd::slice_cols(saved->v, c0, c0 + hd);
            const Tensor dvh = sd::matmul_tn(probs, d_oh);
            for (std::int64_t i = 0; i < b; ++i) {
                for (std::int64_t j = 0; j < hd; ++j) dv.at(i, c0 + j) = dvh.at(i, j);
            }
            if (saved->uniform) continue;  // constant map: no gradient into q/k
            const Tensor dp = sd::matmul_nt(d_oh, vh);
            // softmax backward: dL = P*(dP - rowsum(dP*P)), then scale.
            Tensor dl = probs;
            for (std::int64_t i = 0; i < a; ++i) {
                double rs = 0.0;
                for (std::int64_t j = 0; j < b; ++j) rs += dp.at(i, j) * probs.at(i, j);
                for (std::int64_t j = 0; j < b; ++j) dl.at(i, j) = probs.at(i, j) * (dp.at(i, j) - rs) * sc;
            }
            const Tensor qh = sd::slice_cols(saved->q, c0, c0 + hd);
            const Tensor kh = sd::slice_cols(saved->k, c0, c0 + hd);
            const Tensor dqh = sd::matmul(dl, kh);
            const Tensor dkh = sd::matmul_tn(dl, qh);
            for (std::int64_t i = 0; i < a; ++i) {
                for (std::int64_t j = 0; j < hd; ++j) dq.at(i, c0 + j) = dqh.at(i, j);
            }
            for (std::int64_t i = 0; i < b; ++i) {
                for (std::int64_t j = 0; j < hd; ++j) dk.at(i, c0 + j) = dkh.at(i, j);
            }
        }

        const Tensor& qin = tp.val(q_in);
        const Tensor& kvin = tp.val(kv_in);
        if (!saved->uniform) {
            if (tp.needs_grad(q_in)) tp.accum_grad(q_in, sd::matmul_nt(dq, tp.val(p.wq)));
            if (tp.needs_grad(p.wq)) tp.accum_grad(p.wq, sd::matmul_tn(qin, dq));
            if (tp.needs_grad(p.bq)) tp.accum_grad(p.bq, sd::colsum(dq));
            if (tp.needs_grad(kv_in)) tp.accum_grad(kv_in, sd::matmul_nt(dk, tp.val(p.wk)));
            if (tp.needs_grad(p.wk)) tp.accum_grad(p.wk, sd::matmul_tn(kvin, dk));
            if (tp.needs_grad(p.bk)) tp.accum_grad(p.bk, sd::colsum(dk));
        }
        if (tp.needs_grad(kv_in)) tp.accum_grad(kv_in, sd::matmul_nt(dv, tp.val(p.wv)));
        if (tp.needs_grad(p.wv)) tp.accum_grad(p.wv, sd::matmul_tn(kvin, dv));
        if (tp.needs_grad(p.bv)) tp.accum_grad(p.bv, sd::colsum(dv));
    });
}

}  // namespace sparsedit::ops
