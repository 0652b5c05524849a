#pragma once

#include "sparsedit/nn.hpp"
#include "sparsedit/tape.hpp"

namespace sparsedit::ops {

using NodeId = Tape::NodeId;

NodeId matmul(Tape& t, NodeId a, NodeId b);
NodeId add(Tape& t, NodeId a, NodeId b);
NodeId sub(Tape& t, NodeId a, NodeId b);
NodeId mul(Tape& t, NodeId a, NodeId b);
NodeId scale(Tape& t, NodeId a, double s);
NodeId add_scalar(Tape& t, NodeId a, double s);
NodeId add_rows(Tape& t, NodeId x, NodeId r);
NodeId mul_rows(Tape& t, NodeId x, NodeId r);
NodeId mean_rows(Tape& t, NodeId x);
NodeId broadcast_rows(Tape& t, NodeId r, std::int64_t n);
NodeId slice_cols(Tape& t, NodeId x, std::int64_t c0, std::int64_t c1);
NodeId layer_norm(Tape& t, NodeId x);
NodeId gelu_tanh(Tape& t, NodeId x);
NodeId silu(Tape& t, NodeId x);
NodeId linear(Tape& t, NodeId x, NodeId w, NodeId b);
NodeId select_row(Tape& t, NodeId table, std::int64_t row);
NodeId sum_all(Tape& t, NodeId x);
NodeId pool_to_grid(Tape& t, NodeId x, TokenGrid from, TokenGrid to);
NodeId upsample_from_grid(Tape& t, NodeId xs, TokenGrid from, TokenGrid to);
NodeId patchify(Tape& t, NodeId img, std::int64_t patch);
NodeId unpatchify(Tape& t, NodeId tokens, std::int64_t patch, std::int64_t h, std::int64_t w, std::int64_t ch);

struct AttnNodes {
    NodeId wq, bq, wk, bk, wv, bv, wo, bo;
};

NodeId mha(Tape& t, NodeId q_in, NodeId kv_in, const AttnNodes& p, int num_heads,
           const MhaOptions* opt = nullptr);

}  // namespace sparsedit::ops
