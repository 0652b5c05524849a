#pragma once

#include <functional>
#include <vector>

#include "sparsedit/tensor.hpp"

namespace sparsedit {

// Reverse-mode tape. Forward ops append nodes in topological order; backward
// walks the nodes in reverse and pulls gradients into leaves. A tape built
// with grad_enabled=false keeps values only, which is what inference uses.
class Tape {
public:
    using NodeId = int;
    using BackFn = std::function<void(Tape&, NodeId self)>;

    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

    bool grad_enabled() const { return grad_enabled_; }

    // Value that never receives a gradient (inputs, fixed tables).
    NodeId constant(Tensor v);
    // Value whose gradient is wanted (parameters, probed inputs).
    NodeId leaf(Tensor v);

    NodeId emit(Tensor value, std::vector<NodeId> parents, BackFn back);

    const Tensor& val(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    bool needs_grad(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].needs; }

    // Gradient of the backward root w.r.t. node `id`; zeros if it never
    // received a contribution.
    Tensor grad(NodeId id) const;

    void accum_grad(NodeId id, const Tensor& g);

    // Seeds d(root)/d(root) = 1 (root must hold a single element) and
    // propagates. May be called once per tape.
    void backward(NodeId root);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool has_grad = false;
        bool needs = false;
        std::vector<NodeId> parents;
        BackFn back;
    };
    std::vector<Node> nodes_;
    bool grad_enabled_;
};

}  // namespace sparsedit
