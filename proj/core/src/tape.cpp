#include "sparsedit/tape.hpp"

namespace sparsedit {

Tape::NodeId Tape::constant(Tensor v) {
    Node n;
    n.value = std::move(v);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::leaf(Tensor v) {
    Node n;
    n.value = std::move(v);
    n.needs = grad_enabled_;
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

Tape::NodeId Tape::emit(Tensor value, std::vector<NodeId> parents, BackFn back) {
    Node n;
    n.value = std::move(value);
    if (grad_enabled_) {
        for (NodeId p : parents) {
            if (nodes_[static_cast<std::size_t>(p)].needs) {
                n.needs = true;
                break;
            }
        }
        if (n.needs) {
            n.parents = std::move(parents);
            n.back = std::move(back);
        }
    }
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

Tensor Tape::grad(NodeId id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.has_grad) return n.grad;
    return Tensor::zeros(n.value.shape);
}

void Tape::accum_grad(NodeId id, const Tensor& g) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.needs) return;
    if (!n.has_grad) {
        n.grad = g;
        n.has_grad = true;
        return;
    }
    for (std::size_t i = 0; i < n.grad.data.size(); ++i) n.grad.data[i] += g.data[i];
}

void Tape::backward(NodeId root) {
    Node& r = nodes_[static_cast<std::size_t>(root)];
    if (r.value.numel() != 1) {
        throw ShapeError("backward: root must be scalar, got " + r.value.shape_str());
    }
    accum_grad(root, Tensor::full(r.value.shape, 1.0));
    for (NodeId id = root; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.has_grad && n.back) n.back(*this, id);
    }
}

}  // namespace sparsedit
