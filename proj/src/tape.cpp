#include "phoenix/tape.hpp"

#include <string>

#include "phoenix/error.hpp"

namespace phoenix {

Var Tape::constant(Matrix value) {
    nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
    return Var{nodes_.size() - 1};
}

Var Tape::parameter(ParamTensor& param) {
    // The value stays in the ParamTensor; value() forwards to it.
    nodes_.push_back(Node{Matrix{}, {}, {}, &param, true});
    return Var{nodes_.size() - 1};
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
    bool needs = false;
    for (Var in : inputs) {
        if (!in.valid() || in.index >= nodes_.size()) {
            throw StructuralError("tape input refers to an unrecorded node");
        }
        needs = needs || nodes_[in.index].requires_grad;
    }
    nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, nullptr, needs});
    return Var{nodes_.size() - 1};
}

const Tape::Node& Tape::node(Var v) const {
    if (!v.valid() || v.index >= nodes_.size()) {
        throw StructuralError("variable is not recorded on this tape");
    }
    return nodes_[v.index];
}

const Matrix& Tape::value(Var v) const {
    const Node& n = node(v);
    return n.param != nullptr ? n.param->value : n.value;
}

double Tape::scalar(Var v) const {
    const Matrix& m = value(v);
    if (m.size() != 1) {
        throw StructuralError("expected a 1x1 node, got " + std::to_string(m.rows()) + "x" +
                              std::to_string(m.cols()));
    }
    return m(0, 0);
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

void Tape::accumulate(Var v, const Matrix& g) {
    Node& n = nodes_[v.index];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
        n.grad = g;
    } else {
        n.grad += g;
    }
}

void Tape::backward(Var loss, double seed) {
    if (nodes_.empty() || !loss.valid() || loss.index >= nodes_.size()) {
        throw StructuralError("backward called before a forward pass was recorded");
    }
    (void)scalar(loss);
    accumulate(loss, Matrix::Constant(1, 1, seed));
    for (std::size_t i = loss.index + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (n.grad.size() == 0) continue;
        if (n.param != nullptr) {
            n.param->grad += n.grad;
        } else if (n.backward) {
            n.backward(n.grad, *this);
        }
        n.grad.resize(0, 0);
    }
}

}  // namespace phoenix
