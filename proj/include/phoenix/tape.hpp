#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "phoenix/linalg.hpp"

namespace phoenix {

/// A named trainable array and its gradient buffer.
struct ParamTensor {
    std::string name;
    Matrix value;
    Matrix grad;
    /// Whether decoupled weight decay applies (prototype tangents opt out).
    bool decay = true;

    ParamTensor() = default;
    ParamTensor(std::string n, Matrix v, bool wd = true)
        : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())), decay(wd) {}

    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
    Eigen::Index size() const noexcept { return value.size(); }
};

/// Handle to a node recorded on a Tape.
struct Var {
    static constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();
    std::size_t index = kInvalid;

    bool valid() const noexcept { return index != kInvalid; }
};

/// Records primitive applications in forward order and replays their local
/// backward rules in exact reverse order. Single-owner; not thread-safe.
class Tape {
public:
    /// Receives dL/d(output) and pushes contributions to inputs via accumulate().
    using Backward = std::function<void(const Matrix& grad_out, Tape& tape)>;

    Var constant(Matrix value);
    Var parameter(ParamTensor& param);

    /// Appends a node. `backward` is dropped when no input requires a gradient.
    Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);

    const Matrix& value(Var v) const;
    double scalar(Var v) const;
    bool requires_grad(Var v) const;

    /// Adds g into the gradient slot of v (no-op for constants).
    void accumulate(Var v, const Matrix& g);

    /// Seeds dL/dL = seed at `loss` (a 1x1 node) and propagates to every
    /// parameter leaf, adding into ParamTensor::grad.
    void backward(Var loss, double seed = 1.0);

    std::size_t size() const noexcept { return nodes_.size(); }
    bool empty() const noexcept { return nodes_.empty(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        Backward backward;
        ParamTensor* param = nullptr;
        bool requires_grad = false;
    };

    const Node& node(Var v) const;

    std::vector<Node> nodes_;
};

}  // namespace phoenix
