#include "phoenix/backbone.hpp"

#include <cmath>

#include "phoenix/ops.hpp"

namespace phoenix {

AdapterParams AdapterParams::init(Eigen::Index input_dim, Eigen::Index width, Rng& rng) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
    return AdapterParams{
        ParamTensor("adapter.weight", uniform_matrix(width, input_dim, scale, rng)),
        ParamTensor("adapter.bias", uniform_matrix(1, width, scale, rng)),
    };
}

SsmLayerParams SsmLayerParams::init(Eigen::Index width, Rng& rng, const std::string& prefix) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(width));
    // exp(softplus(0) * a) = 0.9  =>  a = ln(0.9) / ln(2).
    const double decay = std::log(0.9) / std::log(2.0);
    SsmLayerParams p;
    p.a_log = ParamTensor(prefix + ".a_log", Matrix::Constant(1, width, std::log(-decay)));
    p.w_delta = ParamTensor(prefix + ".w_delta", uniform_matrix(width, width, scale, rng));
    p.b_delta = ParamTensor(prefix + ".b_delta", Matrix::Zero(1, width));
    p.w_b = ParamTensor(prefix + ".w_b", uniform_matrix(width, width, scale, rng));
    p.w_c = ParamTensor(prefix + ".w_c", uniform_matrix(width, width, scale, rng));
    p.skip = ParamTensor(prefix + ".skip", Matrix::Ones(1, width));
    p.norm_gain = ParamTensor(prefix + ".norm_gain", Matrix::Ones(1, width));
    p.norm_shift = ParamTensor(prefix + ".norm_shift", Matrix::Zero(1, width));
    return p;
}

Var adapt(Tape& t, Var features, AdapterParams& p) {
    return ops::affine(t, features, t.parameter(p.weight), t.parameter(p.bias));
}

Var ssm_layer(Tape& t, Var u, SsmLayerParams& p) {
    Var delta = ops::softplus(t, ops::affine(t, u, t.parameter(p.w_delta), t.parameter(p.b_delta)));
    Var b = ops::matmul_nt(t, u, t.parameter(p.w_b));
    Var c = ops::matmul_nt(t, u, t.parameter(p.w_c));
    Var y = ops::selective_scan(t, delta, b, c, u, t.parameter(p.a_log), t.parameter(p.skip));
    return ops::layer_norm(t, ops::add(t, u, y), t.parameter(p.norm_gain), t.parameter(p.norm_shift));
}

Var ssm_forward(Tape& t, Var u, std::span<SsmLayerParams> layers) {
    for (SsmLayerParams& layer : layers) u = ssm_layer(t, u, layer);
    return u;
}

}  // namespace phoenix
