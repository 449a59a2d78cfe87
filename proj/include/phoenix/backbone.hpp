#pragma once

#include <span>
#include <string>

#include "phoenix/random.hpp"
#include "phoenix/tape.hpp"

namespace phoenix {

/// Token-wise map u_t = W x_t + b from input features (D) to model width (d).
struct AdapterParams {
    ParamTensor weight;  // d x D
    ParamTensor bias;    // 1 x d

    static AdapterParams init(Eigen::Index input_dim, Eigen::Index width, Rng& rng);
};

/// One diagonal selective state-space layer followed by residual + layer norm.
struct SsmLayerParams {
    ParamTensor a_log;       // 1 x d, decay a = -exp(a_log)
    ParamTensor w_delta;     // d x d
    ParamTensor b_delta;     // 1 x d
    ParamTensor w_b;         // d x d
    ParamTensor w_c;         // d x d
    ParamTensor skip;        // 1 x d
    ParamTensor norm_gain;   // 1 x d
    ParamTensor norm_shift;  // 1 x d

    /// Matrices ~ U(-1/sqrt(d), 1/sqrt(d)); a_log chosen so exp(softplus(0) * a) = 0.9.
    static SsmLayerParams init(Eigen::Index width, Rng& rng, const std::string& prefix);
};

Var adapt(Tape& t, Var features, AdapterParams& p);

/// Single layer: delta = softplus(W_delta u + b_delta), scan, residual, norm.
Var ssm_layer(Tape& t, Var u, SsmLayerParams& p);

/// Causal stack of ssm_layer applications.
Var ssm_forward(Tape& t, Var u, std::span<SsmLayerParams> layers);

}  // namespace phoenix
