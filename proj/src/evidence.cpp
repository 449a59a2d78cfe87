#include "phoenix/evidence.hpp"

#include <cmath>

#include "phoenix/ops.hpp"

namespace phoenix {

EvidenceParams EvidenceParams::init(Eigen::Index slots, Eigen::Index width, Rng& rng) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(width));
    return EvidenceParams{ParamTensor("evidence.queries", uniform_matrix(slots, width, scale, rng))};
}

Evidence pool(Tape& t, Var z, EvidenceParams& p) {
    const double width = static_cast<double>(t.value(z).cols());
    Var scores = ops::scale(t, ops::matmul_nt(t, t.parameter(p.queries), z), 1.0 / std::sqrt(width));
    Var weights = ops::row_softmax(t, scores);
    return Evidence{ops::matmul(t, weights, z), weights};
}

}  // namespace phoenix
