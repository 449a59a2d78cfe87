#pragma once

#include "phoenix/random.hpp"
#include "phoenix/tape.hpp"

namespace phoenix {

struct EvidenceParams {
    ParamTensor queries;  // M x d

    static EvidenceParams init(Eigen::Index slots, Eigen::Index width, Rng& rng);
};

struct Evidence {
    Var vectors;  // M x d, e_m = sum_t a_{m,t} z_t
    Var weights;  // M x T, rows are softmax over time of q_m . z_t / sqrt(d)
};

Evidence pool(Tape& t, Var z, EvidenceParams& p);

}  // namespace phoenix
