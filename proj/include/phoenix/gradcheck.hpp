#pragma once

// Central finite differences against the tape's gradients, over every scalar
// parameter of a small model on a fixed two-utterance batch (one real, one fake).

#include <cstdint>
#include <string>
#include <vector>

#include "phoenix/model.hpp"
#include "phoenix/objective.hpp"

namespace phoenix {

struct GradCheckConfig {
    ModelConfig model{.input_dim = 8, .model_dim = 8, .ball_dim = 4, .evidence = 2, .prototypes = 2};
    LossWeights loss;
    Eigen::Index frames = 6;
    std::uint64_t seed = 7;
    double step = 1e-5;
    double tolerance = 1e-4;
};

struct GroupError {
    std::string name;
    std::size_t count = 0;
    double max_rel = 0.0;
    double mean_rel = 0.0;
};

struct GradCheckReport {
    std::vector<GroupError> groups;  // in parameter order
    double max_rel = 0.0;
    double tolerance = 1e-4;
    bool passed() const noexcept { return max_rel < tolerance; }
};

/// |a - n| / max(|a|, |n|, 1e-6): relative error with a floor so that
/// gradients that are zero up to rounding compare in absolute terms.
double relative_error(double analytic, double numeric) noexcept;

GradCheckReport finite_difference_check(const GradCheckConfig& config);

std::string format_report(const GradCheckReport& report);

}  // namespace phoenix
