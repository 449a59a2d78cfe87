#pragma once

#include <span>
#include <string>
#include <vector>

#include "phoenix/data.hpp"
#include "phoenix/model.hpp"

namespace phoenix {

struct PrototypeGeometry {
    Matrix positive_pairwise;  // K x K distances among positive prototypes
    Vector to_negative;        // K distances to the negative prototype
};

/// Distances under the model's own metric (geodesic, or Euclidean for that variant).
PrototypeGeometry prototype_geometry(Model& model);

/// Largest total weight of a one-to-one row/column assignment (rows or
/// columns may be left unmatched). The smaller side must have <= 20 entries.
double max_matching_weight(const Matrix& weights);

struct ModePurity {
    double purity = 0.0;
    std::size_t fakes = 0;
    std::vector<std::string> modes;  // column labels of `counts`
    Matrix counts;                   // K x G: fakes assigned to prototype k with true mode g
};

/// Each fake is assigned to argmax_k of its mean (over evidence) responsibility;
/// purity is the best prototype-to-mode matching agreement over the fake count.
/// Refuses (ConfigError) when a fake utterance carries no group tag.
ModePurity mode_purity(Model& model, std::span<const FeatureSequence> sequences);

std::string format_geometry(const PrototypeGeometry& g);
std::string format_purity(const ModePurity& p);

}  // namespace phoenix
