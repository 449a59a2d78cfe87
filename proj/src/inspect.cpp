#include "phoenix/inspect.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

#include "phoenix/error.hpp"

namespace phoenix {

PrototypeGeometry prototype_geometry(Model& model) {
    if (!model.config().has_prototypes()) throw ConfigError("the meanpool variant has no prototypes to inspect");
    Tape t;
    const Prototypes protos = model.realize_prototypes(t);
    const HeadConfig cfg = model.config().head();
    PrototypeGeometry g;
    g.positive_pairwise = t.value(distances(t, protos.positive, protos.positive, cfg));
    g.to_negative = t.value(distances(t, protos.positive, protos.negative, cfg)).col(0);
    return g;
}

double max_matching_weight(const Matrix& weights) {
    const bool transpose = weights.cols() > weights.rows();
    const Matrix w = transpose ? Matrix(weights.transpose()) : weights;
    const Eigen::Index cols = w.cols();
    if (cols > 20) throw ConfigError("matching supports at most 20 entries on the smaller side");
    const std::size_t states = std::size_t{1} << cols;
    std::vector<double> best(states, -std::numeric_limits<double>::infinity());
    best[0] = 0.0;
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
        std::vector<double> next = best;  // row r left unmatched
        for (std::size_t mask = 0; mask < states; ++mask) {
            if (best[mask] == -std::numeric_limits<double>::infinity()) continue;
            for (Eigen::Index c = 0; c < cols; ++c) {
                const std::size_t bit = std::size_t{1} << c;
                if (mask & bit) continue;
                next[mask | bit] = std::max(next[mask | bit], best[mask] + w(r, c));
            }
        }
        best.swap(next);
    }
    return *std::max_element(best.begin(), best.end());
}

ModePurity mode_purity(Model& model, std::span<const FeatureSequence> sequences) {
    if (!model.config().has_prototypes()) throw ConfigError("the meanpool variant has no prototypes; purity is undefined");
    ModePurity out;
    std::vector<std::pair<Eigen::Index, std::size_t>> assigned;
    for (const FeatureSequence& s : sequences) {
        if (s.label != Label::kFake) continue;
        if (s.group.empty()) {
            throw ConfigError("mode purity needs a generator-mode group tag on every fake utterance, and '" + s.id +
                              "' has none");
        }
        auto it = std::find(out.modes.begin(), out.modes.end(), s.group);
        const std::size_t g = static_cast<std::size_t>(it - out.modes.begin());
        if (it == out.modes.end()) out.modes.push_back(s.group);
        const Inference inf = model.infer(s.features);
        Eigen::Index k = 0;
        inf.head->responsibilities.colwise().mean().maxCoeff(&k);
        assigned.emplace_back(k, g);
    }
    if (assigned.empty()) throw ConfigError("mode purity needs at least one fake utterance");
    out.fakes = assigned.size();
    out.counts = Matrix::Zero(model.config().prototypes, static_cast<Eigen::Index>(out.modes.size()));
    for (const auto& [k, g] : assigned) out.counts(k, static_cast<Eigen::Index>(g)) += 1.0;
    out.purity = max_matching_weight(out.counts) / static_cast<double>(out.fakes);
    return out;
}

std::string format_geometry(const PrototypeGeometry& g) {
    const Eigen::Index k = g.positive_pairwise.rows();
    std::string out = "K " + std::to_string(k) + "\n";
    char cell[64];
    out += "distance";
    for (Eigen::Index j = 0; j < k; ++j) out += "\tp+" + std::to_string(j);
    out += "\tp-\n";
    for (Eigen::Index i = 0; i < k; ++i) {
        out += "p+" + std::to_string(i);
        for (Eigen::Index j = 0; j < k; ++j) {
            std::snprintf(cell, sizeof cell, "\t%.6f", g.positive_pairwise(i, j));
            out += cell;
        }
        std::snprintf(cell, sizeof cell, "\t%.6f\n", g.to_negative(i));
        out += cell;
    }
    return out;
}

std::string format_purity(const ModePurity& p) {
    std::string out = "assignment";
    for (const std::string& m : p.modes) out += "\t" + m;
    out += "\n";
    char cell[64];
    for (Eigen::Index k = 0; k < p.counts.rows(); ++k) {
        out += "p+" + std::to_string(k);
        for (Eigen::Index g = 0; g < p.counts.cols(); ++g) {
            std::snprintf(cell, sizeof cell, "\t%.0f", p.counts(k, g));
            out += cell;
        }
        out += "\n";
    }
    std::snprintf(cell, sizeof cell, "mode purity %.4f over %zu fake utterances\n", p.purity, p.fakes);
    out += cell;
    return out;
}

}  // namespace phoenix
