#pragma once

#include <span>
#include <string>
#include <vector>

#include "phoenix/label.hpp"

namespace phoenix {

struct ScoreRecord {
    std::string id;
    Label label = Label::kReal;
    double p_fake = 0.5;
    std::string group;
    double negative_logit = 0.0;
    double positive_logit = 0.0;
};

struct Classification {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
};

/// Predict fake iff p_fake >= threshold. Macro-F1 averages the two per-class
/// F1 scores; a class with no true and no predicted members scores 0.
Classification accuracy_f1(std::span<const ScoreRecord> records, double threshold);

/// Equal error rate with fake as the positive class. FPR(t) counts reals with
/// score >= t, FNR(t) counts fakes with score < t. Thresholds sweep the sorted
/// unique scores plus +inf; the first point where FNR >= FPR is the crossing,
/// linearly interpolated against the previous point when not exact.
double eer(std::span<const ScoreRecord> records);

struct ThresholdChoice {
    double threshold = 0.5;
    double macro_f1 = 0.0;
};

/// Macro-F1-maximizing threshold over {0, 1} and midpoints of consecutive
/// unique scores; ties resolve to the smaller threshold.
ThresholdChoice select_threshold(std::span<const ScoreRecord> records);

}  // namespace phoenix
