#include "phoenix/metrics.hpp"

#include <algorithm>
#include <limits>
#include <optional>

#include "phoenix/error.hpp"

namespace phoenix {

namespace {

struct Counts {
    std::size_t tp = 0;  // fake predicted fake
    std::size_t fp = 0;  // real predicted fake
    std::size_t tn = 0;
    std::size_t fn = 0;
};

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
    const std::size_t denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

Classification from_counts(const Counts& c) {
    const double n = static_cast<double>(c.tp + c.fp + c.tn + c.fn);
    const double f1_fake = f1(c.tp, c.fp, c.fn);
    const double f1_real = f1(c.tn, c.fn, c.fp);
    return Classification{static_cast<double>(c.tp + c.tn) / n, 0.5 * (f1_fake + f1_real)};
}

void require_both_classes(std::span<const ScoreRecord> records, const char* what) {
    bool real = false;
    bool fake = false;
    for (const ScoreRecord& r : records) (r.label == Label::kFake ? fake : real) = true;
    if (!real || !fake) throw StructuralError(std::string(what) + " requires both real and fake records");
}

}  // namespace

Classification accuracy_f1(std::span<const ScoreRecord> records, double threshold) {
    if (records.empty()) throw StructuralError("accuracy_f1 on an empty record set");
    Counts c;
    for (const ScoreRecord& r : records) {
        const bool predicted_fake = r.p_fake >= threshold;
        if (r.label == Label::kFake) {
            (predicted_fake ? c.tp : c.fn)++;
        } else {
            (predicted_fake ? c.fp : c.tn)++;
        }
    }
    return from_counts(c);
}

double eer(std::span<const ScoreRecord> records) {
    require_both_classes(records, "eer");
    std::vector<std::pair<double, Label>> sorted;
    sorted.reserve(records.size());
    for (const ScoreRecord& r : records) sorted.emplace_back(r.p_fake, r.label);
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    double reals = 0.0;
    double fakes = 0.0;
    for (const auto& [s, l] : sorted) (l == Label::kFake ? fakes : reals) += 1.0;

    // At threshold sorted[i].first everything before i scores below it.
    double reals_below = 0.0;
    double fakes_below = 0.0;
    double prev_fpr = 1.0;
    double prev_fnr = 0.0;
    bool have_prev = false;
    std::size_t i = 0;
    auto crossing = [&](double fpr, double fnr) -> std::optional<double> {
        if (fnr < fpr) return std::nullopt;
        if (fnr == fpr || !have_prev) return fpr;
        const double before = prev_fnr - prev_fpr;  // < 0
        const double after = fnr - fpr;              // > 0
        const double lambda = -before / (after - before);
        return prev_fpr + lambda * (fpr - prev_fpr);
    };
    while (i <= sorted.size()) {
        const double fpr = (reals - reals_below) / reals;
        const double fnr = fakes_below / fakes;
        if (auto e = crossing(fpr, fnr)) return *e;
        if (i == sorted.size()) break;
        prev_fpr = fpr;
        prev_fnr = fnr;
        have_prev = true;
        const double s = sorted[i].first;
        while (i < sorted.size() && sorted[i].first == s) {
            (sorted[i].second == Label::kFake ? fakes_below : reals_below) += 1.0;
            ++i;
        }
    }
    // Unreachable: at +inf FNR = 1 >= FPR = 0.
    return 1.0;
}

ThresholdChoice select_threshold(std::span<const ScoreRecord> records) {
    require_both_classes(records, "select_threshold");
    std::vector<std::pair<double, Label>> sorted;
    for (const ScoreRecord& r : records) sorted.emplace_back(r.p_fake, r.label);
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<double> unique;
    for (const auto& [s, l] : sorted) {
        if (unique.empty() || unique.back() != s) unique.push_back(s);
    }
    std::vector<double> candidates{0.0};
    for (std::size_t k = 0; k + 1 < unique.size(); ++k) candidates.push_back(0.5 * (unique[k] + unique[k + 1]));
    candidates.push_back(1.0);
    std::sort(candidates.begin(), candidates.end());

    Counts c;
    for (const auto& [s, l] : sorted) (l == Label::kFake ? c.tp : c.fp)++;
    std::size_t below = 0;  // records with score < current threshold

    ThresholdChoice best{0.0, -1.0};
    for (double t : candidates) {
        while (below < sorted.size() && sorted[below].first < t) {
            if (sorted[below].second == Label::kFake) {
                --c.tp;
                ++c.fn;
            } else {
                --c.fp;
                ++c.tn;
            }
            ++below;
        }
        const double f = from_counts(c).macro_f1;
        if (f > best.macro_f1) best = ThresholdChoice{t, f};
    }
    return best;
}

}  // namespace phoenix
