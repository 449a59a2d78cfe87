#include "phoenix/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "phoenix/error.hpp"
#include "phoenix/random.hpp"

namespace phoenix {

double relative_error(double analytic, double numeric) noexcept {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / denom;
}

GradCheckReport finite_difference_check(const GradCheckConfig& config) {
    if (!(config.step > 0.0)) throw ConfigError("finite-difference step must be positive");
    if (config.frames < 1) throw ConfigError("grad-check needs at least one frame");
    config.loss.validate();

    Model model(config.model, config.seed);
    Rng rng(config.seed ^ 0x9E3779B97F4A7C15ull);
    std::vector<FeatureSequence> batch(2);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        batch[i].id = "gc" + std::to_string(i);
        batch[i].features = normal_matrix(config.frames, config.model.input_dim, 1.0, rng);
        batch[i].label = i == 0 ? Label::kReal : Label::kFake;
    }
    const std::vector<const FeatureSequence*> ptrs{&batch[0], &batch[1]};

    model.zero_grad();
    loss_total(model, ptrs, config.loss, true);

    GradCheckReport report;
    report.tolerance = config.tolerance;
    for (ParamTensor* p : model.parameters()) {
        GroupError g{p->name, static_cast<std::size_t>(p->size()), 0.0, 0.0};
        for (Eigen::Index i = 0; i < p->size(); ++i) {
            double& x = p->value.data()[i];
            const double saved = x;
            x = saved + config.step;
            const double up = loss_total(model, ptrs, config.loss, false).total;
            x = saved - config.step;
            const double down = loss_total(model, ptrs, config.loss, false).total;
            x = saved;
            const double numeric = (up - down) / (2.0 * config.step);
            const double rel = relative_error(p->grad.data()[i], numeric);
            if (!std::isfinite(rel)) throw NumericError("non-finite gradient comparison in " + p->name);
            g.max_rel = std::max(g.max_rel, rel);
            g.mean_rel += rel;
        }
        if (g.count > 0) g.mean_rel /= static_cast<double>(g.count);
        report.max_rel = std::max(report.max_rel, g.max_rel);
        report.groups.push_back(g);
    }
    return report;
}

std::string format_report(const GradCheckReport& report) {
    std::string out = "parameter\tcount\tmax_rel\tmean_rel\n";
    char line[256];
    for (const GroupError& g : report.groups) {
        std::snprintf(line, sizeof line, "%s\t%zu\t%.3e\t%.3e\n", g.name.c_str(), g.count, g.max_rel, g.mean_rel);
        out += line;
    }
    std::snprintf(line, sizeof line, "overall max_rel %.3e (tolerance %.1e): %s\n", report.max_rel, report.tolerance,
                  report.passed() ? "PASS" : "FAIL");
    out += line;
    return out;
}

}  // namespace phoenix
