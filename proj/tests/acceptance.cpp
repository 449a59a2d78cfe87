// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Training criteria take tens of minutes on one core.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "phoenix/checkpoint.hpp"
#include "phoenix/data.hpp"
#include "phoenix/gradcheck.hpp"
#include "phoenix/inspect.hpp"
#include "phoenix/manifold.hpp"
#include "phoenix/metrics.hpp"
#include "phoenix/model.hpp"
#include "phoenix/trainer.hpp"

using namespace phoenix;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += "FAILED " + what;
        }
    }
    void note(const std::string& s) {
        if (!detail.empty()) detail += "; ";
        detail += s;
    }
};

struct Splits {
    std::vector<FeatureSequence> train, dev, test;
};

Splits split(std::vector<FeatureSequence> all) {
    Splits s;
    for (FeatureSequence& x : all) {
        auto& dst = x.split == "train" ? s.train : x.split == "dev" ? s.dev : s.test;
        dst.push_back(std::move(x));
    }
    return s;
}

struct Run {
    TrainResult result;
    std::vector<ScoreRecord> test_scores;
    Evaluation test;
    double seconds = 0.0;
};

Run train_and_test(const TrainConfig& cfg, const Splits& data) {
    const auto t0 = Clock::now();
    TrainResult r = train(cfg, data.train, data.dev);
    auto scores = score(r.model, data.test);
    const Evaluation ev = evaluate(scores, r.threshold);
    Run run{std::move(r), std::move(scores), ev, 0.0};
    run.seconds = seconds_since(t0);
    std::fprintf(stderr, "  [%s seed %llu] acc %.3f eer %.3f thr %.4g (%.0f s)\n",
                 std::string(to_string(cfg.model.variant)).c_str(), static_cast<unsigned long long>(cfg.seed),
                 ev.accuracy, ev.eer, run.result.threshold, run.seconds);
    return run;
}

TrainConfig defaults(Variant v, std::uint64_t seed) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.model.variant = v;
    return cfg;
}

// ---------------------------------------------------------------------------

Outcome gradient_fidelity() {
    Outcome o;
    const auto t0 = Clock::now();
    for (Variant v : {Variant::kFull, Variant::kEuclidean, Variant::kSingleEvidence}) {
        GradCheckConfig cfg;
        cfg.model.variant = v;
        const GradCheckReport rep = finite_difference_check(cfg);
        std::string worst;
        double w = -1.0;
        for (const GroupError& g : rep.groups) {
            if (g.max_rel > w) {
                w = g.max_rel;
                worst = g.name;
            }
        }
        o.note(fmt("%s max rel %.2e (%s)", std::string(to_string(v)).c_str(), rep.max_rel, worst.c_str()));
        o.require(rep.max_rel < 1e-4, std::string(to_string(v)) + " below 1e-4");
    }
    const double secs = seconds_since(t0);
    o.note(fmt("%.1f s", secs));
    o.require(secs < 60.0, "runtime < 60 s");
    return o;
}

Vector random_direction(Eigen::Index h, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vector v(h);
    for (Eigen::Index i = 0; i < h; ++i) v(i) = n(rng);
    return v / v.norm();
}

// Norms spread over the whole ball, with extra mass near the origin and the rim.
manifold::BallPoint random_ball_point(Eigen::Index h, manifold::Curvature c, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double pick = u(rng);
    double r;
    if (pick < 0.2) {
        r = 1e-6 * u(rng);
    } else if (pick < 0.4) {
        r = 1.0 - std::pow(10.0, -1.0 - 4.0 * u(rng));
    } else {
        r = u(rng);
    }
    return manifold::BallPoint(random_direction(h, rng) * (r / c.sqrt()), c);
}

Outcome manifold_identities() {
    Outcome o;
    const auto t0 = Clock::now();
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> dim(1, 16);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    double self = 0.0, asym = 0.0, tri_violation = 0.0, exp_err = 0.0, rim = 0.0;
    auto track_rim = [&](const Vector& x, double c) { rim = std::max(rim, std::sqrt(c) * x.norm()); };

    for (int trial = 0; trial < 10000; ++trial) {
        const manifold::Curvature c(trial % 2 == 0 ? 1.0 : 0.1 + 2.0 * u(rng));
        const Eigen::Index h = dim(rng);
        const auto x = random_ball_point(h, c, rng);
        const auto y = random_ball_point(h, c, rng);
        const auto z = random_ball_point(h, c, rng);
        self = std::max(self, manifold::geodesic_distance(x, x));
        const double dxy = manifold::geodesic_distance(x, y);
        asym = std::max(asym, std::abs(dxy - manifold::geodesic_distance(y, x)));
        const double dyz = manifold::geodesic_distance(y, z);
        const double dxz = manifold::geodesic_distance(x, z);
        tri_violation = std::max(tri_violation, (dxz - (dxy + dyz)) / (1.0 + dxz));

        track_rim(x.coords(), c.value());
        track_rim(manifold::mobius_add(x, y).coords(), c.value());
        track_rim(manifold::exp_map_origin(random_direction(h, rng) * 1e3 * u(rng), c).coords(), c.value());

        // ||y|| <= 5 on the unit-curvature ball.
        const manifold::Curvature one(1.0);
        const Vector tangent = random_direction(h, rng) * (5.0 * u(rng));
        const auto e = manifold::exp_map_origin(tangent, one);
        track_rim(e.coords(), 1.0);
        exp_err = std::max(exp_err,
                           std::abs(manifold::geodesic_distance(manifold::BallPoint::origin(h, one), e) - 2.0 * tangent.norm()));
    }
    const double secs = seconds_since(t0);
    o.note(fmt("max d(x,x) %.1e, asym %.1e, triangle excess %.1e, |d(0,Exp y)-2|y|| %.1e, max sqrt(c)|x| 1-%.2e, %.2f s",
               self, asym, std::max(0.0, tri_violation), exp_err, 1.0 - rim, secs));
    o.require(self < 1e-9, "d(x,x) < 1e-9");
    o.require(asym < 1e-12, "symmetry < 1e-12");
    // collinear triples sit on equality, so allow rounding at the 1e-9 level used elsewhere
    o.require(tri_violation <= 1e-9, "triangle inequality (1e-9 relative rounding slack)");
    o.require(exp_err < 1e-9, "d(0,Exp0(y)) = 2|y|");
    o.require(rim <= 1.0 - manifold::kBallMargin, "ball margin");
    o.require(secs < 10.0, "runtime < 10 s");
    return o;
}

Outcome normalization_invariants() {
    Outcome o;
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> small(1, 6);
    std::uniform_int_distribution<int> frames(1, 40);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double resp_err = 0.0, attn_err = 0.0;
    std::size_t sandwich_fail = 0, rows = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        ModelConfig mc;
        mc.input_dim = small(rng) + 2;
        mc.model_dim = 4 * small(rng);
        mc.ball_dim = small(rng) + 1;
        mc.evidence = small(rng);
        mc.prototypes = small(rng);
        mc.layers = small(rng) % 3 + 1;
        mc.curvature = 0.2 + 2.0 * u(rng);
        mc.tau = std::pow(10.0, -2.0 + 2.0 * u(rng));
        mc.variant = trial % 2 == 0 ? Variant::kFull : Variant::kEuclidean;
        Model model(mc, rng());
        // Push weights and prototypes away from init so the softmaxes are not all flat.
        for (ParamTensor* p : model.parameters()) p->value += uniform_matrix(p->value.rows(), p->value.cols(), 0.5, rng);
        const Matrix x = normal_matrix(frames(rng), mc.input_dim, 1.0 + 3.0 * u(rng), rng);

        Tape t;
        const ForwardTrace tr = model.forward(t, x);
        const Matrix& q = t.value(tr.head->responsibilities);
        const Matrix& a = t.value(tr.attention);
        const Matrix& d = t.value(tr.head->positive_distances);
        const Matrix& sp = t.value(tr.head->scores.positive);
        for (Eigen::Index m = 0; m < q.rows(); ++m) {
            resp_err = std::max(resp_err, std::abs(q.row(m).sum() - 1.0));
            attn_err = std::max(attn_err, std::abs(a.row(m).sum() - 1.0));
            const double lo = (d.row(m) * (-1.0 / mc.tau)).maxCoeff();
            const double hi = lo + std::log(static_cast<double>(mc.prototypes));
            ++rows;
            if (!(sp(m, 0) >= lo && sp(m, 0) <= hi)) ++sandwich_fail;
        }
    }
    o.note(fmt("max |row sum - 1|: responsibilities %.1e, attention %.1e; sandwich violations %zu/%zu", resp_err,
               attn_err, sandwich_fail, rows));
    o.require(resp_err <= 1e-9, "responsibility rows");
    o.require(attn_err <= 1e-9, "attention rows");
    o.require(sandwich_fail == 0, "log-sum-exp sandwich");
    return o;
}

std::vector<ScoreRecord> as_records(const std::vector<oracle::Scored>& xs) {
    std::vector<ScoreRecord> rs;
    for (const oracle::Scored& s : xs) rs.push_back(ScoreRecord{"u", s.fake ? Label::kFake : Label::kReal, s.score, "", 0.0, 0.0});
    return rs;
}

Outcome metric_oracles() {
    Outcome o;
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> size(2, 50);
    std::uniform_int_distribution<int> grid(0, 8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<oracle::Scored> xs(size(rng));
        const bool ties = trial % 2 == 0;
        for (auto& s : xs) {
            s.score = ties ? grid(rng) / 8.0 : u(rng);
            s.fake = coin(rng);
        }
        xs[0].fake = true;
        xs[1].fake = false;
        std::shuffle(xs.begin(), xs.end(), rng);
        const auto rs = as_records(xs);

        std::vector<double> ts{0.0, 1.0, u(rng)};
        for (const auto& s : xs) ts.push_back(s.score);
        for (double t : ts) {
            const auto [acc, f1] = oracle::accuracy_f1(xs, t);
            const Classification c = accuracy_f1(rs, t);
            worst = std::max({worst, std::abs(c.accuracy - acc), std::abs(c.macro_f1 - f1)});
        }
        const auto [bt, bf] = oracle::select_threshold(xs);
        const ThresholdChoice ch = select_threshold(rs);
        worst = std::max({worst, std::abs(ch.threshold - bt), std::abs(ch.macro_f1 - bf)});
        worst = std::max(worst, std::abs(eer(rs) - oracle::eer(xs)));
    }
    auto recs = [](std::initializer_list<std::pair<double, bool>> l) {
        std::vector<oracle::Scored> xs;
        for (auto [s, f] : l) xs.push_back({s, f});
        return as_records(xs);
    };
    const double separated = eer(recs({{0.9, true}, {0.8, true}, {0.1, false}, {0.2, false}}));
    const double inverted = eer(recs({{0.1, true}, {0.2, true}, {0.9, false}, {0.8, false}}));
    const double interleaved = eer(recs({{0.1, false}, {0.2, true}, {0.3, false}, {0.4, true}}));
    o.note(fmt("max deviation over 1000 trials %.1e; EER separated %g, inverted %g, interleaved %g", worst, separated,
               inverted, interleaved));
    o.require(worst <= 1e-9, "brute-force agreement");
    o.require(separated == 0.0, "separation -> 0");
    o.require(inverted == 1.0, "inversion -> 1");
    o.require(std::abs(interleaved - 0.5) <= 1e-12, "interleaved -> 0.5");
    return o;
}

Outcome synthetic_end_to_end(const Run& full) {
    Outcome o;
    o.note(fmt("test acc %.3f, EER %.3f, macro-F1 %.3f, %zu epochs, %.0f s", full.test.accuracy, full.test.eer,
               full.test.macro_f1, full.result.epochs.size(), full.seconds));
    o.require(full.test.accuracy >= 0.95, "accuracy >= 0.95");
    o.require(full.test.eer <= 0.05, "EER <= 0.05");
    o.require(full.result.epochs.size() <= 20, "<= 20 epochs");
    o.require(full.seconds < 300.0, "runtime < 5 min");
    return o;
}

Outcome ablation_ordering(const std::map<std::pair<Variant, std::uint64_t>, double>& acc,
                          const std::vector<std::uint64_t>& seeds) {
    Outcome o;
    int ge_euc = 0, ge_m1 = 0, m1_gap = 0;
    for (std::uint64_t s : seeds) {
        const double f = acc.at({Variant::kFull, s});
        const double e = acc.at({Variant::kEuclidean, s});
        const double m = acc.at({Variant::kSingleEvidence, s});
        ge_euc += f >= e;
        ge_m1 += f >= m;
        m1_gap += f - m >= 0.02 - 1e-12;
        o.note(fmt("seed %llu full %.2f euc %.2f m1 %.2f", static_cast<unsigned long long>(s), f, e, m));
    }
    o.note(fmt("full>=euc %d/3, full>=m1 %d/3, m1 trails by >=2 pts %d/3", ge_euc, ge_m1, m1_gap));
    o.require(ge_euc >= 2, "full >= euclidean by majority");
    o.require(ge_m1 >= 2, "full >= m1 by majority");
    o.require(m1_gap >= 2, "m1 gap >= 2 points on 2 seeds");
    return o;
}

Outcome mode_discovery(Run& full, const Splits& data) {
    Outcome o;
    const ModePurity p = mode_purity(full.result.model, data.test);
    std::string table;
    for (Eigen::Index k = 0; k < p.counts.rows(); ++k) {
        table += k ? " | " : "";
        for (Eigen::Index g = 0; g < p.counts.cols(); ++g) table += fmt("%s%.0f", g ? " " : "", p.counts(k, g));
    }
    o.note(fmt("purity %.3f over %zu fakes; prototype x mode counts [%s]", p.purity, p.fakes, table.c_str()));
    o.require(p.purity >= 0.8, "purity >= 0.8");
    return o;
}

Outcome null_control(const Run& null_run) {
    Outcome o;
    o.note(fmt("rho=0 test acc %.3f, EER %.3f", null_run.test.accuracy, null_run.test.eer));
    o.require(null_run.test.accuracy >= 0.4 && null_run.test.accuracy <= 0.6, "accuracy in [0.4, 0.6]");
    return o;
}

bool same_bits(const std::vector<ScoreRecord>& a, const std::vector<ScoreRecord>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].id != b[i].id || std::bit_cast<std::uint64_t>(a[i].p_fake) != std::bit_cast<std::uint64_t>(b[i].p_fake) ||
            std::bit_cast<std::uint64_t>(a[i].negative_logit) != std::bit_cast<std::uint64_t>(b[i].negative_logit) ||
            std::bit_cast<std::uint64_t>(a[i].positive_logit) != std::bit_cast<std::uint64_t>(b[i].positive_logit)) {
            return false;
        }
    }
    return true;
}

bool same_eval(const Evaluation& a, const Evaluation& b) {
    auto eq = [](double x, double y) { return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y); };
    return eq(a.accuracy, b.accuracy) && eq(a.macro_f1, b.macro_f1) && eq(a.eer, b.eer) && a.count == b.count;
}

Outcome determinism(const std::filesystem::path& scratch) {
    Outcome o;
    TrainConfig cfg = defaults(Variant::kFull, 42);
    cfg.epochs = 2;

    // Two independent pipelines from the config alone.
    const Splits a = split(synthesize(SynthConfig{}));
    const Splits b = split(synthesize(SynthConfig{}));
    Run ra = train_and_test(cfg, a);
    Run rb = train_and_test(cfg, b);
    const std::string bytes_a = encode_checkpoint(ra.result);
    const std::string bytes_b = encode_checkpoint(rb.result);
    o.require(bytes_a == bytes_b, "bit-identical checkpoints");
    o.require(same_bits(ra.test_scores, rb.test_scores) && same_eval(ra.test, rb.test), "bit-identical metrics");

    const auto file = scratch / "determinism.phnx";
    save_checkpoint(ra.result, file);
    TrainResult loaded = load_checkpoint(file);
    const auto reloaded_scores = score(loaded.model, a.test);
    const Evaluation reloaded = evaluate(reloaded_scores, loaded.threshold);
    o.require(same_bits(ra.test_scores, reloaded_scores) && same_eval(ra.test, reloaded) &&
                  loaded.threshold == ra.result.threshold,
              "save -> load -> eval equals in-memory eval");
    o.require(encode_checkpoint(loaded) == bytes_a, "reload re-encodes identically");

    FeatureMatrix f(3, 4);
    const float specials[] = {std::numeric_limits<float>::denorm_min(),
                              -std::numeric_limits<float>::denorm_min(),
                              std::bit_cast<float>(0x007FFFFFu),
                              1e-40f,
                              0.0f,
                              -0.0f,
                              std::numeric_limits<float>::min(),
                              std::numeric_limits<float>::max(),
                              std::numeric_limits<float>::lowest(),
                              std::numeric_limits<float>::epsilon(),
                              -std::bit_cast<float>(0x00000100u),
                              std::bit_cast<float>(0x3EAAAAABu)};
    std::memcpy(f.data(), specials, sizeof specials);
    write_feature_file(f, scratch / "special.hcfd");
    const FeatureMatrix g = read_feature_file(scratch / "special.hcfd");
    o.require(g.rows() == 3 && g.cols() == 4 && std::memcmp(f.data(), g.data(), sizeof specials) == 0,
              "feature round-trip bit-exact");

    o.note(fmt("2-epoch runs: checkpoints %zu bytes each, %s; reload eval acc %.3f vs %.3f; subnormal round-trip checked",
               bytes_a.size(), bytes_a == bytes_b ? "identical" : "different", reloaded.accuracy, ra.test.accuracy));
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    // Optional arguments select a subset of criteria by number.
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };

    const auto scratch = std::filesystem::temp_directory_path() / fmt("phoenix_acceptance_%lld",
                                                                      static_cast<long long>(Clock::now().time_since_epoch().count()));
    std::filesystem::create_directories(scratch);

    std::vector<std::pair<int, Outcome>> results;
    auto run = [&](int id, const std::function<Outcome()>& f) {
        if (!wanted(id)) return;
        std::fprintf(stderr, "criterion %d ...\n", id);
        Outcome o;
        try {
            o = f();
        } catch (const std::exception& e) {
            o.pass = false;
            o.note(std::string("exception: ") + e.what());
        }
        std::printf("criterion %d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        results.emplace_back(id, o);
    };

    run(1, gradient_fidelity);
    run(2, manifold_identities);
    run(3, normalization_invariants);
    run(4, metric_oracles);

    // Criterion 5 times data generation, training and evaluation together.
    Splits data;
    std::optional<Run> full_run;
    auto full = [&]() -> Run& {
        if (!full_run) {
            const auto t0 = Clock::now();
            data = split(synthesize(SynthConfig{}));
            full_run = train_and_test(defaults(Variant::kFull, 42), data);
            full_run->seconds = seconds_since(t0);
        }
        return *full_run;
    };
    run(5, [&] { return synthetic_end_to_end(full()); });

    const std::vector<std::uint64_t> seeds{42, 43, 44};
    std::map<std::pair<Variant, std::uint64_t>, double> acc;
    run(6, [&] {
        for (std::uint64_t s : seeds) {
            for (Variant v : {Variant::kFull, Variant::kEuclidean, Variant::kSingleEvidence}) {
                if (v == Variant::kFull && s == 42) {
                    acc[{v, s}] = full().test.accuracy;
                    continue;
                }
                full();
                acc[{v, s}] = train_and_test(defaults(v, s), data).test.accuracy;
            }
        }
        return ablation_ordering(acc, seeds);
    });

    run(7, [&] { return mode_discovery(full(), data); });

    run(8, [&] {
        SynthConfig sc;
        sc.artifact_fraction = 0.0;
        return null_control(train_and_test(defaults(Variant::kFull, 42), split(synthesize(sc))));
    });

    run(9, [&] { return determinism(scratch); });

    std::filesystem::remove_all(scratch);
    const auto failed = std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.second.pass; });
    std::printf("%zu/%zu criteria passed\n", results.size() - static_cast<std::size_t>(failed), results.size());
    return failed == 0 ? 0 : 1;
}
