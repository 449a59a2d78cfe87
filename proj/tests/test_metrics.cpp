#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "phoenix/error.hpp"
#include "phoenix/metrics.hpp"

using namespace phoenix;

namespace {

std::vector<ScoreRecord> records(std::initializer_list<double> fakes, std::initializer_list<double> reals) {
    std::vector<ScoreRecord> out;
    for (double f : fakes) out.push_back(ScoreRecord{"f", Label::kFake, f, "", 0.0, 0.0});
    for (double r : reals) out.push_back(ScoreRecord{"r", Label::kReal, r, "", 0.0, 0.0});
    return out;
}

std::vector<oracle::Scored> plain(const std::vector<ScoreRecord>& rs) {
    std::vector<oracle::Scored> out;
    for (const ScoreRecord& r : rs) out.push_back({r.p_fake, r.label == Label::kFake});
    return out;
}

// Scores on a coarse grid so ties are common.
std::vector<ScoreRecord> random_records(std::mt19937_64& rng, bool both_classes) {
    std::uniform_int_distribution<int> size(1, 50);
    std::uniform_int_distribution<int> grid(0, 10);
    std::bernoulli_distribution coin(0.5);
    std::vector<ScoreRecord> rs(size(rng));
    for (ScoreRecord& r : rs) {
        r.p_fake = grid(rng) / 10.0;
        r.label = coin(rng) ? Label::kFake : Label::kReal;
    }
    if (both_classes) {
        rs.push_back(ScoreRecord{"x", Label::kFake, grid(rng) / 10.0, "", 0.0, 0.0});
        rs.push_back(ScoreRecord{"y", Label::kReal, grid(rng) / 10.0, "", 0.0, 0.0});
    }
    return rs;
}

}  // namespace

TEST_CASE("accuracy and macro-F1 hand cases") {
    const auto all_right = records({0.9}, {0.1});
    CHECK(accuracy_f1(all_right, 0.5).accuracy == 1.0);
    CHECK(accuracy_f1(all_right, 0.5).macro_f1 == 1.0);

    const auto both_fake = records({0.9}, {0.8});
    const Classification c = accuracy_f1(both_fake, 0.5);
    CHECK(c.accuracy == 0.5);
    CHECK(c.macro_f1 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

    const auto mixed = records({0.2, 0.7, 0.1}, {0.9, 0.4});
    CHECK(accuracy_f1(mixed, 0.0).accuracy == doctest::Approx(0.6));
    CHECK_THROWS_AS(accuracy_f1(std::vector<ScoreRecord>{}, 0.5), StructuralError);
}

TEST_CASE("threshold ties predict fake") {
    const auto rs = records({0.5}, {0.4});
    CHECK(accuracy_f1(rs, 0.5).accuracy == 1.0);
}

TEST_CASE("EER edge cases") {
    CHECK(eer(records({0.9, 0.8}, {0.1, 0.2})) == 0.0);
    CHECK(eer(records({0.1, 0.2}, {0.9, 0.8})) == 1.0);
    CHECK(eer(records({0.6, 0.2}, {0.7, 0.3})) == 0.5);
    CHECK_THROWS_AS(eer(records({0.1, 0.2}, {})), StructuralError);
}

TEST_CASE("EER is invariant under increasing transforms and record order") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        auto rs = random_records(rng, true);
        const double base = eer(rs);
        auto warped = rs;
        for (ScoreRecord& r : warped) r.p_fake = std::exp(3.0 * r.p_fake) - 7.0;
        CHECK(eer(warped) == doctest::Approx(base).epsilon(1e-12));
        std::shuffle(rs.begin(), rs.end(), rng);
        CHECK(eer(rs) == base);
        CHECK(base >= 0.0);
        CHECK(base <= 1.0);
    }
}

TEST_CASE("EER is zero exactly under strict separation") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const auto rs = random_records(rng, true);
        double min_fake = 2, max_real = -1;
        for (const ScoreRecord& r : rs) {
            if (r.label == Label::kFake) min_fake = std::min(min_fake, r.p_fake);
            else max_real = std::max(max_real, r.p_fake);
        }
        CHECK((eer(rs) == 0.0) == (min_fake > max_real));
    }
}

TEST_CASE("metrics agree with brute force on random inputs") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto rs = random_records(rng, true);
        const auto ps = plain(rs);
        for (double t : {0.0, 0.25, 0.5, 0.7, 1.0}) {
            const auto [acc, f1] = oracle::accuracy_f1(ps, t);
            const Classification c = accuracy_f1(rs, t);
            CHECK(std::abs(c.accuracy - acc) < 1e-9);
            CHECK(std::abs(c.macro_f1 - f1) < 1e-9);
        }
        CHECK(std::abs(eer(rs) - oracle::eer(ps)) < 1e-9);
        const auto [bt, bf] = oracle::select_threshold(ps);
        const ThresholdChoice ch = select_threshold(rs);
        CHECK(std::abs(ch.threshold - bt) < 1e-9);
        CHECK(std::abs(ch.macro_f1 - bf) < 1e-9);
    }
}

TEST_CASE("threshold selection hand cases") {
    const ThresholdChoice sep = select_threshold(records({0.8, 0.9}, {0.1, 0.3}));
    CHECK(sep.macro_f1 == 1.0);
    CHECK(sep.threshold == doctest::Approx(0.55));
    const ThresholdChoice same = select_threshold(records({0.5, 0.5}, {0.5}));
    CHECK(same.threshold == 0.0);
    CHECK(same.macro_f1 == doctest::Approx(0.5 * 0.8));
}
