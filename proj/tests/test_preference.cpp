#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "edgecache/preference.hpp"
#include "test_support.hpp"

using namespace edgecache;

namespace {

Dense<Count> mat(std::initializer_list<std::initializer_list<Count>> rows) {
    Dense<Count> m(rows.size(), rows.begin()->size());
    std::size_t r = 0;
    for (const auto& row : rows) {
        std::size_t c = 0;
        for (Count v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

double total(const Dense<double>& m) {
    double s = 0.0;
    for (double v : m.data()) s += v;
    return s;
}

}  // namespace

TEST_CASE("profile of a 2x2 slot by hand") {
    const auto p = profile_from_counts(mat({{1, 2}, {3, 4}}));
    CHECK_FALSE(p.empty_slot);
    CHECK(p.activity[0] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(p.activity[1] == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(p.conditional(0, 0) == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(p.conditional(0, 1) == doctest::Approx(2.0 / 3).epsilon(1e-15));
    CHECK(p.conditional(1, 0) == doctest::Approx(3.0 / 7).epsilon(1e-15));
    CHECK(p.conditional(1, 1) == doctest::Approx(4.0 / 7).epsilon(1e-15));
    CHECK(p.joint(0, 0) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(p.joint(0, 1) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(p.joint(1, 0) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(p.joint(1, 1) == doctest::Approx(0.4).epsilon(1e-15));
    const auto pop = global_popularity(p);
    CHECK(pop[0] == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(pop[1] == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("single user profile") {
    const auto p = profile_from_counts(mat({{0, 5, 3}}));
    CHECK(p.activity == std::vector<double>{1.0});
    const auto pop = global_popularity(p);
    for (std::size_t f = 0; f < 3; ++f) CHECK(pop[f] == doctest::Approx(p.conditional(0, f)).epsilon(1e-15));
}

TEST_CASE("idle user in a busy slot has zero rows") {
    const auto p = profile_from_counts(mat({{0, 0}, {2, 2}}));
    CHECK(p.activity[0] == 0.0);
    CHECK(p.conditional(0, 0) == 0.0);
    CHECK(p.conditional(0, 1) == 0.0);
    CHECK(p.joint(0, 0) == 0.0);
    CHECK(p.joint(0, 1) == 0.0);
}

TEST_CASE("empty slot is flagged with an all-zero profile") {
    RequestMatrix m(2, 2, 3);
    const auto p = profile_from_slot(m, 1);
    CHECK(p.empty_slot);
    CHECK(p.slot == 1);
    CHECK(total(p.joint) == 0.0);
    const auto pop = global_popularity(p);
    CHECK(std::all_of(pop.begin(), pop.end(), [](double v) { return v == 0.0; }));
    CHECK_THROWS_AS(profile_from_slot(m, 2), std::out_of_range);
}

TEST_CASE("property: joint sums to one and reconstructs the counts") {
    testing::Gen g(31);
    for (int trial = 0; trial < 500; ++trial) {
        const auto counts = g.counts(g.size(1, 8), g.size(1, 10), 1000, 0.5);
        const auto p = profile_from_counts(counts);
        Count q = 0;
        for (auto v : counts.data()) q += v;
        if (q == 0) {
            CHECK(p.empty_slot);
            continue;
        }
        CHECK(std::abs(total(p.joint) - 1.0) < 1e-12);
        const auto pop = global_popularity(p);
        double popsum = 0.0;
        for (double v : pop) popsum += v;
        CHECK(std::abs(popsum - 1.0) < 1e-12);
        double act = 0.0;
        for (double v : p.activity) act += v;
        CHECK(std::abs(act - 1.0) < 1e-12);
        for (std::size_t u = 0; u < counts.rows(); ++u) {
            double rowsum = 0.0;
            for (std::size_t f = 0; f < counts.cols(); ++f) {
                // joint * q must reproduce the integer count.
                REQUIRE(std::llround(p.joint(u, f) * static_cast<double>(q)) == counts(u, f));
                REQUIRE(std::abs(p.joint(u, f) - p.activity[u] * p.conditional(u, f)) < 1e-15);
                rowsum += p.conditional(u, f);
            }
            if (p.activity[u] > 0.0) CHECK(std::abs(rowsum - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("aggregation over one slot is the normalized joint") {
    const auto p = profile_from_counts(mat({{1, 3}, {0, 0}, {2, 2}}));
    const std::vector<PreferenceProfile> seq{p};
    const auto agg = aggregate_preference(seq);
    CHECK(agg.horizon == 1);
    CHECK(agg.rho(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(agg.rho(0, 1) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(agg.rho(1, 0) == 0.0);
    CHECK(agg.rho(1, 1) == 0.0);
    CHECK(agg.rho(2, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(agg.raw(0, 1) == doctest::Approx(0.375).epsilon(1e-15));
}

TEST_CASE("aggregation of identical slots is idempotent") {
    const auto p = profile_from_counts(mat({{1, 3, 0}, {5, 2, 2}}));
    const std::vector<PreferenceProfile> one{p}, two{p, p};
    const auto a = aggregate_preference(one), b = aggregate_preference(two);
    for (std::size_t i = 0; i < a.rho.data().size(); ++i)
        CHECK(a.rho.data()[i] == doctest::Approx(b.rho.data()[i]).epsilon(1e-15));
}

TEST_CASE("aggregation oracle: mean then row normalization") {
    testing::Gen g(41);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t U = g.size(1, 5), F = g.size(1, 6), T = g.size(1, 6);
        std::vector<PreferenceProfile> seq;
        for (std::size_t t = 0; t < T; ++t) seq.push_back(profile_from_counts(g.counts(U, F, 20, 0.5), 100 + t));
        const auto agg = aggregate_preference(seq);
        CHECK(agg.start_slot == 100);
        for (std::size_t u = 0; u < U; ++u) {
            std::vector<double> mean(F, 0.0);
            for (const auto& p : seq)
                for (std::size_t f = 0; f < F; ++f) mean[f] += p.joint(u, f) / static_cast<double>(T);
            double mass = 0.0;
            for (double v : mean) mass += v;
            for (std::size_t f = 0; f < F; ++f) {
                const double expect = mass > 0.0 ? mean[f] / mass : 0.0;
                CHECK(std::abs(agg.rho(u, f) - expect) < 1e-13);
                CHECK(agg.rho(u, f) >= 0.0);
                CHECK(agg.rho(u, f) <= 1.0);
            }
            double rowsum = 0.0;
            for (double v : agg.rho.row(u)) rowsum += v;
            if (mass > 0.0) CHECK(std::abs(rowsum - 1.0) < 1e-12);
        }
        // Permutation invariance.
        auto reversed = seq;
        std::reverse(reversed.begin(), reversed.end());
        const auto back = aggregate_preference(reversed);
        for (std::size_t i = 0; i < U * F; ++i) CHECK(std::abs(back.rho.data()[i] - agg.rho.data()[i]) < 1e-15);
    }
}

TEST_CASE("aggregation errors") {
    CHECK_THROWS_AS(aggregate_preference({}), std::invalid_argument);
    const std::vector<PreferenceProfile> mixed{profile_from_counts(mat({{1, 2}})),
                                               profile_from_counts(mat({{1, 2, 3}}))};
    CHECK_THROWS_AS(aggregate_preference(mixed), std::invalid_argument);
}

TEST_CASE("slot joints and rho CSV") {
    RequestMatrix m(2, 2, 2);
    m.first_slot = 250;
    m.at(0, 0, 1) = 4;
    m.at(1, 1, 0) = 2;
    const auto joints = slot_joints(m);
    REQUIRE(joints.size() == 2);
    CHECK(joints[0](0, 1) == 1.0);
    CHECK(joints[1](1, 0) == 1.0);
    const auto profiles = slot_profiles(m);
    CHECK(profiles[1].slot == 251);
    const auto agg = aggregate_preference(profiles);
    std::ostringstream out;
    write_rho_csv(out, agg);
    CHECK(out.str() == "user,content,rho\n0,1,1\n1,0,1\n");
}
