#include <set>
#include <sstream>

#include "doctest.h"
#include "edgecache/placement.hpp"
#include "test_support.hpp"

using namespace edgecache;
using testing::Gen;

namespace {

Dense<double> joint_from(std::initializer_list<std::initializer_list<double>> rows) {
    Dense<double> m(rows.size(), rows.begin()->size(), 0.0);
    std::size_t r = 0;
    for (const auto& row : rows) {
        std::size_t c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

std::set<std::size_t> user_set(const IndicatorSchedule& s, std::size_t t, std::size_t u) {
    std::set<std::size_t> out;
    for (std::size_t f = 0; f < s.contents(); ++f)
        if (s.user(t, u, f)) out.insert(f);
    return out;
}

std::set<std::size_t> bs_set(const IndicatorSchedule& s, std::size_t t, std::size_t j) {
    std::set<std::size_t> out;
    for (std::size_t f = 0; f < s.contents(); ++f)
        if (s.bs(t, j, f)) out.insert(f);
    return out;
}

using Set = std::set<std::size_t>;

Dense<double> random_joint(Gen& g, const Topology& topo) {
    Dense<double> j(topo.num_users(), topo.num_contents(), 0.0);
    double mass = 0.0;
    for (auto& v : j.data()) {
        if (g.coin(0.4)) continue;
        // Coarse values so that ties occur.
        v = g.coin(0.3) ? 0.25 : g.real(0.0, 1.0);
        mass += v;
    }
    if (mass > 0.0)
        for (auto& v : j.data()) v /= mass;
    return j;
}

RequestMatrix random_history(Gen& g, const Topology& topo, std::size_t slots) {
    RequestMatrix m(slots, topo.num_users(), topo.num_contents());
    for (std::size_t t = 0; t < slots; ++t) m.set_slot(t, g.counts(topo.num_users(), topo.num_contents(), 5, 0.5));
    return m;
}

}  // namespace

TEST_CASE("scheme names") {
    for (auto s : {SchemeId::BsFirst, SchemeId::UserFirst, SchemeId::Overlapping, SchemeId::Homogeneous,
                   SchemeId::StaticZipf})
        CHECK(parse_scheme(to_string(s)) == s);
    CHECK_THROWS_AS(parse_scheme("random"), std::invalid_argument);
    const auto list = parse_scheme_list("bs-first, overlapping");
    REQUIRE(list.size() == 2);
    CHECK(list[1] == SchemeId::Overlapping);
}

TEST_CASE("rank_positive drops zeros and breaks ties by index") {
    const std::vector<double> s{0.2, 0.0, 0.5, 0.2, -1.0, 0.5};
    CHECK(rank_positive(s) == std::vector<std::size_t>{2, 5, 0, 3});
    CHECK(rank_positive(std::vector<double>{}).empty());
}

TEST_CASE("bs-first: commonly preferred contents go to a BS first") {
    const auto topo = build_topology({2, 2, 6, 2, 1});
    const std::vector<Dense<double>> joints{joint_from({{.4, .3, .3, 0, 0, 0},
                                                        {.4, .3, 0, .3, 0, 0},
                                                        {.4, .3, 0, 0, .3, 0},
                                                        {.4, .3, 0, 0, 0, .3}})};
    const auto s = greedy_bs_first(joints, topo);
    CHECK(bs_set(s, 0, 0) == Set{0, 1});
    CHECK(bs_set(s, 0, 1) == Set{});
    CHECK(user_set(s, 0, 0) == Set{2});
    CHECK(user_set(s, 0, 1) == Set{3});
    CHECK(user_set(s, 0, 2) == Set{4});
    CHECK(user_set(s, 0, 3) == Set{5});
    CHECK(check_cluster_uniqueness(s).empty());
}

TEST_CASE("bs-first: pairwise-common contents and BS top-up") {
    // Three cells of one user. Content 0 is common to all, 1 to cells 0 and 1.
    const auto topo = build_topology({3, 1, 6, 2, 1});
    const std::vector<Dense<double>> joints{joint_from({{.5, .3, .2, 0, 0, 0},  //
                                                        {.4, .4, 0, .2, 0, 0},
                                                        {.6, 0, 0, 0, .3, .1}})};
    const auto s = greedy_bs_first(joints, topo);
    CHECK(bs_set(s, 0, 0) == Set{0, 1});
    CHECK(user_set(s, 0, 0) == Set{2});
    CHECK(user_set(s, 0, 1) == Set{3});
    CHECK(bs_set(s, 0, 1) == Set{});
    CHECK(user_set(s, 0, 2) == Set{4});
    CHECK(bs_set(s, 0, 2) == Set{5});
}

TEST_CASE("bs-first: disjoint single preferences are stored once each") {
    const auto topo = build_topology({2, 2, 4, 1, 1});
    const std::vector<Dense<double>> joints{
        joint_from({{.25, 0, 0, 0}, {0, .25, 0, 0}, {0, 0, .25, 0}, {0, 0, 0, .25}})};
    for (auto scheme : {SchemeId::BsFirst, SchemeId::UserFirst}) {
        const auto s = build_schedule(scheme, joints, RequestMatrix(1, 4, 4), topo);
        for (std::size_t f = 0; f < 4; ++f) {
            std::size_t copies = 0;
            for (std::size_t u = 0; u < 4; ++u) copies += s.user(0, u, f);
            for (std::size_t j = 0; j < 2; ++j) copies += s.bs(0, j, f);
            CHECK(copies == 1);
        }
    }
}

TEST_CASE("zero capacity gives an empty schedule") {
    const auto topo = build_topology({2, 2, 4, 0, 0});
    Gen g(61);
    const std::vector<Dense<double>> joints{random_joint(g, topo), random_joint(g, topo)};
    for (auto scheme : {SchemeId::BsFirst, SchemeId::UserFirst, SchemeId::Overlapping, SchemeId::Homogeneous}) {
        const auto s = build_schedule(scheme, joints, RequestMatrix(1, 4, 4), topo);
        for (std::size_t t = 0; t < 2; ++t) {
            for (std::size_t u = 0; u < 4; ++u) CHECK(s.user_load(t, u) == 0);
            for (std::size_t j = 0; j < 2; ++j) CHECK(s.bs_load(t, j) == 0);
        }
    }
}

TEST_CASE("empty preference slot gives an empty placement") {
    const auto topo = build_topology({2, 2, 4, 2, 2});
    const std::vector<Dense<double>> joints{Dense<double>(4, 4, 0.0)};
    for (auto scheme : {SchemeId::BsFirst, SchemeId::UserFirst, SchemeId::Overlapping, SchemeId::Homogeneous}) {
        const auto s = build_schedule(scheme, joints, RequestMatrix(1, 4, 4), topo);
        for (std::size_t u = 0; u < 4; ++u) CHECK(s.user_load(0, u) == 0);
        for (std::size_t j = 0; j < 2; ++j) CHECK(s.bs_load(0, j) == 0);
    }
}

TEST_CASE("user-first: identical preferences are claimed in user order") {
    const auto topo = build_topology({1, 2, 4, 2, 1});
    const std::vector<Dense<double>> joints{joint_from({{.2, .15, .1, .05}, {.2, .15, .1, .05}})};
    const auto s = greedy_user_first(joints, topo);
    CHECK(user_set(s, 0, 0) == Set{0});
    CHECK(user_set(s, 0, 1) == Set{1});
    CHECK(bs_set(s, 0, 0) == Set{2, 3});
}

TEST_CASE("user-first: a single user stores its preferences, BS the residuals") {
    const auto topo = build_topology({1, 1, 5, 2, 2});
    const std::vector<Dense<double>> joints{joint_from({{.5, .3, .2, 0, 0}})};
    const auto s = greedy_user_first(joints, topo);
    CHECK(user_set(s, 0, 0) == Set{0, 1});
    CHECK(bs_set(s, 0, 0) == Set{2});
}

TEST_CASE("user-first with C_d = 0 fills BSs by cell popularity") {
    const auto topo = build_topology({2, 1, 4, 2, 0});
    const std::vector<Dense<double>> joints{joint_from({{.1, .2, .3, 0}, {0, .1, .1, .2}})};
    const auto s = greedy_user_first(joints, topo);
    CHECK(bs_set(s, 0, 0) == Set{1, 2});
    CHECK(bs_set(s, 0, 1) == Set{3});  // content 1 and 2 are already at BS 0
}

TEST_CASE("overlapping: identical preferences overlap, BS pads") {
    const auto topo = build_topology({1, 3, 3, 2, 1});
    const std::vector<Dense<double>> joints{joint_from({{.2, .1, 0}, {.2, .1, 0}, {.2, .1, 0}})};
    const auto s = greedy_overlapping(joints, topo);
    for (std::size_t u = 0; u < 3; ++u) CHECK(user_set(s, 0, u) == Set{0});
    CHECK(bs_set(s, 0, 0) == Set{0, 1});
}

TEST_CASE("overlapping: spare user capacity takes cell residuals") {
    const auto topo = build_topology({1, 2, 5, 2, 2});
    const std::vector<Dense<double>> joints{joint_from({{.2, .15, .1, .05, 0}, {.5, 0, 0, 0, 0}})};
    const auto s = greedy_overlapping(joints, topo);
    CHECK(user_set(s, 0, 0) == Set{0, 1});
    CHECK(user_set(s, 0, 1) == Set{0, 2});
    CHECK(bs_set(s, 0, 0) == Set{3, 0});
}

TEST_CASE("overlapping: residuals fit in spare capacity, users pad from the cell ranking") {
    const auto topo = build_topology({1, 2, 4, 1, 2});
    const std::vector<Dense<double>> joints{joint_from({{.3, .2, .1, 0}, {.4, 0, 0, 0}})};
    const auto s = greedy_overlapping(joints, topo);
    CHECK(user_set(s, 0, 0) == Set{0, 1});
    CHECK(user_set(s, 0, 1) == Set{0, 2});
    CHECK(bs_set(s, 0, 0) == Set{0});
}

TEST_CASE("overlapping: single slot probabilities are binary") {
    Gen g(62);
    const auto topo = build_topology({2, 3, 6, 2, 2});
    const std::vector<Dense<double>> joints{random_joint(g, topo)};
    const auto p = indicators_to_probabilities(greedy_overlapping(joints, topo));
    for (double v : p.user_probs.data()) CHECK((v == 0.0 || v == 1.0));
    for (double v : p.bs_probs.data()) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("homogeneous: two cells with disjoint favourites") {
    const auto topo = build_topology({2, 1, 6, 2, 1});
    const std::vector<Dense<double>> joints{joint_from({{.25, .15, .1, 0, 0, 0}, {0, 0, 0, .3, .15, .05}})};
    const auto s = homogeneous_greedy(joints, topo);
    CHECK(user_set(s, 0, 0) == Set{0});
    CHECK(user_set(s, 0, 1) == Set{3});
    CHECK(bs_set(s, 0, 0) == Set{1, 4});
    CHECK(bs_set(s, 0, 1) == Set{1, 4});
}

TEST_CASE("homogeneous: uniform preferences follow the index tie-break") {
    const auto topo = build_topology({1, 3, 5, 1, 2});
    const std::vector<Dense<double>> joints{Dense<double>(3, 5, 1.0 / 15)};
    const auto s = homogeneous_greedy(joints, topo);
    for (std::size_t u = 0; u < 3; ++u) CHECK(user_set(s, 0, u) == Set{0, 1});
    CHECK(bs_set(s, 0, 0) == Set{2});
}

TEST_CASE("homogeneous: saturated users, BSs pad with the cluster favourites") {
    const auto topo = build_topology({2, 2, 4, 2, 4});
    const std::vector<Dense<double>> joints{
        joint_from({{.1, .05, .05, .05}, {.1, .05, .05, .05}, {.05, .05, .2, .05}, {.05, .05, .05, 0}})};
    const auto s = homogeneous_greedy(joints, topo);
    for (std::size_t u = 0; u < 4; ++u) CHECK(user_set(s, 0, u) == Set{0, 1, 2, 3});
    // Cluster popularity: 2 (.35), 0 (.3), 1 (.2), 3 (.15).
    CHECK(bs_set(s, 0, 0) == Set{2, 0});
    CHECK(bs_set(s, 0, 1) == Set{2, 0});
    CHECK(check_tier_uniformity(s, topo).empty());
}

TEST_CASE("static baseline: ranks from history totals") {
    const auto topo = build_topology({2, 1, 5, 2, 1});
    RequestMatrix h(3, 2, 5);
    // Totals: f0=1, f1=9, f2=5, f3=7, f4=0.
    h.at(0, 0, 1) = 4;
    h.at(1, 1, 1) = 5;
    h.at(0, 1, 2) = 5;
    h.at(2, 0, 3) = 7;
    h.at(2, 1, 0) = 1;
    const auto s = static_zipf_baseline(h, topo, 4);
    REQUIRE(s.slots() == 4);
    for (std::size_t t = 0; t < 4; ++t) {
        CHECK(user_set(s, t, 0) == Set{1});
        CHECK(user_set(s, t, 1) == Set{1});
        CHECK(bs_set(s, t, 0) == Set{3, 2});
        CHECK(bs_set(s, t, 1) == Set{3, 2});
    }
    const auto p = indicators_to_probabilities(s);
    for (double v : p.user_probs.data()) CHECK((v == 0.0 || v == 1.0));
    REQUIRE(homogeneous_probabilities(s).has_value());
    CHECK(check_tier_disjoint(s).empty());
    CHECK_THROWS_AS(static_zipf_baseline(RequestMatrix(0, 2, 5), topo, 4), std::invalid_argument);
    CHECK_THROWS_AS(static_zipf_baseline(RequestMatrix(1, 3, 5), topo, 4), std::invalid_argument);
}

TEST_CASE("static baseline: capacities beyond the catalog") {
    const auto topo = build_topology({1, 1, 3, 3, 2});
    RequestMatrix h(1, 1, 3);
    h.at(0, 0, 2) = 1;
    const auto s = static_zipf_baseline(h, topo, 1);
    CHECK(user_set(s, 0, 0) == Set{2, 0});
    CHECK(bs_set(s, 0, 0) == Set{1});
}

TEST_CASE("property: static baseline is slot invariant") {
    Gen g(63);
    for (int trial = 0; trial < 100; ++trial) {
        const auto topo = g.topology(3, 3, 8);
        const auto s = static_zipf_baseline(random_history(g, topo, g.size(1, 4)), topo, g.size(1, 6));
        for (std::size_t t = 1; t < s.slots(); ++t)
            for (std::size_t f = 0; f < s.contents(); ++f) {
                for (std::size_t u = 0; u < s.users(); ++u) REQUIRE(s.user(t, u, f) == s.user(0, u, f));
                for (std::size_t j = 0; j < s.num_bs(); ++j) REQUIRE(s.bs(t, j, f) == s.bs(0, j, f));
            }
    }
}

TEST_CASE("indicators to probabilities") {
    IndicatorSchedule s(50, 2, 1, 3);
    for (std::size_t t = 0; t < 50; ++t) {
        s.set_user(t, 0, 0);
        if (t % 2 == 0) s.set_user(t, 1, 1);
        if (t < 5) s.set_bs(t, 0, 2);
    }
    const auto p = indicators_to_probabilities(s);
    CHECK(p.user_probs(0, 0) == 1.0);
    CHECK(p.user_probs(1, 1) == 0.5);
    CHECK(p.user_probs(1, 0) == 0.0);
    CHECK(p.bs_probs(0, 2) == 0.1);
    CHECK_FALSE(homogeneous_probabilities(s).has_value());
    CHECK_THROWS_AS(indicators_to_probabilities(IndicatorSchedule(0, 1, 1, 1)), std::invalid_argument);
}

TEST_CASE("property: probabilities equal an independent average") {
    Gen g(64);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t T = g.size(1, 7), U = g.size(1, 5), B = g.size(1, 3), F = g.size(1, 6);
        IndicatorSchedule s(T, U, B, F);
        std::vector<double> sum_u(U * F, 0.0), sum_b(B * F, 0.0);
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t f = 0; f < F; ++f) {
                for (std::size_t u = 0; u < U; ++u)
                    if (g.coin()) s.set_user(t, u, f), sum_u[u * F + f] += 1.0;
                for (std::size_t j = 0; j < B; ++j)
                    if (g.coin()) s.set_bs(t, j, f), sum_b[j * F + f] += 1.0;
            }
        const auto p = indicators_to_probabilities(s);
        for (std::size_t i = 0; i < U * F; ++i) CHECK(p.user_probs.data()[i] == doctest::Approx(sum_u[i] / T));
        for (std::size_t i = 0; i < B * F; ++i) CHECK(p.bs_probs.data()[i] == doctest::Approx(sum_b[i] / T));
    }
}

TEST_CASE("invariant checkers flag violations") {
    const auto topo = build_topology({2, 2, 3, 1, 1});
    IndicatorSchedule s(1, 4, 2, 3);
    CHECK(check_capacity(s, topo).empty());
    s.set_user(0, 0, 0);
    s.set_user(0, 0, 1);
    CHECK(check_capacity(s, topo) == "slot 0: user 0 holds 2 > C_d");
    s.set_user(0, 0, 1, false);
    s.set_bs(0, 1, 0);
    CHECK(check_cluster_uniqueness(s) == "slot 0: content 0 stored 2 times");
    CHECK(check_tier_disjoint(s) == "slot 0: content 0 cached in both tiers");
    CHECK(check_tier_uniformity(s, topo) == "slot 0: users of cell 0 disagree on content 0");
    CHECK(check_capacity(s, build_topology({1, 4, 3, 1, 1})) == "schedule dimensions do not match the topology");
}

TEST_CASE("joint dimension mismatch throws") {
    const auto topo = build_topology({2, 2, 3, 1, 1});
    const std::vector<Dense<double>> joints{Dense<double>(4, 4, 0.0)};
    CHECK_THROWS_AS(greedy_bs_first(joints, topo), std::invalid_argument);
    CHECK_THROWS_AS(homogeneous_greedy(joints, topo), std::invalid_argument);
}

TEST_CASE("property: fuzzed schedules satisfy the invariants") {
    Gen g(65);
    const std::vector<SchemeId> all{SchemeId::BsFirst, SchemeId::UserFirst, SchemeId::Overlapping,
                                    SchemeId::Homogeneous, SchemeId::StaticZipf};
    for (int trial = 0; trial < 1000; ++trial) {
        const auto topo = g.topology(4, 5, 12);
        std::vector<Dense<double>> joints;
        for (std::size_t t = g.size(1, 4); t > 0; --t) joints.push_back(random_joint(g, topo));
        const auto history = random_history(g, topo, 3);
        for (auto scheme : all) {
            const auto s = build_schedule(scheme, joints, history, topo);
            REQUIRE(s.slots() == joints.size());
            REQUIRE_MESSAGE(check_capacity(s, topo).empty(), to_string(scheme));
            if (is_non_overlapping(scheme)) REQUIRE_MESSAGE(check_cluster_uniqueness(s).empty(), to_string(scheme));
            if (scheme == SchemeId::Homogeneous || scheme == SchemeId::StaticZipf) {
                REQUIRE(check_tier_uniformity(s, topo).empty());
            }
            if (scheme == SchemeId::StaticZipf) {
                REQUIRE(check_tier_disjoint(s).empty());
                REQUIRE(homogeneous_probabilities(s).has_value());
            }
            const auto p = indicators_to_probabilities(s);
            CHECK_NOTHROW(validate_placement(p, topo));
            REQUIRE(build_schedule(scheme, joints, history, topo) == s);
        }
    }
}

TEST_CASE("non-overlapping schemes only store preferred contents") {
    Gen g(66);
    for (int trial = 0; trial < 300; ++trial) {
        const auto topo = g.topology(3, 4, 10);
        const std::vector<Dense<double>> joints{random_joint(g, topo)};
        for (auto scheme : {SchemeId::BsFirst, SchemeId::UserFirst}) {
            const auto s = build_schedule(scheme, joints, RequestMatrix(1, topo.num_users(), topo.num_contents()), topo);
            for (std::size_t f = 0; f < topo.num_contents(); ++f) {
                double pop = 0.0;
                for (std::size_t u = 0; u < topo.num_users(); ++u) pop += joints[0](u, f);
                bool stored = false;
                for (std::size_t u = 0; u < topo.num_users(); ++u) stored |= s.user(0, u, f);
                for (std::size_t j = 0; j < topo.num_bs(); ++j) stored |= s.bs(0, j, f);
                if (stored) CHECK(pop > 0.0);
            }
        }
    }
}

TEST_CASE("schedule CSV round trip") {
    Gen g(67);
    for (int trial = 0; trial < 50; ++trial) {
        const auto topo = g.topology(3, 3, 6);
        std::vector<Dense<double>> joints;
        for (std::size_t t = g.size(1, 3); t > 0; --t) joints.push_back(random_joint(g, topo));
        auto s = greedy_overlapping(joints, topo);
        s.first_slot = trial % 2 ? 250 : 0;
        std::stringstream buf;
        write_schedule_csv(buf, s);
        CHECK(read_schedule_csv(buf) == s);
    }
}

TEST_CASE("schedule CSV format and errors") {
    IndicatorSchedule s(1, 1, 1, 2);
    s.set_user(0, 0, 1);
    s.set_bs(0, 0, 0);
    std::stringstream out;
    write_schedule_csv(out, s);
    CHECK(out.str() == "#T=1,U=1,B=1,F=2\nt,node_type,node_id,content\n0,user,0,1\n0,bs,0,0\n");

    auto line_of = [](const std::string& text) {
        std::stringstream in(text);
        try {
            read_schedule_csv(in);
        } catch (const ParseError& e) {
            return e.line();
        }
        return std::size_t{0};
    };
    CHECK(line_of("#T=1,U=1,B=1,F=2\nt,node_type,node_id,content\n0,user,0,1\n0,cloud,0,0\n") == 4);
    CHECK(line_of("#T=1,U=1,B=1,F=2\nt,node_type,node_id,content\n0,user,0,2\n") == 3);
    CHECK(line_of("#T=1,U=1,B=1,F=2\nt,node_type,node_id,content\n0,user,0,1\n0,user,0,1\n") == 4);
    CHECK(line_of("#T=1,U=1,B=1,F=2\nt,node_type,node_id,content\n0,bs,1,1\n") == 3);
    CHECK(line_of("#T=1,U=1,B=1,F=2\nt,node_type\n") == 2);
    CHECK(line_of("#T=1,U=1,B=1,F=2\n") == 1);
    CHECK(line_of("") == 1);
}
