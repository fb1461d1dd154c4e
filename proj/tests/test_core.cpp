#include <set>
#include <sstream>

#include "doctest.h"
#include "edgecache/core.hpp"
#include "test_support.hpp"

using namespace edgecache;

TEST_CASE("topology with experiment parameters") {
    const auto topo = build_topology({3, 15, 225, 12, 4});
    CHECK(topo.num_users() == 45);
    CHECK(topo.num_bs() == 3);
    CHECK(topo.bs_of(0) == 0);
    CHECK(topo.bs_of(14) == 0);
    CHECK(topo.bs_of(15) == 1);
    CHECK(topo.bs_of(44) == 2);
    CHECK(topo.first_user(2) == 30);
    CHECK(topo.end_user(2) == 45);
    CHECK_THROWS_AS(topo.bs_of(45), std::out_of_range);
}

TEST_CASE("single-user topology") {
    const auto topo = build_topology({1, 1, 1, 1, 1});
    CHECK(topo.num_users() == 1);
    CHECK(topo.bs_of(0) == 0);
}

TEST_CASE("topology rejects invalid configurations") {
    CHECK_THROWS_AS(build_topology({2, 3, 10, 0, 11}), std::invalid_argument);
    CHECK_THROWS_AS(build_topology({2, 3, 10, 11, 0}), std::invalid_argument);
    CHECK_THROWS_AS(build_topology({0, 3, 10, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(build_topology({2, 0, 10, 1, 1}), std::invalid_argument);
    CHECK_THROWS_AS(build_topology({2, 3, 0, 0, 0}), std::invalid_argument);
}

TEST_CASE("every user maps to exactly one BS, contiguously") {
    testing::Gen g(7);
    for (int trial = 0; trial < 200; ++trial) {
        const auto topo = g.topology(5, 6, 10);
        std::vector<std::size_t> members(topo.num_bs(), 0);
        for (std::size_t u = 0; u < topo.num_users(); ++u) {
            const auto j = topo.bs_of(u);
            REQUIRE(j < topo.num_bs());
            CHECK(u >= topo.first_user(j));
            CHECK(u < topo.end_user(j));
            ++members[j];
        }
        for (auto n : members) CHECK(n == topo.users_per_bs());
    }
}

TEST_CASE("slot totals") {
    RequestMatrix m(2, 2, 2);
    SUBCASE("all-zero slot") {
        const auto s = slot_totals(m, 0);
        CHECK(s.per_user == std::vector<Count>{0, 0});
        CHECK(s.per_content == std::vector<Count>{0, 0});
        CHECK(s.total == 0);
    }
    SUBCASE("2x2 hand summation") {
        m.at(1, 0, 0) = 1;
        m.at(1, 0, 1) = 2;
        m.at(1, 1, 0) = 3;
        m.at(1, 1, 1) = 4;
        const auto s = slot_totals(m, 1);
        CHECK(s.per_user == std::vector<Count>{3, 7});
        CHECK(s.per_content == std::vector<Count>{4, 6});
        CHECK(s.total == 10);
    }
    SUBCASE("out of range slot") { CHECK_THROWS_AS(slot_totals(m, 2), std::out_of_range); }
}

TEST_CASE("single entry slot totals") {
    RequestMatrix m(1, 1, 1);
    m.at(0, 0, 0) = 5;
    const auto s = slot_totals(m, 0);
    CHECK(s.per_user == std::vector<Count>{5});
    CHECK(s.per_content == std::vector<Count>{5});
    CHECK(s.total == 5);
}

TEST_CASE("property: request conservation in every slot") {
    testing::Gen g(11);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t T = g.size(1, 4), U = g.size(1, 6), F = g.size(1, 8);
        RequestMatrix m(T, U, F);
        for (std::size_t t = 0; t < T; ++t) m.set_slot(t, g.counts(U, F, 50, 0.4));
        for (std::size_t t = 0; t < T; ++t) {
            const auto s = slot_totals(m, t);
            Count by_user = 0, by_content = 0;
            for (auto v : s.per_user) by_user += v;
            for (auto v : s.per_content) by_content += v;
            CHECK(by_user == s.total);
            CHECK(by_content == s.total);
        }
    }
}

TEST_CASE("request matrix accessors") {
    RequestMatrix m(3, 2, 4);
    m.at(2, 1, 3) = 9;
    CHECK(m.row(2, 1)[3] == 9);
    CHECK(m.slot(2)[1 * 4 + 3] == 9);
    CHECK(m.slot_matrix(2)(1, 3) == 9);
    CHECK_THROWS_AS(m.at(3, 0, 0), std::out_of_range);
    CHECK_THROWS_AS(m.at(0, 2, 0), std::out_of_range);
    CHECK_THROWS_AS(m.at(0, 0, 4), std::out_of_range);
    CHECK_THROWS_AS(m.set_slot(0, Dense<Count>(3, 4)), std::invalid_argument);

    const auto series = m.user_series(1, 1, 3);
    CHECK(series.rows() == 2);
    CHECK(series(1, 3) == 9.0);

    const auto s = m.slice(1, 3);
    CHECK(s.slots() == 2);
    CHECK(s.first_slot == 1);
    CHECK(s.at(1, 1, 3) == 9);
    CHECK_THROWS_AS(m.slice(2, 4), std::out_of_range);
}

TEST_CASE("seeded streams are reproducible and distinct") {
    SeededRng a(42, "x", 3), b(42, "x", 3), c(42, "y", 3), d(42, "x", 4), e(43, "x", 3);
    std::vector<std::uint64_t> va, vb, vc, vd, ve;
    for (int i = 0; i < 64; ++i) {
        va.push_back(a.next_u64());
        vb.push_back(b.next_u64());
        vc.push_back(c.next_u64());
        vd.push_back(d.next_u64());
        ve.push_back(e.next_u64());
    }
    CHECK(va == vb);
    CHECK(va != vc);
    CHECK(va != vd);
    CHECK(va != ve);
}

TEST_CASE("seeded rng distributions") {
    SeededRng r(5, "dist");
    double sum = 0.0, sq = 0.0;
    std::set<std::int64_t> seen;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        const auto k = r.uniform_int(-2, 2);
        REQUIRE(k >= -2);
        REQUIRE(k <= 2);
        seen.insert(k);
        const double z = r.normal(3.0, 2.0);
        sum += z;
        sq += z * z;
    }
    CHECK(seen.size() == 5);
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(mean == doctest::Approx(3.0).epsilon(0.02));
    CHECK(var == doctest::Approx(4.0).epsilon(0.05));
    CHECK(r.uniform_int(7, 7) == 7);
    CHECK_THROWS_AS(r.uniform_int(3, 2), std::invalid_argument);
}

TEST_CASE("request CSV round trip") {
    testing::Gen g(3);
    RequestMatrix m(3, 4, 5);
    for (std::size_t t = 0; t < 3; ++t) m.set_slot(t, g.counts(4, 5, 30, 0.5));
    m.seed = 99;
    m.first_slot = 250;
    m.extras["generator"] = "test";
    std::stringstream ss;
    write_request_csv(ss, m);
    const auto text = ss.str();
    CHECK(text.rfind("#T=3,U=4,F=5,seed=99\n", 0) == 0);
    CHECK(text.find("t,user,content,count\n") != std::string::npos);
    const auto back = read_request_csv(ss);
    CHECK(back == m);
}

TEST_CASE("request CSV parse errors carry the line number") {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return read_request_csv(in);
    };
    auto line_of = [&](const std::string& text) -> std::size_t {
        try {
            parse(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return 0;
    };
    CHECK(line_of("") == 1);
    CHECK(line_of("#T=1,U=1,F=1,seed=0\n") == 1);  // truncated before the header
    CHECK(line_of("#T=1,U=1\nt,user,content,count\n") == 1);
    CHECK(line_of("#T=1,U=1,F=1,seed=0\nt,user,content,count\n0,0,0\n") == 3);
    CHECK(line_of("#T=1,U=1,F=1,seed=0\nt,user,content,count\n0,0,0,1\n0,0,1,1\n") == 4);
    CHECK(line_of("#T=1,U=1,F=1,seed=0\nt,user,content,count\n0,0,0,-1\n") == 3);
    CHECK(line_of("#T=1,U=1,F=1,seed=0\nt,user,content,count\n0,0,0,1\n0,0,0,2\n") == 4);
    CHECK(line_of("#T=1,U=1,F=1,seed=0\nt,user,content,count\n0,0,0,x\n") == 3);
    CHECK(line_of("#T=1,U=1,F=1,seed=0\nwrong,header\n") == 2);
    try {
        parse("#T=2,U=1,F=1,seed=0\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("truncated") != std::string::npos);
    }
}

TEST_CASE("number formatting round-trips exactly") {
    testing::Gen g(8);
    for (int i = 0; i < 1000; ++i) {
        const double v = g.real(-1e6, 1e6) * (g.coin() ? 1e-9 : 1.0);
        CHECK(detail::parse_double(detail::format_double(v), 0) == v);
    }
}
