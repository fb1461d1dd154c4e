#include "edgecache/placement.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace edgecache {

std::string to_string(SchemeId s) {
    switch (s) {
        case SchemeId::BsFirst: return "bs-first";
        case SchemeId::UserFirst: return "user-first";
        case SchemeId::Overlapping: return "overlapping";
        case SchemeId::Homogeneous: return "homogeneous";
        case SchemeId::StaticZipf: return "static-zipf";
    }
    return "?";
}

SchemeId parse_scheme(const std::string& s) {
    for (auto id : {SchemeId::BsFirst, SchemeId::UserFirst, SchemeId::Overlapping, SchemeId::Homogeneous,
                    SchemeId::StaticZipf})
        if (to_string(id) == s) return id;
    throw std::invalid_argument("unknown scheme '" + s + "'");
}

std::vector<SchemeId> parse_scheme_list(const std::string& csv) {
    std::vector<SchemeId> out;
    for (const auto& item : detail::split(csv, ',')) {
        const auto name = detail::trim(item);
        if (!name.empty()) out.push_back(parse_scheme(name));
    }
    return out;
}

bool is_non_overlapping(SchemeId s) { return s == SchemeId::BsFirst || s == SchemeId::UserFirst; }

IndicatorSchedule::IndicatorSchedule(std::size_t slots, std::size_t users, std::size_t num_bs, std::size_t contents)
    : slots_(slots),
      users_(users),
      num_bs_(num_bs),
      contents_(contents),
      user_(slots * users * contents, 0),
      bs_(slots * num_bs * contents, 0) {}

void IndicatorSchedule::set_user(std::size_t t, std::size_t u, std::size_t f, bool v) {
    if (t >= slots_ || u >= users_ || f >= contents_) throw std::out_of_range("schedule user index out of range");
    user_[(t * users_ + u) * contents_ + f] = v;
}

void IndicatorSchedule::set_bs(std::size_t t, std::size_t j, std::size_t f, bool v) {
    if (t >= slots_ || j >= num_bs_ || f >= contents_) throw std::out_of_range("schedule BS index out of range");
    bs_[(t * num_bs_ + j) * contents_ + f] = v;
}

std::size_t IndicatorSchedule::user_load(std::size_t t, std::size_t u) const {
    const auto* p = user_.data() + (t * users_ + u) * contents_;
    return static_cast<std::size_t>(std::count(p, p + contents_, std::uint8_t{1}));
}

std::size_t IndicatorSchedule::bs_load(std::size_t t, std::size_t j) const {
    const auto* p = bs_.data() + (t * num_bs_ + j) * contents_;
    return static_cast<std::size_t>(std::count(p, p + contents_, std::uint8_t{1}));
}

std::vector<std::size_t> rank_positive(std::span<const double> scores) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < scores.size(); ++k)
        if (scores[k] > 0.0) idx.push_back(k);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return idx;
}

namespace {

/// One slot's cache contents while a scheme is being built.
struct SlotCaches {
    SlotCaches(const Topology& topo)
        : topo(topo),
          user(topo.num_users(), topo.num_contents(), 0),
          bs(topo.num_bs(), topo.num_contents(), 0),
          user_load(topo.num_users(), 0),
          bs_load(topo.num_bs(), 0),
          anywhere(topo.num_contents(), 0) {}

    bool user_full(std::size_t u) const { return user_load[u] >= topo.user_capacity(); }
    bool bs_full(std::size_t j) const { return bs_load[j] >= topo.bs_capacity(); }

    bool put_user(std::size_t u, std::size_t f) {
        if (user_full(u) || user(u, f)) return false;
        user(u, f) = 1;
        ++user_load[u];
        anywhere[f] = 1;
        return true;
    }
    bool put_bs(std::size_t j, std::size_t f) {
        if (bs_full(j) || bs(j, f)) return false;
        bs(j, f) = 1;
        ++bs_load[j];
        anywhere[f] = 1;
        return true;
    }

    void commit(IndicatorSchedule& s, std::size_t t) const {
        for (std::size_t u = 0; u < user.rows(); ++u)
            for (std::size_t f = 0; f < user.cols(); ++f)
                if (user(u, f)) s.set_user(t, u, f);
        for (std::size_t j = 0; j < bs.rows(); ++j)
            for (std::size_t f = 0; f < bs.cols(); ++f)
                if (bs(j, f)) s.set_bs(t, j, f);
    }

    const Topology& topo;
    Dense<std::uint8_t> user;
    Dense<std::uint8_t> bs;
    std::vector<std::size_t> user_load;
    std::vector<std::size_t> bs_load;
    std::vector<std::uint8_t> anywhere;
};

void check_joints(JointSequence joints, const Topology& topo) {
    for (const auto& j : joints)
        if (j.rows() != topo.num_users() || j.cols() != topo.num_contents())
            throw std::invalid_argument("predicted joint matrix must be U x F");
}

/// Omega^c: sum of the cell's joint preferences per content.
std::vector<double> cell_popularity(const Dense<double>& joint, const Topology& topo, std::size_t cell) {
    std::vector<double> pop(topo.num_contents(), 0.0);
    for (std::size_t u = topo.first_user(cell); u < topo.end_user(cell); ++u)
        for (std::size_t f = 0; f < pop.size(); ++f) pop[f] += joint(u, f);
    return pop;
}

std::vector<double> cluster_popularity(const Dense<double>& joint) {
    std::vector<double> pop(joint.cols(), 0.0);
    for (std::size_t u = 0; u < joint.rows(); ++u)
        for (std::size_t f = 0; f < pop.size(); ++f) pop[f] += joint(u, f);
    return pop;
}

/// Keeps the members of `ranking` for which `keep` holds, order preserved.
template <typename Pred>
std::vector<std::size_t> filtered(const std::vector<std::size_t>& ranking, Pred keep) {
    std::vector<std::size_t> out;
    for (auto f : ranking)
        if (keep(f)) out.push_back(f);
    return out;
}

template <typename SlotFn>
IndicatorSchedule per_slot(JointSequence joints, const Topology& topo, SlotFn&& fn) {
    check_joints(joints, topo);
    IndicatorSchedule sched(joints.size(), topo.num_users(), topo.num_bs(), topo.num_contents());
    for (std::size_t t = 0; t < joints.size(); ++t) {
        SlotCaches caches(topo);
        fn(joints[t], caches);
        caches.commit(sched, t);
    }
    return sched;
}

}  // namespace

IndicatorSchedule greedy_bs_first(JointSequence joints, const Topology& topo) {
    return per_slot(joints, topo, [&](const Dense<double>& joint, SlotCaches& c) {
        const std::size_t B = topo.num_bs();
        std::vector<std::vector<double>> cell_pop(B);
        for (std::size_t j = 0; j < B; ++j) cell_pop[j] = cell_popularity(joint, topo, j);
        const auto by_pop = rank_positive(cluster_popularity(joint));
        auto preferred_in = [&](std::size_t j, std::size_t f) { return cell_pop[j][f] > 0.0; };
        auto common_all = [&](std::size_t f) {
            for (std::size_t j = 0; j < B; ++j)
                if (!preferred_in(j, f)) return false;
            return true;
        };
        auto common_pair = [&](std::size_t j, std::size_t f) {
            if (!preferred_in(j, f)) return false;
            for (std::size_t other = 0; other < B; ++other)
                if (other != j && preferred_in(other, f)) return true;
            return false;
        };

        for (std::size_t j = 0; j < B; ++j) {
            for (auto f : by_pop)
                if (!c.anywhere[f] && common_all(f)) c.put_bs(j, f);
            for (auto f : by_pop)
                if (!c.anywhere[f] && common_pair(j, f)) c.put_bs(j, f);
        }

        for (std::size_t j = 0; j < B; ++j) {
            for (std::size_t u = topo.first_user(j); u < topo.end_user(j); ++u)
                for (auto f : rank_positive(joint.row(u))) {
                    if (c.user_full(u)) break;
                    if (!c.anywhere[f]) c.put_user(u, f);
                }
            for (auto f : rank_positive(cell_pop[j])) {
                if (c.bs_full(j)) break;
                if (!c.anywhere[f]) c.put_bs(j, f);
            }
        }
    });
}

IndicatorSchedule greedy_user_first(JointSequence joints, const Topology& topo) {
    return per_slot(joints, topo, [&](const Dense<double>& joint, SlotCaches& c) {
        for (std::size_t u = 0; u < topo.num_users(); ++u)
            for (auto f : rank_positive(joint.row(u))) {
                if (c.user_full(u)) break;
                if (!c.anywhere[f]) c.put_user(u, f);
            }
        for (std::size_t j = 0; j < topo.num_bs(); ++j)
            for (auto f : rank_positive(cell_popularity(joint, topo, j))) {
                if (c.bs_full(j)) break;
                if (!c.anywhere[f]) c.put_bs(j, f);
            }
    });
}

IndicatorSchedule greedy_overlapping(JointSequence joints, const Topology& topo) {
    const std::size_t cd = topo.user_capacity();
    return per_slot(joints, topo, [&](const Dense<double>& joint, SlotCaches& c) {
        for (std::size_t j = 0; j < topo.num_bs(); ++j) {
            const auto pop = cell_popularity(joint, topo, j);
            const auto cell_ranking = rank_positive(pop);
            std::vector<std::uint8_t> covered(topo.num_contents(), 0), in_rest(topo.num_contents(), 0);
            std::vector<std::size_t> with_space;
            std::size_t total_avail = 0;

            for (std::size_t u = topo.first_user(j); u < topo.end_user(j); ++u) {
                const auto pref = rank_positive(joint.row(u));
                const std::size_t keep = std::min(cd, pref.size());
                for (std::size_t r = 0; r < keep; ++r) {
                    c.put_user(u, pref[r]);
                    covered[pref[r]] = 1;
                }
                for (std::size_t r = keep; r < pref.size(); ++r) in_rest[pref[r]] = 1;
                if (pref.size() < cd) {
                    with_space.push_back(u);
                    total_avail += cd - pref.size();
                }
            }

            // Residuals no cell user holds, by cell popularity.
            std::vector<std::size_t> rest_up;
            for (auto f : cell_ranking)
                if (in_rest[f] && !covered[f]) rest_up.push_back(f);
            const bool checksum = rest_up.size() > total_avail;

            std::size_t next = 0;
            for (auto u : with_space)
                while (!c.user_full(u) && next < rest_up.size()) c.put_user(u, rest_up[next++]);
            rest_up.erase(rest_up.begin(), rest_up.begin() + static_cast<std::ptrdiff_t>(next));

            if (!checksum)
                for (auto u : with_space)
                    for (auto f : cell_ranking) {
                        if (c.user_full(u)) break;
                        c.put_user(u, f);
                    }

            for (auto f : rest_up) {
                if (c.bs_full(j)) break;
                c.put_bs(j, f);
            }
            for (auto f : cell_ranking) {
                if (c.bs_full(j)) break;
                c.put_bs(j, f);
            }
        }
    });
}

IndicatorSchedule homogeneous_greedy(JointSequence joints, const Topology& topo) {
    const std::size_t cd = topo.user_capacity();
    return per_slot(joints, topo, [&](const Dense<double>& joint, SlotCaches& c) {
        std::vector<std::uint8_t> residual(topo.num_contents(), 0);
        for (std::size_t j = 0; j < topo.num_bs(); ++j) {
            const auto ranking = rank_positive(cell_popularity(joint, topo, j));
            const std::size_t keep = std::min(cd, ranking.size());
            for (std::size_t u = topo.first_user(j); u < topo.end_user(j); ++u)
                for (std::size_t r = 0; r < keep; ++r) c.put_user(u, ranking[r]);
            for (std::size_t r = keep; r < ranking.size(); ++r) residual[ranking[r]] = 1;
        }
        // A content some cell already holds at its users is not residual.
        for (std::size_t f = 0; f < residual.size(); ++f)
            if (c.anywhere[f]) residual[f] = 0;
        const auto cluster_ranking = rank_positive(cluster_popularity(joint));
        std::vector<std::size_t> chosen;
        for (auto f : cluster_ranking)
            if (residual[f] && chosen.size() < topo.bs_capacity()) chosen.push_back(f);
        for (auto f : cluster_ranking) {
            if (chosen.size() >= topo.bs_capacity()) break;
            if (!residual[f]) chosen.push_back(f);
        }
        for (std::size_t j = 0; j < topo.num_bs(); ++j)
            for (auto f : chosen) c.put_bs(j, f);
    });
}

IndicatorSchedule static_zipf_baseline(const RequestMatrix& history, const Topology& topo, std::size_t horizon) {
    if (history.slots() == 0) throw std::invalid_argument("static baseline needs a non-empty history");
    if (history.users() != topo.num_users() || history.contents() != topo.num_contents())
        throw std::invalid_argument("history dimensions do not match the topology");
    const std::size_t F = topo.num_contents();
    std::vector<Count> totals(F, 0);
    for (std::size_t t = 0; t < history.slots(); ++t)
        for (std::size_t u = 0; u < history.users(); ++u) {
            const auto row = history.row(t, u);
            for (std::size_t f = 0; f < F; ++f) totals[f] += row[f];
        }
    std::vector<std::size_t> order(F);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return totals[a] > totals[b]; });

    const std::size_t cd = std::min(topo.user_capacity(), F);
    const std::size_t cb = std::min(topo.bs_capacity(), F - cd);
    IndicatorSchedule sched(horizon, topo.num_users(), topo.num_bs(), F);
    for (std::size_t t = 0; t < horizon; ++t) {
        for (std::size_t u = 0; u < topo.num_users(); ++u)
            for (std::size_t r = 0; r < cd; ++r) sched.set_user(t, u, order[r]);
        for (std::size_t j = 0; j < topo.num_bs(); ++j)
            for (std::size_t r = cd; r < cd + cb; ++r) sched.set_bs(t, j, order[r]);
    }
    return sched;
}

IndicatorSchedule build_schedule(SchemeId scheme, JointSequence joints, const RequestMatrix& history,
                                 const Topology& topo) {
    switch (scheme) {
        case SchemeId::BsFirst: return greedy_bs_first(joints, topo);
        case SchemeId::UserFirst: return greedy_user_first(joints, topo);
        case SchemeId::Overlapping: return greedy_overlapping(joints, topo);
        case SchemeId::Homogeneous: return homogeneous_greedy(joints, topo);
        case SchemeId::StaticZipf: return static_zipf_baseline(history, topo, joints.size());
    }
    throw std::invalid_argument("unknown scheme");
}

HetPlacement indicators_to_probabilities(const IndicatorSchedule& sched) {
    if (sched.slots() == 0) throw std::invalid_argument("cannot average an empty schedule");
    const std::size_t F = sched.contents();
    HetPlacement p{Dense<double>(sched.users(), F), Dense<double>(sched.num_bs(), F)};
    // Integer tallies first so that full-horizon entries are exactly 1.
    for (std::size_t u = 0; u < sched.users(); ++u)
        for (std::size_t f = 0; f < F; ++f) {
            std::size_t n = 0;
            for (std::size_t t = 0; t < sched.slots(); ++t) n += sched.user(t, u, f);
            p.user_probs(u, f) = static_cast<double>(n) / static_cast<double>(sched.slots());
        }
    for (std::size_t j = 0; j < sched.num_bs(); ++j)
        for (std::size_t f = 0; f < F; ++f) {
            std::size_t n = 0;
            for (std::size_t t = 0; t < sched.slots(); ++t) n += sched.bs(t, j, f);
            p.bs_probs(j, f) = static_cast<double>(n) / static_cast<double>(sched.slots());
        }
    return p;
}

std::optional<HomPlacement> homogeneous_probabilities(const IndicatorSchedule& sched) {
    const auto het = indicators_to_probabilities(sched);
    auto uniform_rows = [](const Dense<double>& m) {
        for (std::size_t r = 1; r < m.rows(); ++r)
            if (!std::equal(m.row(r).begin(), m.row(r).end(), m.row(0).begin())) return false;
        return m.rows() > 0;
    };
    if (!uniform_rows(het.user_probs) || !uniform_rows(het.bs_probs)) return std::nullopt;
    const auto a = het.user_probs.row(0);
    const auto eta = het.bs_probs.row(0);
    return HomPlacement{{a.begin(), a.end()}, {eta.begin(), eta.end()}};
}

std::string check_capacity(const IndicatorSchedule& sched, const Topology& topo) {
    if (sched.users() != topo.num_users() || sched.num_bs() != topo.num_bs() ||
        sched.contents() != topo.num_contents())
        return "schedule dimensions do not match the topology";
    for (std::size_t t = 0; t < sched.slots(); ++t) {
        for (std::size_t u = 0; u < sched.users(); ++u)
            if (sched.user_load(t, u) > topo.user_capacity())
                return "slot " + std::to_string(t) + ": user " + std::to_string(u) + " holds " +
                       std::to_string(sched.user_load(t, u)) + " > C_d";
        for (std::size_t j = 0; j < sched.num_bs(); ++j)
            if (sched.bs_load(t, j) > topo.bs_capacity())
                return "slot " + std::to_string(t) + ": BS " + std::to_string(j) + " holds " +
                       std::to_string(sched.bs_load(t, j)) + " > C_b";
    }
    return {};
}

std::string check_cluster_uniqueness(const IndicatorSchedule& sched) {
    for (std::size_t t = 0; t < sched.slots(); ++t)
        for (std::size_t f = 0; f < sched.contents(); ++f) {
            std::size_t copies = 0;
            for (std::size_t u = 0; u < sched.users(); ++u) copies += sched.user(t, u, f);
            for (std::size_t j = 0; j < sched.num_bs(); ++j) copies += sched.bs(t, j, f);
            if (copies > 1)
                return "slot " + std::to_string(t) + ": content " + std::to_string(f) + " stored " +
                       std::to_string(copies) + " times";
        }
    return {};
}

std::string check_tier_uniformity(const IndicatorSchedule& sched, const Topology& topo) {
    for (std::size_t t = 0; t < sched.slots(); ++t)
        for (std::size_t f = 0; f < sched.contents(); ++f) {
            for (std::size_t j = 0; j < topo.num_bs(); ++j) {
                const bool lead = sched.user(t, topo.first_user(j), f);
                for (std::size_t u = topo.first_user(j) + 1; u < topo.end_user(j); ++u)
                    if (sched.user(t, u, f) != lead)
                        return "slot " + std::to_string(t) + ": users of cell " + std::to_string(j) +
                               " disagree on content " + std::to_string(f);
            }
            for (std::size_t j = 1; j < sched.num_bs(); ++j)
                if (sched.bs(t, j, f) != sched.bs(t, 0, f))
                    return "slot " + std::to_string(t) + ": BSs disagree on content " + std::to_string(f);
        }
    return {};
}

std::string check_tier_disjoint(const IndicatorSchedule& sched) {
    for (std::size_t t = 0; t < sched.slots(); ++t)
        for (std::size_t f = 0; f < sched.contents(); ++f) {
            bool at_user = false, at_bs = false;
            for (std::size_t u = 0; u < sched.users() && !at_user; ++u) at_user = sched.user(t, u, f);
            for (std::size_t j = 0; j < sched.num_bs() && !at_bs; ++j) at_bs = sched.bs(t, j, f);
            if (at_user && at_bs)
                return "slot " + std::to_string(t) + ": content " + std::to_string(f) + " cached in both tiers";
        }
    return {};
}

namespace {
constexpr const char* kScheduleHeader = "t,node_type,node_id,content";
}

void write_schedule_csv(std::ostream& out, const IndicatorSchedule& sched) {
    out << "#T=" << sched.slots() << ",U=" << sched.users() << ",B=" << sched.num_bs() << ",F=" << sched.contents()
        << '\n';
    if (sched.first_slot != 0) out << "# first_slot = " << sched.first_slot << '\n';
    out << kScheduleHeader << '\n';
    for (std::size_t t = 0; t < sched.slots(); ++t) {
        const std::size_t abs_t = t + sched.first_slot;
        for (std::size_t u = 0; u < sched.users(); ++u)
            for (std::size_t f = 0; f < sched.contents(); ++f)
                if (sched.user(t, u, f)) out << abs_t << ",user," << u << ',' << f << '\n';
        for (std::size_t j = 0; j < sched.num_bs(); ++j)
            for (std::size_t f = 0; f < sched.contents(); ++f)
                if (sched.bs(t, j, f)) out << abs_t << ",bs," << j << ',' << f << '\n';
    }
}

IndicatorSchedule read_schedule_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) throw ParseError(lineno, "empty file");
    const auto meta = detail::parse_meta(line, lineno);
    auto need = [&](const char* key) {
        const auto it = meta.find(key);
        if (it == meta.end()) throw ParseError(lineno, std::string("metadata missing '") + key + "'");
        const auto v = detail::parse_int(it->second, lineno);
        if (v < 0) throw ParseError(lineno, "negative dimension");
        return static_cast<std::size_t>(v);
    };
    const auto T = need("T"), U = need("U"), B = need("B"), F = need("F");
    IndicatorSchedule sched(T, U, B, F);

    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header_seen) {
            if (!line.empty() && line.front() == '#') {
                const auto eq = line.find('=');
                if (eq == std::string::npos) throw ParseError(lineno, "malformed header comment");
                const auto key = detail::trim(std::string_view(line).substr(1, eq - 1));
                if (key == "first_slot")
                    sched.first_slot = static_cast<std::size_t>(
                        detail::parse_int(detail::trim(std::string_view(line).substr(eq + 1)), lineno));
                continue;
            }
            if (detail::trim(line) != kScheduleHeader)
                throw ParseError(lineno, "expected header '" + std::string(kScheduleHeader) + "'");
            header_seen = true;
            continue;
        }
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split(line, ',');
        if (fields.size() != 4) throw ParseError(lineno, "expected 4 fields, got " + std::to_string(fields.size()));
        const auto t = detail::parse_int(fields[0], lineno) - static_cast<std::int64_t>(sched.first_slot);
        const auto type = detail::trim(fields[1]);
        const auto node = detail::parse_int(fields[2], lineno);
        const auto f = detail::parse_int(fields[3], lineno);
        if (t < 0 || static_cast<std::size_t>(t) >= T || node < 0 || f < 0 || static_cast<std::size_t>(f) >= F)
            throw ParseError(lineno, "index out of range");
        const auto ut = static_cast<std::size_t>(t), un = static_cast<std::size_t>(node),
                   uf = static_cast<std::size_t>(f);
        if (type == "user") {
            if (un >= U) throw ParseError(lineno, "user index out of range");
            if (sched.user(ut, un, uf)) throw ParseError(lineno, "duplicate entry");
            sched.set_user(ut, un, uf);
        } else if (type == "bs") {
            if (un >= B) throw ParseError(lineno, "BS index out of range");
            if (sched.bs(ut, un, uf)) throw ParseError(lineno, "duplicate entry");
            sched.set_bs(ut, un, uf);
        } else {
            throw ParseError(lineno, "unknown node type '" + type + "'");
        }
    }
    if (!header_seen) throw ParseError(lineno, "missing column header (truncated file?)");
    return sched;
}

}  // namespace edgecache
