#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edgecache/cachemodel.hpp"
#include "edgecache/core.hpp"

namespace edgecache {

enum class SchemeId { BsFirst, UserFirst, Overlapping, Homogeneous, StaticZipf };

std::string to_string(SchemeId s);
SchemeId parse_scheme(const std::string& s);
std::vector<SchemeId> parse_scheme_list(const std::string& csv);
/// Schemes whose schedules never hold a content at two cluster nodes.
bool is_non_overlapping(SchemeId s);

/// Binary per-slot cache contents for every user and BS.
class IndicatorSchedule {
public:
    IndicatorSchedule() = default;
    IndicatorSchedule(std::size_t slots, std::size_t users, std::size_t num_bs, std::size_t contents);

    std::size_t slots() const { return slots_; }
    std::size_t users() const { return users_; }
    std::size_t num_bs() const { return num_bs_; }
    std::size_t contents() const { return contents_; }

    bool user(std::size_t t, std::size_t u, std::size_t f) const { return user_[(t * users_ + u) * contents_ + f]; }
    bool bs(std::size_t t, std::size_t j, std::size_t f) const { return bs_[(t * num_bs_ + j) * contents_ + f]; }
    void set_user(std::size_t t, std::size_t u, std::size_t f, bool v = true);
    void set_bs(std::size_t t, std::size_t j, std::size_t f, bool v = true);

    std::size_t user_load(std::size_t t, std::size_t u) const;
    std::size_t bs_load(std::size_t t, std::size_t j) const;

    std::size_t first_slot = 0;

    bool operator==(const IndicatorSchedule&) const = default;

private:
    std::size_t slots_ = 0;
    std::size_t users_ = 0;
    std::size_t num_bs_ = 0;
    std::size_t contents_ = 0;
    std::vector<std::uint8_t> user_;
    std::vector<std::uint8_t> bs_;
};

/// Per-slot predicted joint preferences q(u,f), each U x F.
using JointSequence = std::span<const Dense<double>>;

/// BS-first non-overlapping greedy: BSs take contents preferred in every
/// cell, then contents shared by pairs of cells (ranked by cluster
/// popularity); users then take their own preferred contents not cached
/// anywhere; each BS finally tops up with its cell's leftover preferences.
IndicatorSchedule greedy_bs_first(JointSequence joints, const Topology& topo);

/// User-first non-overlapping greedy: users claim their top contents in
/// index order, then each BS takes its cell's most popular unclaimed contents.
IndicatorSchedule greedy_user_first(JointSequence joints, const Topology& topo);

/// Overlapping greedy: every user caches its own top contents (duplicates
/// allowed), spare user capacity is filled from the cell residual ranking,
/// and each BS takes the top residuals, padding with the cell's most popular.
IndicatorSchedule greedy_overlapping(JointSequence joints, const Topology& topo);

/// Homogeneous greedy: all users of a cell cache the cell's top contents;
/// all BSs cache the top of the stacked cell residuals (contents no cell
/// placed at its users) by cluster popularity, padding with the cluster's
/// most popular contents when the residuals run out.
IndicatorSchedule homogeneous_greedy(JointSequence joints, const Topology& topo);

/// Time-invariant placement fitted on aggregate historical counts: users
/// cache ranks 1..C_d, BSs ranks C_d+1..C_d+C_b, identical in every slot.
IndicatorSchedule static_zipf_baseline(const RequestMatrix& history, const Topology& topo, std::size_t horizon);

IndicatorSchedule build_schedule(SchemeId scheme, JointSequence joints, const RequestMatrix& history,
                                 const Topology& topo);

/// Time-average of the indicators.
HetPlacement indicators_to_probabilities(const IndicatorSchedule& sched);
/// The same average collapsed to one vector per tier, when every user row
/// and every BS row agree.
std::optional<HomPlacement> homogeneous_probabilities(const IndicatorSchedule& sched);

/// Invariant checks; each returns an empty string when the schedule passes.
std::string check_capacity(const IndicatorSchedule& sched, const Topology& topo);
std::string check_cluster_uniqueness(const IndicatorSchedule& sched);
std::string check_tier_uniformity(const IndicatorSchedule& sched, const Topology& topo);
std::string check_tier_disjoint(const IndicatorSchedule& sched);

/// `#T=..,U=..,B=..,F=..` metadata, then `t,node_type,node_id,content` with
/// one row per cached item; node_type is `user` or `bs`.
void write_schedule_csv(std::ostream& out, const IndicatorSchedule& sched);
IndicatorSchedule read_schedule_csv(std::istream& in);

/// Contents sorted by descending score, ties by ascending index; only
/// entries with score > 0 are kept.
std::vector<std::size_t> rank_positive(std::span<const double> scores);

}  // namespace edgecache
