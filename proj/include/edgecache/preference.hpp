#pragma once

#include <span>
#include <vector>

#include "edgecache/core.hpp"

namespace edgecache {

/// Per-slot request probabilities: activity levels r_i, conditional
/// preferences q(f|u) and joint probabilities q(u,f) = r_i q(f|u).
/// Users with no requests keep all-zero rows.
struct PreferenceProfile {
    std::size_t slot = 0;
    bool empty_slot = true;
    std::vector<double> activity;
    Dense<double> conditional;
    Dense<double> joint;
};

/// Preference averaged over the optimization horizon. `rho` has each nonzero
/// user row normalized to sum to one; `raw` keeps the plain average.
struct AggregatedPreference {
    Dense<double> rho;
    Dense<double> raw;
    std::size_t horizon = 0;
    std::size_t start_slot = 0;
};

PreferenceProfile profile_from_counts(const Dense<Count>& counts, std::size_t slot = 0);
PreferenceProfile profile_from_slot(const RequestMatrix& m, std::size_t t);

/// Column sums of the joint matrix.
std::vector<double> global_popularity(const PreferenceProfile& profile);

AggregatedPreference aggregate_preference(std::span<const PreferenceProfile> profiles);

/// Joint matrices of every slot in `m`, in slot order.
std::vector<Dense<double>> slot_joints(const RequestMatrix& m);
std::vector<PreferenceProfile> slot_profiles(const RequestMatrix& m);

/// `user,content,rho` rows for nonzero entries.
void write_rho_csv(std::ostream& out, const AggregatedPreference& pref);

}  // namespace edgecache
