#pragma once

#include <optional>
#include <string>
#include <vector>

#include "edgecache/core.hpp"
#include "edgecache/preference.hpp"

namespace edgecache {

/// Heterogeneous placement: every user and every BS has its own caching
/// probability per content.
struct HetPlacement {
    Dense<double> user_probs;  // U x F, a
    Dense<double> bs_probs;    // B x F, eta
};

/// Homogeneous placement: one probability vector per tier.
struct HomPlacement {
    std::vector<double> user_probs;  // a
    std::vector<double> bs_probs;    // eta
};

/// Checks shapes, [0,1] entries and per-node capacity sums (with a 1e-9
/// slack for averaged schedules). Throws std::invalid_argument.
void validate_placement(const HetPlacement& p, const Topology& topo);
void validate_placement(const HomPlacement& p, const Topology& topo);
HetPlacement make_het_placement(Dense<double> user_probs, Dense<double> bs_probs, const Topology& topo);
HomPlacement make_hom_placement(std::vector<double> user_probs, std::vector<double> bs_probs, const Topology& topo);

/// Expands a homogeneous placement to per-node rows.
HetPlacement to_het(const HomPlacement& p, const Topology& topo);

/// Where a tagged user's request is served from. The first five are
/// disjoint and sum to one; local = 1 - cloud.
struct AccessProbabilities {
    double own = 0.0;
    double d2d = 0.0;
    double serving_bs = 0.0;
    double cluster_bs = 0.0;
    double local = 0.0;
    double cloud = 0.0;
};

AccessProbabilities het_access_probs(const HetPlacement& p, const Topology& topo, std::size_t user,
                                     std::size_t content);
AccessProbabilities hom_access_probs(const HomPlacement& p, std::size_t users_per_cell, std::size_t num_bs,
                                     std::size_t content);

/// Optional inputs for deriving the D2D communication cost from content
/// size, per-unit transmission rate and distance.
struct TransmissionDerivation {
    double content_size = 0.0;
    double rate = 0.0;
    double distance = 0.0;
};

/// Storage cost plus per-tier communication costs. phi_* = comm_* + storage.
struct CostParams {
    double storage = 2000.0;
    double comm_d2d = 100.0;
    double comm_serving_bs = 500.0;
    double comm_cluster_bs = 1000.0;
    double comm_cloud = 5000.0;
    std::optional<TransmissionDerivation> derivation;

    double phi_d2d() const { return comm_d2d + storage; }
    double phi_serving_bs() const { return comm_serving_bs + storage; }
    double phi_cluster_bs() const { return comm_cluster_bs + storage; }
    double phi_cloud() const { return comm_cloud + storage; }
};

struct CostValidation {
    bool ok = true;
    std::vector<std::string> violations;
};

/// Requires cloud > cluster BS > serving BS > D2D retrieval cost, all costs
/// non-negative, and (when given) comm_d2d == size * rate * distance.
CostValidation validate_cost_params(const CostParams& costs);
/// validate_cost_params, throwing on the first violation.
void require_valid_costs(const CostParams& costs);

/// Expected cost of one request given its tier probabilities.
double content_cost(const AccessProbabilities& probs, const CostParams& costs);

/// Cluster-average cost (1/U) sum_i sum_k rho_ik Xi_c(i,k), evaluated through
/// the closed form with A1 = prod_{cell}(1 - a) and A2 = prod_{all BS}(1 - eta).
/// Each nonzero rho row is treated as a distribution: its terms are summed as
/// a weighted mean shifted by the row's first cost, which is exact when all
/// of a user's contents cost the same.
double average_cost_het(const HetPlacement& p, const Dense<double>& rho, const Topology& topo,
                        const CostParams& costs);
double average_cost_het(const HetPlacement& p, const AggregatedPreference& rho, const Topology& topo,
                        const CostParams& costs);

/// Homogeneous counterpart with B1 = (1 - a)^Uc and B2 = (1 - eta)^B.
double average_cost_hom(const HomPlacement& p, const Dense<double>& rho, const Topology& topo,
                        const CostParams& costs);
double average_cost_hom(const HomPlacement& p, const AggregatedPreference& rho, const Topology& topo,
                        const CostParams& costs);

}  // namespace edgecache
