#include "edgecache/cachemodel.hpp"

#include <cmath>

namespace edgecache {

namespace {

constexpr double kCapacitySlack = 1e-9;

void check_rows(const Dense<double>& m, std::size_t capacity, const char* tier) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double sum = 0.0;
        for (double v : m.row(r)) {
            if (!(v >= 0.0 && v <= 1.0))
                throw std::invalid_argument(std::string(tier) + " caching probability outside [0,1]");
            sum += v;
        }
        if (sum > static_cast<double>(capacity) + kCapacitySlack)
            throw std::invalid_argument(std::string(tier) + " " + std::to_string(r) + " exceeds capacity " +
                                        std::to_string(capacity));
    }
}

void check_vec(const std::vector<double>& v, std::size_t capacity, const char* tier) {
    double sum = 0.0;
    for (double x : v) {
        if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument(std::string(tier) + " caching probability outside [0,1]");
        sum += x;
    }
    if (sum > static_cast<double>(capacity) + kCapacitySlack)
        throw std::invalid_argument(std::string(tier) + " tier exceeds capacity " + std::to_string(capacity));
}

}  // namespace

void validate_placement(const HetPlacement& p, const Topology& topo) {
    const std::size_t F = topo.num_contents();
    if (p.user_probs.rows() != topo.num_users() || p.user_probs.cols() != F)
        throw std::invalid_argument("user placement must be U x F");
    if (p.bs_probs.rows() != topo.num_bs() || p.bs_probs.cols() != F)
        throw std::invalid_argument("BS placement must be B x F");
    check_rows(p.user_probs, topo.user_capacity(), "user");
    check_rows(p.bs_probs, topo.bs_capacity(), "BS");
}

void validate_placement(const HomPlacement& p, const Topology& topo) {
    if (p.user_probs.size() != topo.num_contents() || p.bs_probs.size() != topo.num_contents())
        throw std::invalid_argument("homogeneous placement vectors must have length F");
    check_vec(p.user_probs, topo.user_capacity(), "user");
    check_vec(p.bs_probs, topo.bs_capacity(), "BS");
}

HetPlacement make_het_placement(Dense<double> user_probs, Dense<double> bs_probs, const Topology& topo) {
    HetPlacement p{std::move(user_probs), std::move(bs_probs)};
    validate_placement(p, topo);
    return p;
}

HomPlacement make_hom_placement(std::vector<double> user_probs, std::vector<double> bs_probs, const Topology& topo) {
    HomPlacement p{std::move(user_probs), std::move(bs_probs)};
    validate_placement(p, topo);
    return p;
}

HetPlacement to_het(const HomPlacement& p, const Topology& topo) {
    const std::size_t F = topo.num_contents();
    HetPlacement h{Dense<double>(topo.num_users(), F), Dense<double>(topo.num_bs(), F)};
    for (std::size_t u = 0; u < topo.num_users(); ++u) std::copy(p.user_probs.begin(), p.user_probs.end(), h.user_probs.row(u).begin());
    for (std::size_t j = 0; j < topo.num_bs(); ++j) std::copy(p.bs_probs.begin(), p.bs_probs.end(), h.bs_probs.row(j).begin());
    return h;
}

AccessProbabilities het_access_probs(const HetPlacement& p, const Topology& topo, std::size_t user,
                                     std::size_t content) {
    if (content >= topo.num_contents()) throw std::out_of_range("content index out of range");
    const std::size_t cell = topo.bs_of(user);
    const auto& a = p.user_probs;
    const auto& eta = p.bs_probs;

    double others_miss = 1.0;  // prod over cell users except the tagged one
    for (std::size_t i = topo.first_user(cell); i < topo.end_user(cell); ++i)
        if (i != user) others_miss *= 1.0 - a(i, content);
    double cell_miss = 1.0;  // prod over all cell users
    for (std::size_t i = topo.first_user(cell); i < topo.end_user(cell); ++i) cell_miss *= 1.0 - a(i, content);
    double other_bs_miss = 1.0;
    double all_bs_miss = 1.0;
    for (std::size_t j = 0; j < topo.num_bs(); ++j) {
        all_bs_miss *= 1.0 - eta(j, content);
        if (j != cell) other_bs_miss *= 1.0 - eta(j, content);
    }

    AccessProbabilities out;
    const double own = a(user, content);
    const double serving = eta(cell, content);
    out.own = own;
    out.d2d = (1.0 - own) * (1.0 - others_miss);
    out.serving_bs = serving * cell_miss;
    out.cluster_bs = (1.0 - serving) * cell_miss * (1.0 - other_bs_miss);
    out.cloud = cell_miss * all_bs_miss;
    out.local = 1.0 - out.cloud;
    return out;
}

AccessProbabilities hom_access_probs(const HomPlacement& p, std::size_t users_per_cell, std::size_t num_bs,
                                     std::size_t content) {
    if (content >= p.user_probs.size() || content >= p.bs_probs.size())
        throw std::out_of_range("content index out of range");
    if (users_per_cell == 0 || num_bs == 0) throw std::invalid_argument("empty cell or cluster");
    const double a = p.user_probs[content];
    const double eta = p.bs_probs[content];
    const double uc = static_cast<double>(users_per_cell);
    const double cell_miss = std::pow(1.0 - a, uc);
    AccessProbabilities out;
    out.own = a;
    out.d2d = (1.0 - a) * (1.0 - std::pow(1.0 - a, uc - 1.0));
    out.serving_bs = cell_miss * eta;
    out.cluster_bs = cell_miss * (1.0 - eta) * (1.0 - std::pow(1.0 - eta, static_cast<double>(num_bs) - 1.0));
    out.cloud = cell_miss * std::pow(1.0 - eta, static_cast<double>(num_bs));
    out.local = 1.0 - out.cloud;
    return out;
}

CostValidation validate_cost_params(const CostParams& c) {
    CostValidation v;
    auto fail = [&](std::string msg) {
        v.ok = false;
        v.violations.push_back(std::move(msg));
    };
    if (!(c.storage >= 0.0) || !(c.comm_d2d >= 0.0) || !(c.comm_serving_bs >= 0.0) || !(c.comm_cluster_bs >= 0.0) ||
        !(c.comm_cloud >= 0.0))
        fail("costs must be non-negative");
    if (!(c.phi_cloud() > c.phi_cluster_bs())) fail("cloud not more expensive than cluster BS");
    if (!(c.phi_cluster_bs() > c.phi_serving_bs())) fail("cluster BS not more expensive than serving BS");
    if (!(c.phi_serving_bs() > c.phi_d2d())) fail("d2d not cheaper than serving BS");
    if (c.derivation) {
        const auto& d = *c.derivation;
        const double derived = d.content_size * d.rate * d.distance;
        if (std::abs(derived - c.comm_d2d) > 1e-9 * std::max(1.0, std::abs(derived)))
            fail("d2d communication cost " + detail::format_double(c.comm_d2d) + " != size*rate*distance " +
                 detail::format_double(derived));
    }
    return v;
}

void require_valid_costs(const CostParams& costs) {
    const auto v = validate_cost_params(costs);
    if (!v.ok) throw std::invalid_argument("invalid cost parameters: " + v.violations.front());
}

double content_cost(const AccessProbabilities& p, const CostParams& c) {
    return c.storage * p.own + c.phi_d2d() * p.d2d + c.phi_serving_bs() * p.serving_bs +
           c.phi_cluster_bs() * p.cluster_bs + c.phi_cloud() * p.cloud;
}

namespace {

/// Closed-form per-request cost given own/serving probabilities and the two
/// miss products.
inline double expanded_cost(double a, double eta, double miss_users, double miss_bs, const CostParams& c) {
    return c.storage * a + c.phi_d2d() * (1.0 - a) -
           miss_users * (c.phi_d2d() - c.phi_serving_bs() * eta - c.phi_cluster_bs() * (1.0 - eta) +
                         miss_bs * (c.phi_cluster_bs() - c.phi_cloud()));
}

/// Weighted mean of `cost(k)` under row weights, shifted by the first
/// supported cost. Zero rows contribute nothing.
template <typename CostFn>
double row_term(std::span<const double> weights, CostFn&& cost) {
    double mass = 0.0;
    for (double w : weights) mass += w;
    if (!(mass > 0.0)) return 0.0;
    double base = 0.0;
    bool have_base = false;
    double acc = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k] == 0.0) continue;
        const double x = cost(k);
        if (!have_base) {
            base = x;
            have_base = true;
        }
        acc += weights[k] * (x - base);
    }
    return base + acc / mass;
}

void check_rho(const Dense<double>& rho, const Topology& topo) {
    if (rho.rows() != topo.num_users() || rho.cols() != topo.num_contents())
        throw std::invalid_argument("preference matrix must be U x F");
}

}  // namespace

double average_cost_het(const HetPlacement& p, const Dense<double>& rho, const Topology& topo,
                        const CostParams& costs) {
    validate_placement(p, topo);
    check_rho(rho, topo);
    const std::size_t F = topo.num_contents();
    std::vector<double> all_bs_miss(F, 1.0);
    for (std::size_t j = 0; j < topo.num_bs(); ++j)
        for (std::size_t k = 0; k < F; ++k) all_bs_miss[k] *= 1.0 - p.bs_probs(j, k);

    double total = 0.0;
    std::vector<double> cell_miss(F);
    for (std::size_t j = 0; j < topo.num_bs(); ++j) {
        std::fill(cell_miss.begin(), cell_miss.end(), 1.0);
        for (std::size_t i = topo.first_user(j); i < topo.end_user(j); ++i)
            for (std::size_t k = 0; k < F; ++k) cell_miss[k] *= 1.0 - p.user_probs(i, k);
        for (std::size_t i = topo.first_user(j); i < topo.end_user(j); ++i) {
            total += row_term(rho.row(i), [&](std::size_t k) {
                return expanded_cost(p.user_probs(i, k), p.bs_probs(j, k), cell_miss[k], all_bs_miss[k], costs);
            });
        }
    }
    return total / static_cast<double>(topo.num_users());
}

double average_cost_het(const HetPlacement& p, const AggregatedPreference& rho, const Topology& topo,
                        const CostParams& costs) {
    return average_cost_het(p, rho.rho, topo, costs);
}

double average_cost_hom(const HomPlacement& p, const Dense<double>& rho, const Topology& topo,
                        const CostParams& costs) {
    validate_placement(p, topo);
    check_rho(rho, topo);
    const std::size_t F = topo.num_contents();
    const double uc = static_cast<double>(topo.users_per_bs());
    const double nb = static_cast<double>(topo.num_bs());
    std::vector<double> per_content(F);
    for (std::size_t k = 0; k < F; ++k) {
        const double b1 = std::pow(1.0 - p.user_probs[k], uc);
        const double b2 = std::pow(1.0 - p.bs_probs[k], nb);
        per_content[k] = expanded_cost(p.user_probs[k], p.bs_probs[k], b1, b2, costs);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < topo.num_users(); ++i)
        total += row_term(rho.row(i), [&](std::size_t k) { return per_content[k]; });
    return total / static_cast<double>(topo.num_users());
}

double average_cost_hom(const HomPlacement& p, const AggregatedPreference& rho, const Topology& topo,
                        const CostParams& costs) {
    return average_cost_hom(p, rho.rho, topo, costs);
}

}  // namespace edgecache
