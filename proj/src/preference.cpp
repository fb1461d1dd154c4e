#include "edgecache/preference.hpp"

#include <ostream>

namespace edgecache {

PreferenceProfile profile_from_counts(const Dense<Count>& counts, std::size_t slot) {
    const std::size_t U = counts.rows(), F = counts.cols();
    PreferenceProfile p{slot, true, std::vector<double>(U, 0.0), Dense<double>(U, F, 0.0), Dense<double>(U, F, 0.0)};
    std::vector<Count> per_user(U, 0);
    Count total = 0;
    for (std::size_t u = 0; u < U; ++u) {
        for (Count n : counts.row(u)) per_user[u] += n;
        total += per_user[u];
    }
    if (total == 0) return p;
    p.empty_slot = false;
    const double q = static_cast<double>(total);
    for (std::size_t u = 0; u < U; ++u) {
        if (per_user[u] == 0) continue;
        const double nu = static_cast<double>(per_user[u]);
        p.activity[u] = nu / q;
        for (std::size_t f = 0; f < F; ++f) {
            const double n = static_cast<double>(counts(u, f));
            p.conditional(u, f) = n / nu;
            // n/q directly equals r_i * q(f|u) and avoids a second rounding.
            p.joint(u, f) = n / q;
        }
    }
    return p;
}

PreferenceProfile profile_from_slot(const RequestMatrix& m, std::size_t t) {
    return profile_from_counts(m.slot_matrix(t), m.first_slot + t);
}

std::vector<double> global_popularity(const PreferenceProfile& profile) {
    const auto& j = profile.joint;
    std::vector<double> pop(j.cols(), 0.0);
    for (std::size_t u = 0; u < j.rows(); ++u)
        for (std::size_t f = 0; f < j.cols(); ++f) pop[f] += j(u, f);
    return pop;
}

AggregatedPreference aggregate_preference(std::span<const PreferenceProfile> profiles) {
    if (profiles.empty()) throw std::invalid_argument("aggregate_preference: empty horizon");
    const std::size_t U = profiles.front().joint.rows(), F = profiles.front().joint.cols();
    AggregatedPreference out{Dense<double>(U, F, 0.0), Dense<double>(U, F, 0.0), profiles.size(),
                             profiles.front().slot};
    for (const auto& p : profiles) {
        if (p.joint.rows() != U || p.joint.cols() != F)
            throw std::invalid_argument("aggregate_preference: inconsistent profile shapes");
        if (p.slot < out.start_slot) out.start_slot = p.slot;
        for (std::size_t i = 0; i < U * F; ++i) out.raw.data()[i] += p.joint.data()[i];
    }
    const double horizon = static_cast<double>(profiles.size());
    for (double& v : out.raw.data()) v /= horizon;
    for (std::size_t u = 0; u < U; ++u) {
        double mass = 0.0;
        for (double v : out.raw.row(u)) mass += v;
        if (mass <= 0.0) continue;
        for (std::size_t f = 0; f < F; ++f) out.rho(u, f) = out.raw(u, f) / mass;
    }
    return out;
}

std::vector<Dense<double>> slot_joints(const RequestMatrix& m) {
    std::vector<Dense<double>> out;
    out.reserve(m.slots());
    for (std::size_t t = 0; t < m.slots(); ++t) out.push_back(profile_from_slot(m, t).joint);
    return out;
}

std::vector<PreferenceProfile> slot_profiles(const RequestMatrix& m) {
    std::vector<PreferenceProfile> out;
    out.reserve(m.slots());
    for (std::size_t t = 0; t < m.slots(); ++t) out.push_back(profile_from_slot(m, t));
    return out;
}

void write_rho_csv(std::ostream& out, const AggregatedPreference& pref) {
    out << "user,content,rho\n";
    for (std::size_t u = 0; u < pref.rho.rows(); ++u)
        for (std::size_t f = 0; f < pref.rho.cols(); ++f)
            if (pref.rho(u, f) != 0.0) out << u << ',' << f << ',' << detail::format_double(pref.rho(u, f)) << '\n';
}

}  // namespace edgecache
