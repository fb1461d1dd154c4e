#include "edgecache/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace edgecache {

void SkewnessRange::validate() const {
    if (!(gamma_min >= 0.0) || !(gamma_max >= gamma_min) || !std::isfinite(gamma_max))
        throw std::invalid_argument("skewness range must satisfy 0 <= gamma_min <= gamma_max");
}

void RequestRange::validate() const {
    if (n_req_min <= 0 || n_req_max < n_req_min)
        throw std::invalid_argument("request range must satisfy 0 < n_req_min <= n_req_max");
}

void CorrelationParams::validate() const {
    for (double a : amplitudes)
        if (!std::isfinite(a)) throw std::invalid_argument("correlation amplitudes must be finite");
    if (!std::isfinite(noise_mean)) throw std::invalid_argument("noise mean must be finite");
    if (!(noise_var >= 0.0) || !std::isfinite(noise_var)) throw std::invalid_argument("noise variance must be >= 0");
}

std::vector<double> zipf_pmf(std::size_t num_contents, double gamma) {
    if (num_contents == 0) throw std::invalid_argument("zipf_pmf: catalog size must be >= 1");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("zipf_pmf: skewness must be >= 0");
    std::vector<double> p(num_contents);
    for (std::size_t k = 0; k < num_contents; ++k) p[k] = std::pow(static_cast<double>(k + 1), -gamma);
    // Summing smallest-first keeps the normalizer accurate for long tails.
    double norm = 0.0;
    for (std::size_t k = num_contents; k-- > 0;) norm += p[k];
    for (double& v : p) v /= norm;
    return p;
}

double skewness_at(const SkewnessRange& range, double u) {
    range.validate();
    return (range.gamma_max - range.gamma_min) * u + range.gamma_min;
}

double sample_skewness(const SkewnessRange& range, SeededRng& rng) { return skewness_at(range, rng.uniform()); }

std::vector<Count> histogram_counts(const std::vector<double>& variates, const std::vector<double>& pmf) {
    std::vector<double> edges(pmf.size());
    std::partial_sum(pmf.begin(), pmf.end(), edges.begin());
    std::vector<Count> bins(pmf.size(), 0);
    for (double v : variates) {
        auto it = std::upper_bound(edges.begin(), edges.end(), v);
        auto idx = static_cast<std::size_t>(it - edges.begin());
        if (idx >= bins.size()) idx = bins.size() - 1;
        ++bins[idx];
    }
    return bins;
}

Dense<Count> generate_initial_matrix(const Topology& topo, const SkewnessRange& skew, const RequestRange& reqs,
                                     std::uint64_t seed) {
    skew.validate();
    reqs.validate();
    const std::size_t F = topo.num_contents();
    Dense<Count> out(topo.num_users(), F, 0);
    for (std::size_t u = 0; u < topo.num_users(); ++u) {
        SeededRng rng(seed, "synth/initial", u);
        std::vector<std::size_t> order(F);
        std::iota(order.begin(), order.end(), std::size_t{0});
        // Fisher-Yates with our own stream so the permutation is portable.
        for (std::size_t i = F; i > 1; --i) {
            const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
            std::swap(order[i - 1], order[j]);
        }
        const double gamma = sample_skewness(skew, rng);
        const Count total = rng.uniform_int(reqs.n_req_min, reqs.n_req_max);
        std::vector<double> variates(static_cast<std::size_t>(total));
        for (double& v : variates) v = rng.uniform();
        const auto ranked = histogram_counts(variates, zipf_pmf(F, gamma));
        for (std::size_t r = 0; r < F; ++r) out(u, order[r]) = ranked[r];
    }
    return out;
}

double sinusoid_drift(const std::vector<double>& amplitudes, std::size_t slot_1based) {
    double s = 0.0;
    for (std::size_t n = 0; n < amplitudes.size(); ++n)
        s += amplitudes[n] * std::sin(static_cast<double>(n + 1) * static_cast<double>(slot_1based));
    return s;
}

RequestMatrix extend_correlated(const Dense<Count>& initial, std::size_t num_slots, const CorrelationParams& corr,
                                std::uint64_t seed) {
    if (num_slots == 0) throw std::invalid_argument("extend_correlated: need at least one slot");
    corr.validate();
    const std::size_t U = initial.rows(), F = initial.cols();
    RequestMatrix m(num_slots, U, F);
    m.seed = seed;
    m.set_slot(0, initial);
    const double stddev = std::sqrt(corr.noise_var);
    std::vector<double> drift(num_slots, 0.0);
    for (std::size_t t = 1; t < num_slots; ++t) drift[t] = sinusoid_drift(corr.amplitudes, t + 1);
    for (std::size_t u = 0; u < U; ++u) {
        SeededRng rng(seed, "synth/noise", u);
        for (std::size_t t = 1; t < num_slots; ++t) {
            auto row = m.row(t, u);
            for (std::size_t f = 0; f < F; ++f) {
                const double eps = rng.normal(corr.noise_mean, stddev);
                const double v = static_cast<double>(initial(u, f)) + drift[t] + eps;
                row[f] = std::max<Count>(0, std::llround(v));
            }
        }
    }
    return m;
}

RequestMatrix generate_dataset(const Topology& topo, const SynthConfig& cfg, std::uint64_t seed) {
    auto initial = generate_initial_matrix(topo, cfg.skew, cfg.requests, seed);
    auto m = extend_correlated(initial, cfg.num_slots, cfg.correlation, seed);
    std::ostringstream amps;
    for (std::size_t i = 0; i < cfg.correlation.amplitudes.size(); ++i)
        amps << (i ? ";" : "") << detail::format_double(cfg.correlation.amplitudes[i]);
    m.extras["generator"] = "zipf-correlated";
    m.extras["num_bs"] = std::to_string(topo.num_bs());
    m.extras["users_per_bs"] = std::to_string(topo.users_per_bs());
    m.extras["gamma_min"] = detail::format_double(cfg.skew.gamma_min);
    m.extras["gamma_max"] = detail::format_double(cfg.skew.gamma_max);
    m.extras["req_min"] = std::to_string(cfg.requests.n_req_min);
    m.extras["req_max"] = std::to_string(cfg.requests.n_req_max);
    m.extras["amplitudes"] = amps.str();
    m.extras["noise_mean"] = detail::format_double(cfg.correlation.noise_mean);
    m.extras["noise_var"] = detail::format_double(cfg.correlation.noise_var);
    return m;
}

RequestMatrix generate_rotating_dataset(const Topology& topo, std::size_t num_slots, std::size_t period,
                                        std::size_t width, Count burst, std::uint64_t seed) {
    if (period == 0 || width == 0 || period * width > topo.num_contents())
        throw std::invalid_argument("rotation needs period >= 1, width >= 1 and period * width <= F");
    if (burst < 2) throw std::invalid_argument("rotation burst must be >= 2");
    RequestMatrix m(num_slots, topo.num_users(), topo.num_contents());
    m.seed = seed;
    SeededRng rng(seed, "synth/rotating");
    const auto phase = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(period - 1)));
    std::vector<Count> per_user(topo.num_users());
    for (auto& n : per_user) n = rng.uniform_int(burst / 2, burst);
    for (std::size_t t = 0; t < num_slots; ++t) {
        const std::size_t block = (t + phase) % period;
        for (std::size_t u = 0; u < topo.num_users(); ++u)
            for (std::size_t k = 0; k < width; ++k) m.at(t, u, block * width + k) = per_user[u];
    }
    m.extras["generator"] = "rotating";
    m.extras["period"] = std::to_string(period);
    m.extras["width"] = std::to_string(width);
    m.extras["burst"] = std::to_string(burst);
    m.extras["num_bs"] = std::to_string(topo.num_bs());
    m.extras["users_per_bs"] = std::to_string(topo.users_per_bs());
    return m;
}

}  // namespace edgecache
