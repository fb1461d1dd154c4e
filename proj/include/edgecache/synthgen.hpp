#pragma once

#include <cstdint>
#include <vector>

#include "edgecache/core.hpp"

namespace edgecache {

struct SkewnessRange {
    double gamma_min = 0.5;
    double gamma_max = 1.5;
    void validate() const;
};

struct RequestRange {
    Count n_req_min = 50;
    Count n_req_max = 200;
    void validate() const;
};

/// Sinusoidal drift plus Gaussian noise added to the initial slot:
/// n(t) = n(1) + sum_n A_n sin(n t) + eps(t), eps ~ Normal(mean, var).
struct CorrelationParams {
    std::vector<double> amplitudes{1.0, 1.0, 1.0};
    double noise_mean = 0.0;
    double noise_var = 1.0;
    void validate() const;
};

/// Zipf pmf over ranks 1..F: p[k-1] = k^-gamma / sum_j j^-gamma.
std::vector<double> zipf_pmf(std::size_t num_contents, double gamma);

/// gamma = (max - min) * u + min for a given u in [0, 1).
double skewness_at(const SkewnessRange& range, double u);
double sample_skewness(const SkewnessRange& range, SeededRng& rng);

/// Counts of `variates` falling in each bin of the cumulative pmf; the last
/// bin absorbs anything the rounded cumulative sum leaves past its end.
std::vector<Count> histogram_counts(const std::vector<double>& variates, const std::vector<double>& pmf);

/// Slot-1 user-content matrix. Each user draws, from its own stream
/// ("synth/initial", user): a content permutation, a skewness, a request
/// total, then that many uniforms binned against the cumulative Zipf pmf.
Dense<Count> generate_initial_matrix(const Topology& topo, const SkewnessRange& skew, const RequestRange& reqs,
                                     std::uint64_t seed);

/// Extends `initial` to T slots. Noise is drawn from stream
/// ("synth/noise", user) in slot-major then content order, so a longer
/// extension shares its prefix with a shorter one.
RequestMatrix extend_correlated(const Dense<Count>& initial, std::size_t num_slots, const CorrelationParams& corr,
                                std::uint64_t seed);

/// The drift term sum_n A_n sin(n t) at 1-based slot t.
double sinusoid_drift(const std::vector<double>& amplitudes, std::size_t slot_1based);

struct SynthConfig {
    SkewnessRange skew;
    RequestRange requests;
    CorrelationParams correlation;
    std::size_t num_slots = 300;
};

/// Full generator: initial matrix then correlated extension; the config is
/// recorded in the matrix extras for reproducibility.
RequestMatrix generate_dataset(const Topology& topo, const SynthConfig& cfg, std::uint64_t seed);

/// Rotating-favorite dataset: contents are grouped into `period` blocks of
/// `width` consecutive indices, and in slot t every user requests exactly the
/// block (t + phase) mod period. The seed picks the phase and each user's
/// per-content count, uniform on [burst / 2, burst].
RequestMatrix generate_rotating_dataset(const Topology& topo, std::size_t num_slots, std::size_t period,
                                        std::size_t width, Count burst, std::uint64_t seed);

}  // namespace edgecache
