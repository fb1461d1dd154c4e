#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace edgecache {

using Count = std::int64_t;

/// Row-major dense 2-D array. Used for every U x F / B x F table in the
/// library; heavier numerics (the LSTM) use Eigen internally.
template <typename T>
class Dense {
public:
    Dense() = default;
    Dense(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool operator==(const Dense&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

struct TopologyConfig {
    std::size_t num_bs = 3;
    std::size_t users_per_bs = 15;
    std::size_t num_contents = 225;
    std::size_t bs_capacity = 12;
    std::size_t user_capacity = 4;
};

/// A single cluster: B base stations, each serving the same number of users,
/// over a catalog of F equal-sized contents. Users are numbered contiguously
/// per cell, so user i is served by BS i / users_per_bs.
class Topology {
public:
    explicit Topology(const TopologyConfig& cfg);

    std::size_t num_bs() const { return num_bs_; }
    std::size_t users_per_bs() const { return users_per_bs_; }
    std::size_t num_users() const { return num_bs_ * users_per_bs_; }
    std::size_t num_contents() const { return num_contents_; }
    std::size_t bs_capacity() const { return bs_capacity_; }
    std::size_t user_capacity() const { return user_capacity_; }

    std::size_t bs_of(std::size_t user) const;
    std::size_t first_user(std::size_t bs) const { return bs * users_per_bs_; }
    std::size_t end_user(std::size_t bs) const { return (bs + 1) * users_per_bs_; }

    /// Same cluster, different cache sizes.
    Topology with_capacities(std::size_t bs_capacity, std::size_t user_capacity) const;

private:
    std::size_t num_bs_;
    std::size_t users_per_bs_;
    std::size_t num_contents_;
    std::size_t bs_capacity_;
    std::size_t user_capacity_;
};

Topology build_topology(const TopologyConfig& cfg);

/// Time-indexed U x F request counts. Slot indices are local (0..T-1);
/// `first_slot` records the absolute index of local slot 0 so forecasts can
/// carry their position after the history.
class RequestMatrix {
public:
    RequestMatrix() = default;
    RequestMatrix(std::size_t slots, std::size_t users, std::size_t contents);

    std::size_t slots() const { return slots_; }
    std::size_t users() const { return users_; }
    std::size_t contents() const { return contents_; }

    Count& at(std::size_t t, std::size_t u, std::size_t f);
    Count at(std::size_t t, std::size_t u, std::size_t f) const;

    std::span<Count> row(std::size_t t, std::size_t u);
    std::span<const Count> row(std::size_t t, std::size_t u) const;
    std::span<const Count> slot(std::size_t t) const;
    void set_slot(std::size_t t, const Dense<Count>& counts);
    Dense<Count> slot_matrix(std::size_t t) const;

    /// Per-user T x F series as doubles (the forecaster's input layout).
    Dense<double> user_series(std::size_t user, std::size_t begin, std::size_t end) const;

    /// Copy of slots [begin, end).
    RequestMatrix slice(std::size_t begin, std::size_t end) const;

    std::uint64_t seed = 0;
    std::size_t first_slot = 0;
    /// Free-form `# key = value` header lines preserved across a CSV round trip.
    std::map<std::string, std::string> extras;

    bool operator==(const RequestMatrix&) const = default;

private:
    void check(std::size_t t, std::size_t u, std::size_t f) const;

    std::size_t slots_ = 0;
    std::size_t users_ = 0;
    std::size_t contents_ = 0;
    std::vector<Count> counts_;
};

struct SlotTotals {
    std::vector<Count> per_user;
    std::vector<Count> per_content;
    Count total = 0;
};

SlotTotals slot_totals(const RequestMatrix& m, std::size_t t);

/// Reproducible random stream keyed by (seed, stream label, index). Streams
/// with different keys are decorrelated through a splitmix64 finalizer.
class SeededRng {
public:
    SeededRng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

    std::uint64_t next_u64();
    /// Uniform on [0, 1).
    double uniform();
    /// Uniform integer on [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    double normal(double mean, double stddev);

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Thrown by every CSV reader; carries the 1-based line that failed.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// `#T=..,U=..,F=..,seed=..` metadata, then `t,user,content,count` with one
/// row per nonzero entry. `t` is the absolute slot index.
void write_request_csv(std::ostream& out, const RequestMatrix& m);
RequestMatrix read_request_csv(std::istream& in);
void save_request_csv(const std::string& path, const RequestMatrix& m);
RequestMatrix load_request_csv(const std::string& path);

namespace detail {
std::vector<std::string> split(std::string_view s, char sep);
std::string trim(std::string_view s);
std::map<std::string, std::string> parse_meta(std::string_view line, std::size_t lineno);
std::int64_t parse_int(std::string_view s, std::size_t lineno);
double parse_double(std::string_view s, std::size_t lineno);
std::string format_double(double v);
}  // namespace detail

}  // namespace edgecache
