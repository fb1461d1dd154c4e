#include "edgecache/core.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace edgecache {

Topology::Topology(const TopologyConfig& cfg)
    : num_bs_(cfg.num_bs),
      users_per_bs_(cfg.users_per_bs),
      num_contents_(cfg.num_contents),
      bs_capacity_(cfg.bs_capacity),
      user_capacity_(cfg.user_capacity) {
    if (num_bs_ == 0) throw std::invalid_argument("topology needs at least one base station");
    if (users_per_bs_ == 0) throw std::invalid_argument("topology needs at least one user per base station");
    if (num_contents_ == 0) throw std::invalid_argument("topology needs a non-empty catalog");
    if (bs_capacity_ > num_contents_)
        throw std::invalid_argument("BS capacity " + std::to_string(bs_capacity_) + " exceeds catalog size " +
                                    std::to_string(num_contents_));
    if (user_capacity_ > num_contents_)
        throw std::invalid_argument("user capacity " + std::to_string(user_capacity_) + " exceeds catalog size " +
                                    std::to_string(num_contents_));
}

std::size_t Topology::bs_of(std::size_t user) const {
    if (user >= num_users()) throw std::out_of_range("user index " + std::to_string(user) + " out of range");
    return user / users_per_bs_;
}

Topology Topology::with_capacities(std::size_t bs_capacity, std::size_t user_capacity) const {
    return Topology({num_bs_, users_per_bs_, num_contents_, bs_capacity, user_capacity});
}

Topology build_topology(const TopologyConfig& cfg) { return Topology(cfg); }

RequestMatrix::RequestMatrix(std::size_t slots, std::size_t users, std::size_t contents)
    : slots_(slots), users_(users), contents_(contents), counts_(slots * users * contents, 0) {}

void RequestMatrix::check(std::size_t t, std::size_t u, std::size_t f) const {
    if (t >= slots_ || u >= users_ || f >= contents_)
        throw std::out_of_range("request matrix index (" + std::to_string(t) + "," + std::to_string(u) + "," +
                                std::to_string(f) + ") out of range");
}

Count& RequestMatrix::at(std::size_t t, std::size_t u, std::size_t f) {
    check(t, u, f);
    return counts_[(t * users_ + u) * contents_ + f];
}

Count RequestMatrix::at(std::size_t t, std::size_t u, std::size_t f) const {
    check(t, u, f);
    return counts_[(t * users_ + u) * contents_ + f];
}

std::span<Count> RequestMatrix::row(std::size_t t, std::size_t u) {
    check(t, u, 0);
    return {counts_.data() + (t * users_ + u) * contents_, contents_};
}

std::span<const Count> RequestMatrix::row(std::size_t t, std::size_t u) const {
    check(t, u, 0);
    return {counts_.data() + (t * users_ + u) * contents_, contents_};
}

std::span<const Count> RequestMatrix::slot(std::size_t t) const {
    if (t >= slots_) throw std::out_of_range("slot index " + std::to_string(t) + " out of range");
    return {counts_.data() + t * users_ * contents_, users_ * contents_};
}

void RequestMatrix::set_slot(std::size_t t, const Dense<Count>& counts) {
    if (t >= slots_) throw std::out_of_range("slot index " + std::to_string(t) + " out of range");
    if (counts.rows() != users_ || counts.cols() != contents_)
        throw std::invalid_argument("slot matrix shape mismatch");
    std::copy(counts.data().begin(), counts.data().end(), counts_.begin() + t * users_ * contents_);
}

Dense<Count> RequestMatrix::slot_matrix(std::size_t t) const {
    auto s = slot(t);
    Dense<Count> out(users_, contents_);
    std::copy(s.begin(), s.end(), out.data().begin());
    return out;
}

Dense<double> RequestMatrix::user_series(std::size_t user, std::size_t begin, std::size_t end) const {
    if (begin > end || end > slots_) throw std::out_of_range("series range out of range");
    Dense<double> out(end - begin, contents_);
    for (std::size_t t = begin; t < end; ++t) {
        auto r = row(t, user);
        for (std::size_t f = 0; f < contents_; ++f) out(t - begin, f) = static_cast<double>(r[f]);
    }
    return out;
}

RequestMatrix RequestMatrix::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > slots_) throw std::out_of_range("slice range out of range");
    RequestMatrix out(end - begin, users_, contents_);
    const std::size_t stride = users_ * contents_;
    std::copy(counts_.begin() + begin * stride, counts_.begin() + end * stride, out.counts_.begin());
    out.seed = seed;
    out.first_slot = first_slot + begin;
    out.extras = extras;
    return out;
}

SlotTotals slot_totals(const RequestMatrix& m, std::size_t t) {
    auto s = m.slot(t);
    SlotTotals out{std::vector<Count>(m.users(), 0), std::vector<Count>(m.contents(), 0), 0};
    for (std::size_t u = 0; u < m.users(); ++u) {
        for (std::size_t f = 0; f < m.contents(); ++f) {
            const Count n = s[u * m.contents() + f];
            out.per_user[u] += n;
            out.per_content[f] += n;
        }
        out.total += out.per_user[u];
    }
    return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed, std::string_view stream, std::uint64_t index)
    : state_(splitmix64(splitmix64(seed) ^ fnv1a(stream)) ^ splitmix64(index + 0x632be59bd9b4e019ULL)) {}

std::uint64_t SeededRng::next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double SeededRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::int64_t SeededRng::uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next_u64());
    // Rejection keeps the draw unbiased for spans that do not divide 2^64.
    const std::uint64_t limit = (~std::uint64_t{0} / span) * span;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
}

double SeededRng::normal(double mean, double stddev) {
    if (have_spare_) {
        have_spare_ = false;
        return mean + stddev * spare_;
    }
    double u1;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return mean + stddev * r * std::cos(theta);
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace detail {

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::map<std::string, std::string> parse_meta(std::string_view line, std::size_t lineno) {
    if (line.empty() || line.front() != '#') throw ParseError(lineno, "expected '#' metadata line");
    std::map<std::string, std::string> out;
    for (const auto& item : split(line.substr(1), ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ParseError(lineno, "malformed metadata item '" + item + "'");
        out[trim(std::string_view(item).substr(0, eq))] = trim(std::string_view(item).substr(eq + 1));
    }
    return out;
}

std::int64_t parse_int(std::string_view s, std::size_t lineno) {
    const std::string t = trim(s);
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
        throw ParseError(lineno, "expected integer, got '" + t + "'");
    return v;
}

double parse_double(std::string_view s, std::size_t lineno) {
    const std::string t = trim(s);
    double v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty())
        throw ParseError(lineno, "expected number, got '" + t + "'");
    return v;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace detail

namespace {
constexpr std::string_view kRequestHeader = "t,user,content,count";
}

void write_request_csv(std::ostream& out, const RequestMatrix& m) {
    out << "#T=" << m.slots() << ",U=" << m.users() << ",F=" << m.contents() << ",seed=" << m.seed << '\n';
    if (m.first_slot != 0) out << "# first_slot = " << m.first_slot << '\n';
    for (const auto& [k, v] : m.extras) out << "# " << k << " = " << v << '\n';
    out << kRequestHeader << '\n';
    for (std::size_t t = 0; t < m.slots(); ++t)
        for (std::size_t u = 0; u < m.users(); ++u) {
            auto r = m.row(t, u);
            for (std::size_t f = 0; f < m.contents(); ++f)
                if (r[f] != 0) out << (t + m.first_slot) << ',' << u << ',' << f << ',' << r[f] << '\n';
        }
}

RequestMatrix read_request_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) throw ParseError(lineno, "empty file");
    const auto meta = detail::parse_meta(line, lineno);
    auto need = [&](const char* key) {
        const auto it = meta.find(key);
        if (it == meta.end()) throw ParseError(lineno, std::string("metadata missing '") + key + "'");
        return detail::parse_int(it->second, lineno);
    };
    const auto T = need("T"), U = need("U"), F = need("F"), seed = need("seed");
    if (T < 0 || U < 0 || F < 0) throw ParseError(lineno, "negative dimension");
    RequestMatrix m(static_cast<std::size_t>(T), static_cast<std::size_t>(U), static_cast<std::size_t>(F));
    m.seed = static_cast<std::uint64_t>(seed);

    bool header_seen = false;
    Dense<std::uint8_t> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header_seen) {
            if (!line.empty() && line.front() == '#') {
                const auto eq = line.find('=');
                if (eq == std::string::npos) throw ParseError(lineno, "malformed header comment");
                const auto key = detail::trim(std::string_view(line).substr(1, eq - 1));
                const auto value = detail::trim(std::string_view(line).substr(eq + 1));
                if (key == "first_slot")
                    m.first_slot = static_cast<std::size_t>(detail::parse_int(value, lineno));
                else
                    m.extras[key] = value;
                continue;
            }
            if (detail::trim(line) != kRequestHeader)
                throw ParseError(lineno, "expected header '" + std::string(kRequestHeader) + "'");
            header_seen = true;
            seen = Dense<std::uint8_t>(static_cast<std::size_t>(T * U), static_cast<std::size_t>(F), 0);
            continue;
        }
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split(line, ',');
        if (fields.size() != 4) throw ParseError(lineno, "expected 4 fields, got " + std::to_string(fields.size()));
        const auto t = detail::parse_int(fields[0], lineno) - static_cast<std::int64_t>(m.first_slot);
        const auto u = detail::parse_int(fields[1], lineno);
        const auto f = detail::parse_int(fields[2], lineno);
        const auto n = detail::parse_int(fields[3], lineno);
        if (t < 0 || t >= T || u < 0 || u >= U || f < 0 || f >= F) throw ParseError(lineno, "index out of range");
        if (n < 0) throw ParseError(lineno, "negative count");
        auto& flag = seen(static_cast<std::size_t>(t * U + u), static_cast<std::size_t>(f));
        if (flag) throw ParseError(lineno, "duplicate entry");
        flag = 1;
        m.at(static_cast<std::size_t>(t), static_cast<std::size_t>(u), static_cast<std::size_t>(f)) = n;
    }
    if (!header_seen) throw ParseError(lineno, "missing column header (truncated file?)");
    return m;
}

void save_request_csv(const std::string& path, const RequestMatrix& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_request_csv(out, m);
}

RequestMatrix load_request_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return read_request_csv(in);
}

}  // namespace edgecache
