#include "edgecache/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace edgecache {

namespace {

template <typename E>
E parse_enum(const std::string& s, std::initializer_list<E> values, const char* what) {
    for (auto v : values)
        if (to_string(v) == s) return v;
    throw std::invalid_argument(std::string("unknown ") + what + " '" + s + "'");
}

}  // namespace

std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::None: return "none";
        case SweepAxis::BsCapacity: return "c_b";
        case SweepAxis::UserCapacity: return "c_d";
    }
    return "?";
}

std::string to_string(RhoMode m) { return m == RhoMode::Forecast ? "forecast" : "oracle"; }

std::string to_string(ForecasterKind k) {
    switch (k) {
        case ForecasterKind::Lstm: return "lstm";
        case ForecasterKind::LastValue: return "last-value";
        case ForecasterKind::SlotMean: return "slot-mean";
        case ForecasterKind::StaticZipf: return "static-zipf";
    }
    return "?";
}

std::string to_string(DatasetKind k) { return k == DatasetKind::Synthetic ? "synthetic" : "rotating"; }

SweepAxis parse_sweep_axis(const std::string& s) {
    return parse_enum(s, {SweepAxis::None, SweepAxis::BsCapacity, SweepAxis::UserCapacity}, "sweep axis");
}
RhoMode parse_rho_mode(const std::string& s) { return parse_enum(s, {RhoMode::Forecast, RhoMode::Oracle}, "rho mode"); }
ForecasterKind parse_forecaster(const std::string& s) {
    return parse_enum(s,
                      {ForecasterKind::Lstm, ForecasterKind::LastValue, ForecasterKind::SlotMean,
                       ForecasterKind::StaticZipf},
                      "forecaster");
}
DatasetKind parse_dataset_kind(const std::string& s) {
    return parse_enum(s, {DatasetKind::Synthetic, DatasetKind::Rotating}, "dataset kind");
}

void ExperimentConfig::validate() const {
    const Topology topo = build_topology(topology);
    synth.skew.validate();
    synth.requests.validate();
    synth.correlation.validate();
    train.validate();
    if (history_len < 4) throw std::invalid_argument("history_len must be at least 4");
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    split_sizes(history_len, train);
    require_valid_costs(costs);
    if (sweep_axis != SweepAxis::None) {
        if (sweep_min > sweep_max) throw std::invalid_argument("sweep_min exceeds sweep_max");
        if (sweep_max > topo.num_contents()) throw std::invalid_argument("sweep range exceeds the catalog size");
    }
    if (num_seeds < 1) throw std::invalid_argument("num_seeds must be at least 1");
    if (dataset == DatasetKind::Rotating &&
        (rotating_period == 0 || rotating_width == 0 || rotating_burst < 2 ||
         rotating_period * rotating_width > topology.num_contents))
        throw std::invalid_argument("rotating dataset needs period, width >= 1, period * width <= F and burst >= 2");
}

namespace {

std::size_t to_size(const std::string& v) {
    const auto n = detail::parse_int(detail::trim(v), 0);
    if (n < 0) throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
    return static_cast<std::size_t>(n);
}

double to_real(const std::string& v) { return detail::parse_double(detail::trim(v), 0); }

bool to_bool(const std::string& v) {
    const auto s = detail::trim(v);
    if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "off" || s == "no") return false;
    throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + detail::format_double(v[i]);
    return out;
}

std::string join_schemes(const std::vector<SchemeId>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + to_string(v[i]);
    return out;
}

template <typename T>
std::string str(T v) {
    if constexpr (std::is_floating_point_v<T>)
        return detail::format_double(v);
    else
        return std::to_string(v);
}

#define EC_SIZE(key, member, help) \
    {key, help, [](const ExperimentConfig& c) { return str(c.member); }, \
     [](ExperimentConfig& c, const std::string& v) { c.member = to_size(v); }}
#define EC_INT(key, member, help) \
    {key, help, [](const ExperimentConfig& c) { return str(c.member); }, \
     [](ExperimentConfig& c, const std::string& v) { c.member = detail::parse_int(detail::trim(v), 0); }}
#define EC_REAL(key, member, help) \
    {key, help, [](const ExperimentConfig& c) { return str(c.member); }, \
     [](ExperimentConfig& c, const std::string& v) { c.member = to_real(v); }}

std::vector<ConfigField> make_fields() {
    return {
        EC_SIZE("num_bs", topology.num_bs, "base stations in the cluster"),
        EC_SIZE("users_per_bs", topology.users_per_bs, "users served by each BS"),
        EC_SIZE("num_contents", topology.num_contents, "catalog size F"),
        EC_SIZE("bs_capacity", topology.bs_capacity, "BS cache size C_b"),
        EC_SIZE("user_capacity", topology.user_capacity, "user cache size C_d"),
        EC_REAL("gamma_min", synth.skew.gamma_min, "smallest Zipf skewness"),
        EC_REAL("gamma_max", synth.skew.gamma_max, "largest Zipf skewness"),
        EC_INT("n_req_min", synth.requests.n_req_min, "fewest requests per user in slot 1"),
        EC_INT("n_req_max", synth.requests.n_req_max, "most requests per user in slot 1"),
        {"amplitudes", "comma-separated sinusoid amplitudes",
         [](const ExperimentConfig& c) { return join_doubles(c.synth.correlation.amplitudes); },
         [](ExperimentConfig& c, const std::string& v) {
             std::vector<double> amps;
             for (const auto& item : detail::split(v, ','))
                 if (!detail::trim(item).empty()) amps.push_back(to_real(item));
             c.synth.correlation.amplitudes = std::move(amps);
         }},
        EC_REAL("noise_mean", synth.correlation.noise_mean, "mean of the Gaussian noise term"),
        EC_REAL("noise_var", synth.correlation.noise_var, "variance of the Gaussian noise term"),
        EC_SIZE("hidden_dim", train.hidden_dim, "LSTM hidden units"),
        EC_SIZE("epochs", train.epochs, "maximum training epochs"),
        EC_REAL("learning_rate", train.learning_rate, "Adam step size"),
        EC_REAL("clip_norm", train.clip_norm, "gradient norm clip"),
        EC_REAL("train_fraction", train.train_fraction, "training share of the history"),
        EC_REAL("validation_fraction", train.validation_fraction, "validation share of the history"),
        EC_REAL("test_fraction", train.test_fraction, "test share of the history"),
        EC_SIZE("patience", train.patience, "epochs without validation improvement before stopping"),
        EC_SIZE("history_len", history_len, "historical slots N"),
        EC_SIZE("horizon", horizon, "optimization slots N^opt"),
        EC_REAL("storage_cost", costs.storage, "storage cost"),
        EC_REAL("comm_d2d", costs.comm_d2d, "D2D communication cost"),
        EC_REAL("comm_serving_bs", costs.comm_serving_bs, "serving BS communication cost"),
        EC_REAL("comm_cluster_bs", costs.comm_cluster_bs, "other cluster BS communication cost"),
        EC_REAL("comm_cloud", costs.comm_cloud, "cloud communication cost"),
        {"schemes", "comma-separated placement schemes",
         [](const ExperimentConfig& c) { return join_schemes(c.schemes); },
         [](ExperimentConfig& c, const std::string& v) { c.schemes = parse_scheme_list(v); }},
        {"sweep_axis", "none, c_b or c_d", [](const ExperimentConfig& c) { return to_string(c.sweep_axis); },
         [](ExperimentConfig& c, const std::string& v) { c.sweep_axis = parse_sweep_axis(detail::trim(v)); }},
        EC_SIZE("sweep_min", sweep_min, "first swept capacity"),
        EC_SIZE("sweep_max", sweep_max, "last swept capacity"),
        {"seed", "base seed", [](const ExperimentConfig& c) { return std::to_string(c.seed); },
         [](ExperimentConfig& c, const std::string& v) { c.seed = to_size(v); }},
        EC_SIZE("num_seeds", num_seeds, "number of seeds (seed, seed+1, ...)"),
        {"output_dir", "directory for output files", [](const ExperimentConfig& c) { return c.output_dir; },
         [](ExperimentConfig& c, const std::string& v) { c.output_dir = detail::trim(v); }},
        {"rho_mode", "forecast or oracle", [](const ExperimentConfig& c) { return to_string(c.rho_mode); },
         [](ExperimentConfig& c, const std::string& v) { c.rho_mode = parse_rho_mode(detail::trim(v)); }},
        {"forecaster", "lstm, last-value, slot-mean or static-zipf",
         [](const ExperimentConfig& c) { return to_string(c.forecaster); },
         [](ExperimentConfig& c, const std::string& v) { c.forecaster = parse_forecaster(detail::trim(v)); }},
        {"dataset", "synthetic or rotating", [](const ExperimentConfig& c) { return to_string(c.dataset); },
         [](ExperimentConfig& c, const std::string& v) { c.dataset = parse_dataset_kind(detail::trim(v)); }},
        {"dataset_path", "request CSV to load instead of generating",
         [](const ExperimentConfig& c) { return c.dataset_path; },
         [](ExperimentConfig& c, const std::string& v) { c.dataset_path = detail::trim(v); }},
        EC_SIZE("rotating_period", rotating_period, "number of blocks the rotating dataset cycles through"),
        EC_SIZE("rotating_width", rotating_width, "contents per block in the rotating dataset"),
        EC_INT("rotating_burst", rotating_burst, "largest per-slot count in the rotating dataset"),
        {"timing", "record wall-clock time per row", [](const ExperimentConfig& c) { return c.timing ? "true" : "false"; },
         [](ExperimentConfig& c, const std::string& v) { c.timing = to_bool(v); }},
    };
}

#undef EC_SIZE
#undef EC_INT
#undef EC_REAL

}  // namespace

const std::vector<ConfigField>& config_fields() {
    static const std::vector<ConfigField> fields = make_fields();
    return fields;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& f : config_fields()) {
        if (f.key != key) continue;
        try {
            f.set(cfg, value);
        } catch (const std::exception& e) {
            throw std::invalid_argument("config key '" + key + "': " + e.what());
        }
        return;
    }
    throw std::invalid_argument("unknown config key '" + key + "'");
}

std::string get_config_value(const ExperimentConfig& cfg, const std::string& key) {
    for (const auto& f : config_fields())
        if (f.key == key) return f.get(cfg);
    throw std::invalid_argument("unknown config key '" + key + "'");
}

void write_config(std::ostream& out, const ExperimentConfig& cfg) {
    for (const auto& f : config_fields()) out << f.key << " = " << f.get(cfg) << '\n';
}

std::vector<SweepPoint> sweep_points(const ExperimentConfig& cfg) {
    std::vector<SweepPoint> out;
    const SweepPoint base{cfg.topology.bs_capacity, cfg.topology.user_capacity};
    switch (cfg.sweep_axis) {
        case SweepAxis::None: out.push_back(base); break;
        case SweepAxis::BsCapacity:
            for (auto v = cfg.sweep_min; v <= cfg.sweep_max; ++v) out.push_back({v, base.c_d});
            break;
        case SweepAxis::UserCapacity:
            for (auto v = cfg.sweep_min; v <= cfg.sweep_max; ++v) out.push_back({base.c_b, v});
            break;
    }
    return out;
}

RequestMatrix make_dataset(const ExperimentConfig& cfg, std::uint64_t seed) {
    const Topology topo = build_topology(cfg.topology);
    const std::size_t slots = cfg.history_len + cfg.horizon;
    if (!cfg.dataset_path.empty()) {
        auto m = load_request_csv(cfg.dataset_path);
        if (m.users() != topo.num_users() || m.contents() != topo.num_contents())
            throw std::invalid_argument("dataset dimensions do not match the topology");
        if (m.slots() < cfg.history_len) throw std::invalid_argument("dataset shorter than history_len");
        return m;
    }
    if (cfg.dataset == DatasetKind::Rotating)
        return generate_rotating_dataset(topo, slots, cfg.rotating_period, cfg.rotating_width, cfg.rotating_burst, seed);
    SynthConfig synth = cfg.synth;
    synth.num_slots = slots;
    return generate_dataset(topo, synth, seed);
}

RequestMatrix forecast_requests(const RequestMatrix& history, const ExperimentConfig& cfg, std::uint64_t seed,
                                const LogFn& log) {
    const std::size_t N = history.slots();
    RequestMatrix out(cfg.horizon, history.users(), history.contents());
    out.seed = seed;
    out.first_slot = history.first_slot + N;
    out.extras["forecaster"] = to_string(cfg.forecaster);
    for (std::size_t u = 0; u < history.users(); ++u) {
        const auto series = history.user_series(u, 0, N);
        Dense<Count> pred;
        switch (cfg.forecaster) {
            case ForecasterKind::Lstm: {
                TrainConfig tc = cfg.train;
                tc.seed = SeededRng(seed, "harness/train", u).next_u64();
                TrainReport report;
                const auto model = train(series, tc, &report);
                pred = rollout(model, series, cfg.horizon);
                if (log)
                    log("seed " + std::to_string(seed) + " user " + std::to_string(u) + ": " +
                        std::to_string(report.epochs_run) + " epochs, val " +
                        detail::format_double(report.best_validation_loss));
                break;
            }
            case ForecasterKind::LastValue: pred = baseline_forecast(BaselineKind::LastValue, series, cfg.horizon); break;
            case ForecasterKind::SlotMean: pred = baseline_forecast(BaselineKind::SlotMean, series, cfg.horizon); break;
            case ForecasterKind::StaticZipf:
                pred = baseline_forecast(BaselineKind::StaticZipf, series, cfg.horizon);
                break;
        }
        for (std::size_t t = 0; t < cfg.horizon; ++t) std::copy(pred.row(t).begin(), pred.row(t).end(), out.row(t, u).begin());
    }
    return out;
}

SeedData prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed, const LogFn& log) {
    cfg.validate();
    SeedData d;
    d.seed = seed;
    d.dataset = make_dataset(cfg, seed);
    d.history = d.dataset.slice(0, cfg.history_len);
    d.forecast = forecast_requests(d.history, cfg, seed, log);
    d.joints = slot_joints(d.forecast);
    if (cfg.rho_mode == RhoMode::Oracle) {
        if (d.dataset.slots() < cfg.history_len + cfg.horizon)
            throw std::invalid_argument("oracle mode needs history_len + horizon slots of data");
        const auto actual = d.dataset.slice(cfg.history_len, cfg.history_len + cfg.horizon);
        const auto profiles = slot_profiles(actual);
        d.rho = aggregate_preference(profiles);
    } else {
        const auto profiles = slot_profiles(d.forecast);
        d.rho = aggregate_preference(profiles);
    }
    return d;
}

double evaluate_schedule(const IndicatorSchedule& sched, const Dense<double>& rho, const Topology& topo,
                         const CostParams& costs) {
    if (const auto hom = homogeneous_probabilities(sched)) return average_cost_hom(*hom, rho, topo, costs);
    return average_cost_het(indicators_to_probabilities(sched), rho, topo, costs);
}

std::vector<ResultRow> evaluate_seed(const ExperimentConfig& cfg, const SeedData& data,
                                     const std::vector<SchemeId>& schemes) {
    using Clock = std::chrono::steady_clock;
    const Topology base = build_topology(cfg.topology);
    std::vector<ResultRow> rows;
    for (const auto& pt : sweep_points(cfg)) {
        const Topology topo = base.with_capacities(pt.c_b, pt.c_d);
        for (auto scheme : schemes) {
            const auto start = Clock::now();
            const auto sched = build_schedule(scheme, data.joints, data.history, topo);
            ResultRow row{scheme, pt.c_b, pt.c_d, evaluate_schedule(sched, data.rho.rho, topo, cfg.costs), data.seed,
                          0.0};
            if (cfg.timing) row.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
            rows.push_back(row);
        }
    }
    return rows;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const LogFn& log) {
    cfg.validate();
    std::vector<ResultRow> rows;
    if (cfg.schemes.empty()) return rows;
    for (std::size_t k = 0; k < cfg.num_seeds; ++k) {
        const std::uint64_t seed = cfg.seed + k;
        const auto data = prepare_seed(cfg, seed, log);
        const auto part = evaluate_seed(cfg, data, cfg.schemes);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    return rows;
}

ComparisonTable comparison_from_rows(const std::vector<ResultRow>& rows, const std::vector<SchemeId>& schemes) {
    ComparisonTable table;
    table.schemes = schemes;
    std::map<std::tuple<std::uint64_t, std::size_t, std::size_t>, std::size_t> index;
    for (const auto& r : rows) {
        const auto col = std::find(schemes.begin(), schemes.end(), r.scheme);
        if (col == schemes.end()) continue;
        const auto key = std::make_tuple(r.seed, r.c_b, r.c_d);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, table.rows.size()).first;
            table.rows.push_back({r.c_b, r.c_d, r.seed, std::vector<double>(schemes.size(), std::nan("")), {}});
        }
        table.rows[it->second].costs[static_cast<std::size_t>(col - schemes.begin())] = r.cost;
    }
    const auto s = std::find(schemes.begin(), schemes.end(), SchemeId::StaticZipf);
    const auto d = std::find(schemes.begin(), schemes.end(), SchemeId::Homogeneous);
    if (s != schemes.end() && d != schemes.end())
        for (auto& row : table.rows)
            row.difference = row.costs[static_cast<std::size_t>(s - schemes.begin())] -
                             row.costs[static_cast<std::size_t>(d - schemes.begin())];
    return table;
}

ComparisonTable compare_static_dynamic(const ExperimentConfig& cfg, const LogFn& log) {
    std::vector<SchemeId> schemes;
    for (auto s : {SchemeId::StaticZipf, SchemeId::Homogeneous})
        if (std::find(cfg.schemes.begin(), cfg.schemes.end(), s) != cfg.schemes.end()) schemes.push_back(s);
    if (schemes.empty()) schemes = {SchemeId::StaticZipf, SchemeId::Homogeneous};
    ExperimentConfig run = cfg;
    run.schemes = schemes;
    return comparison_from_rows(run_experiment(run, log), schemes);
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
    std::vector<SummaryRow> out;
    std::vector<std::vector<double>> samples;
    for (const auto& r : rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const SummaryRow& s) {
            return s.scheme == r.scheme && s.c_b == r.c_b && s.c_d == r.c_d;
        });
        if (it == out.end()) {
            out.push_back({r.scheme, r.c_b, r.c_d, 0.0, 0.0, 0});
            samples.emplace_back();
            it = out.end() - 1;
        }
        samples[static_cast<std::size_t>(it - out.begin())].push_back(r.cost);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto& xs = samples[i];
        const double n = static_cast<double>(xs.size());
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= n;
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        out[i].mean = mean;
        out[i].stderr_ = xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
        out[i].seeds = xs.size();
    }
    return out;
}

namespace {
constexpr const char* kResultsHeader = "scheme,c_b,c_d,cost,seed,wall_time";
}

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << kResultsHeader << '\n';
    for (const auto& r : rows)
        out << to_string(r.scheme) << ',' << r.c_b << ',' << r.c_d << ',' << detail::format_double(r.cost) << ','
            << r.seed << ',' << detail::format_double(r.wall_time) << '\n';
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line)) throw ParseError(lineno, "empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line) != kResultsHeader)
        throw ParseError(lineno, "expected header '" + std::string(kResultsHeader) + "'");
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        const auto f = detail::split(line, ',');
        if (f.size() != 6) throw ParseError(lineno, "expected 6 fields, got " + std::to_string(f.size()));
        ResultRow r;
        try {
            r.scheme = parse_scheme(detail::trim(f[0]));
        } catch (const std::invalid_argument& e) {
            throw ParseError(lineno, e.what());
        }
        const auto cb = detail::parse_int(f[1], lineno), cd = detail::parse_int(f[2], lineno),
                   seed = detail::parse_int(f[4], lineno);
        if (cb < 0 || cd < 0 || seed < 0) throw ParseError(lineno, "negative field");
        r.c_b = static_cast<std::size_t>(cb);
        r.c_d = static_cast<std::size_t>(cd);
        r.cost = detail::parse_double(f[3], lineno);
        r.seed = static_cast<std::uint64_t>(seed);
        r.wall_time = detail::parse_double(f[5], lineno);
        rows.push_back(r);
    }
    return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "scheme,c_b,c_d,mean_cost,stderr,seeds\n";
    for (const auto& r : rows)
        out << to_string(r.scheme) << ',' << r.c_b << ',' << r.c_d << ',' << detail::format_double(r.mean) << ','
            << detail::format_double(r.stderr_) << ',' << r.seeds << '\n';
}

void write_plot_data(std::ostream& out, const std::vector<SummaryRow>& rows, SweepAxis axis) {
    out << "x,scheme,cost\n";
    for (const auto& r : rows) {
        const std::size_t x = axis == SweepAxis::UserCapacity ? r.c_d : r.c_b;
        out << x << ',' << to_string(r.scheme) << ',' << detail::format_double(r.mean) << '\n';
    }
}

void write_comparison_csv(std::ostream& out, const ComparisonTable& table) {
    out << "c_b,c_d,seed";
    for (auto s : table.schemes) out << ',' << to_string(s);
    const bool diff = !table.rows.empty() && table.rows.front().difference.has_value();
    if (diff) out << ",difference";
    out << '\n';
    for (const auto& r : table.rows) {
        out << r.c_b << ',' << r.c_d << ',' << r.seed;
        for (double c : r.costs) out << ',' << detail::format_double(c);
        if (diff) out << ',' << detail::format_double(r.difference.value_or(std::nan("")));
        out << '\n';
    }
}

void save_results(const std::string& path, const std::vector<ResultRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_results_csv(out, rows);
}

std::vector<ResultRow> load_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return read_results_csv(in);
}

}  // namespace edgecache
