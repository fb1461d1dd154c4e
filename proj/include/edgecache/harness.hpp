#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "edgecache/cachemodel.hpp"
#include "edgecache/core.hpp"
#include "edgecache/forecaster.hpp"
#include "edgecache/placement.hpp"
#include "edgecache/preference.hpp"
#include "edgecache/synthgen.hpp"

namespace edgecache {

enum class SweepAxis { None, BsCapacity, UserCapacity };
enum class RhoMode { Forecast, Oracle };
enum class ForecasterKind { Lstm, LastValue, SlotMean, StaticZipf };
enum class DatasetKind { Synthetic, Rotating };

std::string to_string(SweepAxis a);
std::string to_string(RhoMode m);
std::string to_string(ForecasterKind k);
std::string to_string(DatasetKind k);
SweepAxis parse_sweep_axis(const std::string& s);
RhoMode parse_rho_mode(const std::string& s);
ForecasterKind parse_forecaster(const std::string& s);
DatasetKind parse_dataset_kind(const std::string& s);

struct ExperimentConfig {
    TopologyConfig topology;
    SynthConfig synth;
    TrainConfig train;
    std::size_t history_len = 250;
    std::size_t horizon = 50;
    CostParams costs;
    std::vector<SchemeId> schemes{SchemeId::BsFirst, SchemeId::UserFirst, SchemeId::Overlapping};
    SweepAxis sweep_axis = SweepAxis::None;
    std::size_t sweep_min = 4;
    std::size_t sweep_max = 14;
    std::uint64_t seed = 1;
    std::size_t num_seeds = 5;
    std::string output_dir = "results";
    RhoMode rho_mode = RhoMode::Forecast;
    ForecasterKind forecaster = ForecasterKind::Lstm;
    DatasetKind dataset = DatasetKind::Synthetic;
    /// When set, this request CSV replaces generation (same data for every seed).
    std::string dataset_path;
    std::size_t rotating_period = 8;
    std::size_t rotating_width = 4;
    Count rotating_burst = 20;
    /// Record wall-clock seconds per row. Off by default so result files are
    /// reproducible byte for byte.
    bool timing = false;

    void validate() const;
};

/// Flat key/value view of ExperimentConfig, shared by the CLI flags, the
/// config file and the Python bindings.
struct ConfigField {
    std::string key;
    std::string help;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};
const std::vector<ConfigField>& config_fields();
/// Throws std::invalid_argument on an unknown key or unparsable value.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const ExperimentConfig& cfg, const std::string& key);
/// `key = value` lines for every field.
void write_config(std::ostream& out, const ExperimentConfig& cfg);

struct SweepPoint {
    std::size_t c_b = 0;
    std::size_t c_d = 0;
};
std::vector<SweepPoint> sweep_points(const ExperimentConfig& cfg);

struct ResultRow {
    SchemeId scheme = SchemeId::BsFirst;
    std::size_t c_b = 0;
    std::size_t c_d = 0;
    double cost = 0.0;
    std::uint64_t seed = 0;
    double wall_time = 0.0;

    bool operator==(const ResultRow&) const = default;
};

/// Everything placement needs for one seed: the data, the forecast of the
/// optimization horizon and the preference weights.
struct SeedData {
    std::uint64_t seed = 0;
    RequestMatrix dataset;
    RequestMatrix history;
    RequestMatrix forecast;
    std::vector<Dense<double>> joints;
    AggregatedPreference rho;
};

using LogFn = std::function<void(const std::string&)>;

/// The dataset for `seed`: loaded from cfg.dataset_path or generated with
/// history_len + horizon slots.
RequestMatrix make_dataset(const ExperimentConfig& cfg, std::uint64_t seed);

/// Per-user forecasts of `horizon` slots after `history`. LSTM training uses
/// one stream per user derived from `seed`.
RequestMatrix forecast_requests(const RequestMatrix& history, const ExperimentConfig& cfg, std::uint64_t seed,
                                const LogFn& log = {});

SeedData prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed, const LogFn& log = {});

/// Cost of a schedule under rho: the homogeneous form when every user row
/// and every BS row coincide, the heterogeneous form otherwise.
double evaluate_schedule(const IndicatorSchedule& sched, const Dense<double>& rho, const Topology& topo,
                         const CostParams& costs);

/// Rows for every scheme at every sweep point for one prepared seed.
std::vector<ResultRow> evaluate_seed(const ExperimentConfig& cfg, const SeedData& data,
                                     const std::vector<SchemeId>& schemes);

/// Full pipeline over num_seeds seeds (cfg.seed, cfg.seed + 1, ...).
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const LogFn& log = {});

struct ComparisonRow {
    std::size_t c_b = 0;
    std::size_t c_d = 0;
    std::uint64_t seed = 0;
    std::vector<double> costs;  // one per ComparisonTable::schemes entry
    /// static minus dynamic, when both are present.
    std::optional<double> difference;
};

struct ComparisonTable {
    std::vector<SchemeId> schemes;
    std::vector<ComparisonRow> rows;
};

/// Static baseline against dynamic homogeneous caching on the same data and
/// forecasts. Uses whichever of the two appear in cfg.schemes, or both when
/// neither does.
ComparisonTable compare_static_dynamic(const ExperimentConfig& cfg, const LogFn& log = {});
ComparisonTable comparison_from_rows(const std::vector<ResultRow>& rows, const std::vector<SchemeId>& schemes);

struct SummaryRow {
    SchemeId scheme = SchemeId::BsFirst;
    std::size_t c_b = 0;
    std::size_t c_d = 0;
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t seeds = 0;
};

/// Mean and standard error across seeds per (scheme, c_b, c_d), in first-seen order.
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results_csv(std::istream& in);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
/// `x,scheme,cost` with x the swept capacity and cost the seed mean.
void write_plot_data(std::ostream& out, const std::vector<SummaryRow>& rows, SweepAxis axis);
void write_comparison_csv(std::ostream& out, const ComparisonTable& table);

void save_results(const std::string& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> load_results(const std::string& path);

}  // namespace edgecache
