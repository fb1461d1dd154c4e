// edgecache: dataset generation, forecasting, placement and cost sweeps.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "edgecache/harness.hpp"

namespace fs = std::filesystem;
using namespace edgecache;

namespace {

struct Paths {
    std::string dataset;
    std::string forecast;
    std::string schedule;
    std::string models;
    std::string out;
    std::string scheme;
};

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    return out;
}

fs::path out_path(const ExperimentConfig& cfg, const std::string& given, const std::string& fallback) {
    return given.empty() ? fs::path(cfg.output_dir) / fallback : fs::path(given);
}

void save_config(const ExperimentConfig& cfg) {
    auto out = open_out(fs::path(cfg.output_dir) / "config.txt");
    write_config(out, cfg);
}

LogFn logger(bool verbose) {
    if (!verbose) return {};
    return [](const std::string& msg) { std::cerr << msg << '\n'; };
}

/// The configured dataset; --dataset overrides dataset_path.
RequestMatrix dataset_for(ExperimentConfig cfg, const Paths& p) {
    if (!p.dataset.empty()) cfg.dataset_path = p.dataset;
    return make_dataset(cfg, cfg.seed);
}

RequestMatrix history_of(const ExperimentConfig& cfg, const RequestMatrix& data) {
    if (data.slots() < cfg.history_len) throw std::invalid_argument("dataset shorter than history_len");
    return data.slice(0, cfg.history_len);
}

std::string model_file(const fs::path& dir, std::size_t user) {
    return (dir / ("user_" + std::to_string(user) + ".model")).string();
}

int cmd_gen(const ExperimentConfig& cfg, const Paths& p) {
    const auto data = make_dataset(cfg, cfg.seed);
    const auto path = out_path(cfg, p.out, "dataset.csv");
    auto out = open_out(path);
    write_request_csv(out, data);
    std::cout << "wrote " << data.slots() << " slots to " << path.string() << '\n';
    return 0;
}

int cmd_train(const ExperimentConfig& cfg, const Paths& p, bool verbose) {
    const auto history = history_of(cfg, dataset_for(cfg, p));
    const fs::path dir = p.models.empty() ? fs::path(cfg.output_dir) / "models" : fs::path(p.models);
    fs::create_directories(dir);
    auto report_out = open_out(dir / "training.csv");
    report_out << "user,epochs,best_epoch,best_validation_loss,test_loss\n";
    for (std::size_t u = 0; u < history.users(); ++u) {
        TrainConfig tc = cfg.train;
        tc.seed = SeededRng(cfg.seed, "harness/train", u).next_u64();
        TrainReport rep;
        const auto model = train(history.user_series(u, 0, history.slots()), tc, &rep);
        save_model_file(model_file(dir, u), model);
        report_out << u << ',' << rep.epochs_run << ',' << rep.best_epoch << ','
                   << detail::format_double(rep.best_validation_loss) << ',' << detail::format_double(rep.test_loss)
                   << '\n';
        if (verbose) std::cerr << "user " << u << ": " << rep.epochs_run << " epochs\n";
    }
    std::cout << "trained " << history.users() << " models into " << dir.string() << '\n';
    return 0;
}

int cmd_forecast(const ExperimentConfig& cfg, const Paths& p, bool verbose) {
    const auto history = history_of(cfg, dataset_for(cfg, p));
    RequestMatrix fc;
    if (!p.models.empty()) {
        // Reuse models written by `train`.
        fc = RequestMatrix(cfg.horizon, history.users(), history.contents());
        fc.seed = cfg.seed;
        fc.first_slot = history.first_slot + history.slots();
        fc.extras["forecaster"] = "lstm";
        for (std::size_t u = 0; u < history.users(); ++u) {
            const auto model = load_model_file(model_file(p.models, u));
            const auto pred = rollout(model, history.user_series(u, 0, history.slots()), cfg.horizon);
            for (std::size_t t = 0; t < cfg.horizon; ++t)
                std::copy(pred.row(t).begin(), pred.row(t).end(), fc.row(t, u).begin());
        }
    } else {
        fc = forecast_requests(history, cfg, cfg.seed, logger(verbose));
    }
    const auto path = out_path(cfg, p.out, "forecast.csv");
    auto out = open_out(path);
    write_request_csv(out, fc);
    auto rho_out = open_out(path.parent_path() / "rho.csv");
    write_rho_csv(rho_out, aggregate_preference(slot_profiles(fc)));
    std::cout << "wrote " << fc.slots() << " forecast slots to " << path.string() << '\n';
    return 0;
}

std::vector<SchemeId> schemes_for(const ExperimentConfig& cfg, const Paths& p) {
    return p.scheme.empty() ? cfg.schemes : std::vector<SchemeId>{parse_scheme(p.scheme)};
}

int cmd_place(const ExperimentConfig& cfg, const Paths& p) {
    if (p.forecast.empty()) throw std::invalid_argument("place needs --forecast");
    const auto fc = load_request_csv(p.forecast);
    const auto topo = build_topology(cfg.topology);
    const auto joints = slot_joints(fc);
    RequestMatrix history;
    const auto schemes = schemes_for(cfg, p);
    if (std::find(schemes.begin(), schemes.end(), SchemeId::StaticZipf) != schemes.end())
        history = history_of(cfg, dataset_for(cfg, p));
    for (auto scheme : schemes) {
        auto sched = build_schedule(scheme, joints, history, topo);
        sched.first_slot = fc.first_slot;
        const auto path = fs::path(p.out.empty() ? cfg.output_dir : p.out) / ("schedule_" + to_string(scheme) + ".csv");
        auto out = open_out(path);
        write_schedule_csv(out, sched);
        std::cout << "wrote " << path.string() << '\n';
    }
    return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg, const Paths& p) {
    if (p.schedule.empty() || p.forecast.empty()) throw std::invalid_argument("evaluate needs --schedule and --forecast");
    std::ifstream in(p.schedule);
    if (!in) throw std::runtime_error("cannot open '" + p.schedule + "'");
    const auto sched = read_schedule_csv(in);
    const auto fc = load_request_csv(p.forecast);
    Dense<double> rho = aggregate_preference(slot_profiles(fc)).rho;
    if (cfg.rho_mode == RhoMode::Oracle) {
        const auto data = dataset_for(cfg, p);
        if (data.slots() < cfg.history_len + cfg.horizon)
            throw std::invalid_argument("oracle mode needs history_len + horizon slots of data");
        rho = aggregate_preference(slot_profiles(data.slice(cfg.history_len, cfg.history_len + cfg.horizon))).rho;
    }
    const auto topo = build_topology(cfg.topology);
    std::cout << "cost," << detail::format_double(evaluate_schedule(sched, rho, topo, cfg.costs)) << '\n';
    return 0;
}

void write_tables(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows) {
    const fs::path dir(cfg.output_dir);
    const auto summary = summarize(rows);
    auto results = open_out(dir / "results.csv");
    write_results_csv(results, rows);
    auto sum = open_out(dir / "summary.csv");
    write_summary_csv(sum, summary);
    auto plot = open_out(dir / "plot.csv");
    write_plot_data(plot, summary, cfg.sweep_axis);
}

int cmd_sweep(const ExperimentConfig& cfg, bool verbose) {
    save_config(cfg);
    const auto rows = run_experiment(cfg, logger(verbose));
    write_tables(cfg, rows);
    std::cout << "wrote " << rows.size() << " rows to " << (fs::path(cfg.output_dir) / "results.csv").string() << '\n';
    return 0;
}

int cmd_compare(const ExperimentConfig& cfg, bool verbose) {
    save_config(cfg);
    const auto table = compare_static_dynamic(cfg, logger(verbose));
    auto out = open_out(fs::path(cfg.output_dir) / "comparison.csv");
    write_comparison_csv(out, table);
    std::cout << "wrote " << table.rows.size() << " rows to "
              << (fs::path(cfg.output_dir) / "comparison.csv").string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"edgecache: preference-learning collaborative edge caching simulator"};
    app.set_config("--config", "", "key = value configuration file");
    app.require_subcommand(1);

    ExperimentConfig defaults;
    std::map<std::string, std::string> values;
    for (const auto& f : config_fields())
        app.add_option("--" + f.key, values[f.key], f.help)
            ->default_str(f.get(defaults))
            ->delimiter(',')
            ->multi_option_policy(CLI::MultiOptionPolicy::Join)
            ->group("Experiment");

    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "log training progress to stderr");

    Paths paths;
    auto* gen = app.add_subcommand("gen", "generate a request dataset");
    gen->add_option("-o,--out", paths.out, "output CSV (default <output_dir>/dataset.csv)");

    auto* tr = app.add_subcommand("train", "train one LSTM per user on the history");
    tr->add_option("--dataset", paths.dataset, "request CSV (default: generate)");
    tr->add_option("--models", paths.models, "model directory (default <output_dir>/models)");

    auto* fc = app.add_subcommand("forecast", "forecast the optimization horizon");
    fc->add_option("--dataset", paths.dataset, "request CSV (default: generate)");
    fc->add_option("--models", paths.models, "reuse models from `train` instead of training");
    fc->add_option("-o,--out", paths.out, "output CSV (default <output_dir>/forecast.csv)");

    auto* pl = app.add_subcommand("place", "build cache schedules from a forecast");
    pl->add_option("--forecast", paths.forecast, "forecast CSV")->required();
    pl->add_option("--dataset", paths.dataset, "request CSV for the static baseline history");
    pl->add_option("--scheme", paths.scheme, "one scheme (default: the configured list)");
    pl->add_option("-o,--out", paths.out, "output directory (default <output_dir>)");

    auto* ev = app.add_subcommand("evaluate", "cost of a schedule");
    ev->add_option("--schedule", paths.schedule, "schedule CSV")->required();
    ev->add_option("--forecast", paths.forecast, "forecast CSV supplying rho")->required();
    ev->add_option("--dataset", paths.dataset, "request CSV for oracle rho");

    auto* sw = app.add_subcommand("sweep", "full pipeline over seeds and sweep points");
    auto* cs = app.add_subcommand("compare-static", "static baseline against dynamic homogeneous caching");

    for (auto* sub : {gen, tr, fc, pl, ev, sw, cs}) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg;
        for (const auto& f : config_fields()) {
            const auto* opt = app.get_option("--" + f.key);
            if (opt->count() > 0) set_config_value(cfg, f.key, values[f.key]);
        }
        cfg.validate();

        if (gen->parsed()) return cmd_gen(cfg, paths);
        if (tr->parsed()) return cmd_train(cfg, paths, verbose);
        if (fc->parsed()) return cmd_forecast(cfg, paths, verbose);
        if (pl->parsed()) return cmd_place(cfg, paths);
        if (ev->parsed()) return cmd_evaluate(cfg, paths);
        if (sw->parsed()) return cmd_sweep(cfg, verbose);
        if (cs->parsed()) return cmd_compare(cfg, verbose);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
