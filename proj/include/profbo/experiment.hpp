#ifndef PROFBO_EXPERIMENT_HPP
#define PROFBO_EXPERIMENT_HPP

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "profbo/io.hpp"
#include "profbo/loops.hpp"
#include "profbo/oracle.hpp"
#include "profbo/subprocess.hpp"

namespace profbo {

namespace fs = std::filesystem;

/// External simulator description for the subprocess protocol.
struct ExternalFunction {
    std::vector<std::string> command;
    std::string name = "external";
    int dim = 0;
    Eigen::MatrixX2d native_bounds;
};

/// One experiment: a method/surrogate pair on one function, repeated over
/// re-randomized starting designs with per-repetition seeds seed + rep.
struct ExperimentConfig {
    std::string function = "branin";
    std::string surrogate = "gp";
    std::string method = "pbo";
    int n_init = 10;
    int m_total = 30;
    int repetitions = 30;
    std::uint64_t seed = 1;
    int control_index = 0;
    int axis_loop = 50;
    int axis_final = 100;
    int samples = 1000;
    int cond_size = 40;
    double fringe_frac = 0.9;
    int dgp_iters_initial = 10000;
    int dgp_iters_refit = 2000;
    int dgp_retained = 100;
    bool record_initial_estimate = true;
    int oracle_resolution = 201;
    int jobs = 1;
    std::string output_dir = "results";
    std::optional<ExternalFunction> external;

    bool operator==(const ExperimentConfig&) const = default;
};

inline bool operator==(const ExternalFunction& a, const ExternalFunction& b) {
    return a.command == b.command && a.name == b.name && a.dim == b.dim &&
           a.native_bounds == b.native_bounds;
}

inline void to_json(json& j, const ExperimentConfig& c) {
    j = json{{"function", c.function},
             {"surrogate", c.surrogate},
             {"method", c.method},
             {"n_init", c.n_init},
             {"m_total", c.m_total},
             {"repetitions", c.repetitions},
             {"seed", c.seed},
             {"control_index", c.control_index},
             {"axis_loop", c.axis_loop},
             {"axis_final", c.axis_final},
             {"samples", c.samples},
             {"cond_size", c.cond_size},
             {"fringe_frac", c.fringe_frac},
             {"dgp_iters_initial", c.dgp_iters_initial},
             {"dgp_iters_refit", c.dgp_iters_refit},
             {"dgp_retained", c.dgp_retained},
             {"record_initial_estimate", c.record_initial_estimate},
             {"oracle_resolution", c.oracle_resolution},
             {"jobs", c.jobs},
             {"output_dir", c.output_dir}};
    if (c.external) {
        json e;
        e["command"] = c.external->command;
        e["name"] = c.external->name;
        e["dim"] = c.external->dim;
        std::vector<std::vector<double>> b;
        for (int i = 0; i < c.external->native_bounds.rows(); ++i)
            b.push_back({c.external->native_bounds(i, 0), c.external->native_bounds(i, 1)});
        e["native_bounds"] = b;
        j["external"] = std::move(e);
    }
}

inline void from_json(const json& j, ExperimentConfig& c) {
    ExperimentConfig defaults;
    c = defaults;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    get("function", c.function);
    get("surrogate", c.surrogate);
    get("method", c.method);
    get("n_init", c.n_init);
    get("m_total", c.m_total);
    get("repetitions", c.repetitions);
    get("seed", c.seed);
    get("control_index", c.control_index);
    get("axis_loop", c.axis_loop);
    get("axis_final", c.axis_final);
    get("samples", c.samples);
    get("cond_size", c.cond_size);
    get("fringe_frac", c.fringe_frac);
    get("dgp_iters_initial", c.dgp_iters_initial);
    get("dgp_iters_refit", c.dgp_iters_refit);
    get("dgp_retained", c.dgp_retained);
    get("record_initial_estimate", c.record_initial_estimate);
    get("oracle_resolution", c.oracle_resolution);
    get("jobs", c.jobs);
    get("output_dir", c.output_dir);
    if (j.contains("external")) {
        ExternalFunction e;
        const json& je = j.at("external");
        je.at("command").get_to(e.command);
        if (je.contains("name")) je.at("name").get_to(e.name);
        je.at("dim").get_to(e.dim);
        std::vector<std::vector<double>> b;
        je.at("native_bounds").get_to(b);
        e.native_bounds.resize(b.size(), 2);
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (b[i].size() != 2) throw config_error("external.native_bounds rows need 2 values");
            e.native_bounds(i, 0) = b[i][0];
            e.native_bounds(i, 1) = b[i][1];
        }
        c.external = std::move(e);
    }
}

inline void validate(const ExperimentConfig& c) {
    if (c.repetitions < 1) throw config_error("repetitions must be >= 1");
    if (c.n_init > c.m_total) throw config_error("n_init must not exceed m_total");
    if (c.method != "lhs" && c.method != "bo_ei" && c.method != "pei" && c.method != "pbo")
        throw config_error("unknown method: " + c.method);
    if (c.surrogate != "gp" && c.surrogate != "dgp")
        throw config_error("unknown surrogate: " + c.surrogate);
    if (!c.external) lookup_blackbox(c.function);  // throws on unknown names
    if (c.samples < 1) throw config_error("samples must be >= 1");
    if (c.cond_size < 1) throw config_error("cond_size must be >= 1");
    if (c.jobs < 1) throw config_error("jobs must be >= 1");
    if (c.surrogate == "dgp" && c.samples % c.dgp_retained != 0)
        throw config_error("samples must be a multiple of dgp_retained");
}

inline ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw config_error("config parse failure in " + path.string() + ": " + e.what());
    }
    ExperimentConfig c = j.get<ExperimentConfig>();
    return c;
}

struct RepetitionResult {
    int rep = 0;
    MetricsReport final_metrics;
    std::optional<MetricsReport> initial_metrics;
    bool failed = false;
    std::string error;
};

struct ExperimentSummary {
    std::vector<RepetitionResult> reps;
    MetricsReport mean, min, max;
    Eigen::VectorXd truth;
    fs::path directory;
};

namespace detail {

inline BlackBox resolve_blackbox(const ExperimentConfig& cfg) {
    if (cfg.external)
        return make_subprocess_blackbox(cfg.external->command, cfg.external->name,
                                        cfg.external->dim, cfg.control_index,
                                        cfg.external->native_bounds);
    return lookup_blackbox(cfg.function, cfg.control_index);
}

inline LoopConfig loop_config(const ExperimentConfig& cfg, const fs::path& rep_dir) {
    LoopConfig lc;
    lc.axis_loop = cfg.axis_loop;
    lc.axis_final = cfg.axis_final;
    lc.samples = cfg.samples;
    lc.cond_size = cfg.cond_size;
    lc.fringe_frac = cfg.fringe_frac;
    lc.record_initial_estimate = cfg.record_initial_estimate;
    lc.checkpoint_path = (rep_dir / "surrogate_checkpoint.json").string();
    return lc;
}

inline std::unique_ptr<Surrogate> surrogate_for(const ExperimentConfig& cfg) {
    if (cfg.surrogate == "gp") return std::make_unique<GpSurrogate>();
    DgpSurrogateOptions o;
    o.iters_initial = cfg.dgp_iters_initial;
    o.iters_refit = cfg.dgp_iters_refit;
    o.mcmc.retained = cfg.dgp_retained;
    return std::make_unique<DgpSurrogate>(o);
}

inline void write_profile_csv(const fs::path& path, const ProfileEstimate& est) {
    CsvWriter w(path, {"xstar", "mu_T", "ci_lo", "ci_hi"});
    for (int i = 0; i < est.xstar_values.size(); ++i)
        w.row({fmt_double(est.xstar_values[i]), fmt_double(est.mu_T[i]),
               fmt_double(est.ci_lo[i]), fmt_double(est.ci_hi[i])});
}

inline void write_trace_jsonl(const fs::path& path, const std::vector<AcquisitionRecord>& recs) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    for (const auto& r : recs) {
        json j;
        j["iteration"] = r.iteration;
        j["x_next"] = std::vector<double>(r.x_next.data(), r.x_next.data() + r.x_next.size());
        j["xstar_next"] = r.xstar_next;
        j["criterion_value"] = r.criterion_value;
        j["method"] = method_name(r.method);
        if (r.zero_utility) j["zero_utility"] = true;
        out << j.dump() << "\n";
    }
}

inline void write_design_csv(const fs::path& path, const Dataset& d) {
    std::vector<std::string> header;
    for (int j = 0; j < d.dim(); ++j) header.push_back("x" + std::to_string(j + 1));
    header.push_back("y");
    CsvWriter w(path, header);
    for (int i = 0; i < d.n(); ++i) {
        std::vector<std::string> cells;
        for (int j = 0; j < d.dim(); ++j) cells.push_back(fmt_double(d.X(i, j)));
        cells.push_back(fmt_double(d.y[i]));
        w.row(cells);
    }
}

inline std::string rep_tag(int rep) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "rep%03d", rep);
    return buf;
}

} // namespace detail

/// Run one repetition in isolation (used by run_experiment workers and
/// directly by tests).
inline RepetitionResult run_repetition(const ExperimentConfig& cfg, int rep,
                                       const Eigen::VectorXd& truth, const fs::path& dir) {
    RepetitionResult out;
    out.rep = rep;
    const std::uint64_t rep_seed = cfg.seed + static_cast<std::uint64_t>(rep);
    try {
        const BlackBox fn = detail::resolve_blackbox(cfg);
        Rng init_rng(rep_seed, {0x1417, 0});
        const Eigen::MatrixXd X0 = lhs_sample(cfg.n_init, fn.dim, init_rng);
        Dataset init = make_dataset(
            X0, [&](const Eigen::VectorXd& x) { return eval_function(fn, x); },
            cfg.control_index);

        auto sur = detail::surrogate_for(cfg);
        const LoopConfig lc = detail::loop_config(cfg, dir);
        LoopResult res = run_method(method_from_name(cfg.method), fn, init, cfg.m_total,
                                    *sur, lc, rep_seed);

        out.final_metrics = compute_metrics(res.final_estimate, truth);
        if (res.initial_estimate)
            out.initial_metrics = compute_metrics(*res.initial_estimate, truth);

        const std::string tag = detail::rep_tag(rep);
        detail::write_profile_csv(dir / (tag + "_profile.csv"), res.final_estimate);
        if (res.initial_estimate)
            detail::write_profile_csv(dir / (tag + "_initial_profile.csv"),
                                      *res.initial_estimate);
        detail::write_trace_jsonl(dir / (tag + "_trace.jsonl"), res.records);
        detail::write_design_csv(dir / (tag + "_design.csv"), res.data);
    } catch (const std::exception& e) {
        out.failed = true;
        out.error = e.what();
    }
    return out;
}

/// Full experiment: truth table, per-repetition runs (fanned out over
/// `jobs` workers), metrics.csv and the aggregate summary. Identical
/// configs and seeds reproduce all outputs byte for byte.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);

    {
        std::ofstream out(dir / "config_resolved.json");
        if (!out) throw io_error("cannot open for writing: " + (dir / "config_resolved.json").string());
        out << json(cfg).dump(2) << "\n";
    }

    ExperimentSummary summary;
    summary.directory = dir;

    // ground truth on the reporting grid (skipped for external simulators)
    const Eigen::VectorXd grid = evenly_spaced(cfg.axis_final);
    if (!cfg.external) {
        const BlackBox fn = lookup_blackbox(cfg.function, cfg.control_index);
        OracleOptions oopt;
        oopt.grid_resolution = cfg.oracle_resolution;
        summary.truth = true_profile(fn, grid, oopt);
        CsvWriter w(dir / "truth.csv", {"xstar", "T"});
        for (int i = 0; i < grid.size(); ++i)
            w.row({fmt_double(grid[i]), fmt_double(summary.truth[i])});
    } else {
        summary.truth = Eigen::VectorXd::Zero(grid.size());
    }

    summary.reps.resize(cfg.repetitions);
    std::atomic<int> next{0};
    auto worker = [&]() {
        while (true) {
            const int rep = next.fetch_add(1);
            if (rep >= cfg.repetitions) return;
            summary.reps[rep] = run_repetition(cfg, rep, summary.truth, dir);
        }
    };
    if (cfg.jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        const int nw = std::min(cfg.jobs, cfg.repetitions);
        pool.reserve(nw);
        for (int i = 0; i < nw; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    // metrics table, failures aside
    {
        CsvWriter w(dir / "metrics.csv",
                    {"rep", "rmse", "maxad", "avgci", "coverage",
                     "rmse_init", "maxad_init", "avgci_init", "coverage_init"});
        for (const auto& r : summary.reps) {
            if (r.failed) continue;
            std::vector<std::string> cells{std::to_string(r.rep),
                                           fmt_double(r.final_metrics.rmse),
                                           fmt_double(r.final_metrics.maxad),
                                           fmt_double(r.final_metrics.avgci),
                                           fmt_double(r.final_metrics.coverage)};
            if (r.initial_metrics) {
                cells.push_back(fmt_double(r.initial_metrics->rmse));
                cells.push_back(fmt_double(r.initial_metrics->maxad));
                cells.push_back(fmt_double(r.initial_metrics->avgci));
                cells.push_back(fmt_double(r.initial_metrics->coverage));
            } else {
                cells.insert(cells.end(), {"", "", "", ""});
            }
            w.row(cells);
        }
    }
    {
        json errs = json::array();
        for (const auto& r : summary.reps)
            if (r.failed) errs.push_back({{"rep", r.rep}, {"error", r.error}});
        if (!errs.empty()) {
            std::ofstream out(dir / "errors.json");
            out << errs.dump(2) << "\n";
        }
    }

    // aggregate mean/min/max over successful repetitions
    int n_ok = 0;
    MetricsReport mean{}, mn{}, mx{};
    mn.rmse = mn.maxad = mn.avgci = mn.coverage = std::numeric_limits<double>::infinity();
    mx.rmse = mx.maxad = mx.avgci = mx.coverage = -std::numeric_limits<double>::infinity();
    for (const auto& r : summary.reps) {
        if (r.failed) continue;
        ++n_ok;
        mean.rmse += r.final_metrics.rmse;
        mean.maxad += r.final_metrics.maxad;
        mean.avgci += r.final_metrics.avgci;
        mean.coverage += r.final_metrics.coverage;
        mn.rmse = std::min(mn.rmse, r.final_metrics.rmse);
        mn.maxad = std::min(mn.maxad, r.final_metrics.maxad);
        mn.avgci = std::min(mn.avgci, r.final_metrics.avgci);
        mn.coverage = std::min(mn.coverage, r.final_metrics.coverage);
        mx.rmse = std::max(mx.rmse, r.final_metrics.rmse);
        mx.maxad = std::max(mx.maxad, r.final_metrics.maxad);
        mx.avgci = std::max(mx.avgci, r.final_metrics.avgci);
        mx.coverage = std::max(mx.coverage, r.final_metrics.coverage);
    }
    if (n_ok > 0) {
        mean.rmse /= n_ok;
        mean.maxad /= n_ok;
        mean.avgci /= n_ok;
        mean.coverage /= n_ok;
        mean.grid_size = cfg.axis_final;
    }
    summary.mean = mean;
    summary.min = mn;
    summary.max = mx;

    {
        CsvWriter w(dir / "summary.csv", {"stat", "rmse", "maxad", "avgci", "coverage", "reps_ok"});
        auto row = [&](const char* name, const MetricsReport& r) {
            w.row({name, fmt_double(r.rmse), fmt_double(r.maxad), fmt_double(r.avgci),
                   fmt_double(r.coverage), std::to_string(n_ok)});
        };
        row("mean", mean);
        row("min", mn);
        row("max", mx);
    }
    return summary;
}

// ---------------------------------------------------------------------------
// Plot-data export
// ---------------------------------------------------------------------------

/// Bundle completed experiment directories into analysis-ready tables:
/// per-rep profile curves, a long metrics table with a method column, and a
/// coverage-versus-AvgCI table. `dir` is either one run directory or a
/// directory of run subdirectories.
inline void export_plotdata(const fs::path& dir) {
    std::vector<fs::path> runs;
    if (fs::exists(dir / "config_resolved.json")) {
        runs.push_back(dir);
    } else if (fs::is_directory(dir)) {
        std::vector<fs::path> subs;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_directory() && fs::exists(e.path() / "config_resolved.json"))
                subs.push_back(e.path());
        std::sort(subs.begin(), subs.end());
        runs = std::move(subs);
    }
    if (runs.empty())
        throw io_error("export: no completed runs under " + dir.string() +
                       " (expected config_resolved.json and metrics.csv)");

    const fs::path out_dir = dir / "export";
    fs::create_directories(out_dir);
    CsvWriter curves(out_dir / "profile_curves.csv",
                     {"method", "surrogate", "rep", "xstar", "mu_T", "ci_lo", "ci_hi"});
    CsvWriter metrics(out_dir / "metrics_long.csv",
                      {"method", "surrogate", "rep", "rmse", "maxad", "avgci", "coverage"});
    CsvWriter scatter(out_dir / "coverage_vs_avgci.csv",
                      {"method", "surrogate", "rep", "coverage", "avgci"});

    for (const auto& run : runs) {
        std::ifstream cin(run / "config_resolved.json");
        json jc;
        cin >> jc;
        const std::string method = jc.value("method", "?");
        const std::string surrogate = jc.value("surrogate", "?");
        const fs::path mpath = run / "metrics.csv";
        if (!fs::exists(mpath))
            throw io_error("export: missing " + mpath.string());
        const CsvTable mt = read_csv(mpath);
        for (std::size_t i = 0; i < mt.rows.size(); ++i) {
            const std::string rep = mt.rows[i][mt.column("rep")];
            metrics.row({method, surrogate, rep, mt.rows[i][mt.column("rmse")],
                         mt.rows[i][mt.column("maxad")], mt.rows[i][mt.column("avgci")],
                         mt.rows[i][mt.column("coverage")]});
            scatter.row({method, surrogate, rep, mt.rows[i][mt.column("coverage")],
                         mt.rows[i][mt.column("avgci")]});
            const fs::path ppath = run / (detail::rep_tag(std::stoi(rep)) + "_profile.csv");
            if (!fs::exists(ppath))
                throw io_error("export: missing " + ppath.string());
            const CsvTable pt = read_csv(ppath);
            for (const auto& r : pt.rows)
                curves.row({method, surrogate, rep, r[pt.column("xstar")],
                            r[pt.column("mu_T")], r[pt.column("ci_lo")],
                            r[pt.column("ci_hi")]});
        }
    }
}

} // namespace profbo

#endif
