// Command-line driver: run experiments from JSON configs, export plot data,
// dump ground-truth profile tables, inspect candidate sets, and serve
// benchmark functions over the stdin/stdout line protocol.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "profbo/experiment.hpp"

namespace {

int fail_json(const std::string& type, const std::string& message) {
    profbo::json j;
    j["error"] = {{"type", type}, {"message", message}};
    std::cerr << j.dump() << "\n";
    return 1;
}

int cmd_run(const std::string& config_path, const profbo::json& overrides) {
    profbo::ExperimentConfig cfg = profbo::load_config(config_path);
    profbo::json jc(cfg);
    for (const auto& [k, v] : overrides.items()) jc[k] = v;
    cfg = jc.get<profbo::ExperimentConfig>();

    const profbo::ExperimentSummary s = profbo::run_experiment(cfg);
    int failed = 0;
    for (const auto& r : s.reps)
        if (r.failed) ++failed;
    std::cout << "wrote " << s.directory.string() << " (" << s.reps.size() - failed << "/"
              << s.reps.size() << " repetitions ok)\n";
    std::cout << "mean rmse=" << s.mean.rmse << " maxad=" << s.mean.maxad
              << " avgci=" << s.mean.avgci << " coverage=" << s.mean.coverage << "\n";
    return failed == static_cast<int>(s.reps.size()) && !s.reps.empty() ? 1 : 0;
}

int cmd_truth(const std::string& function, int grid, int control, int resolution,
              const std::string& out_path) {
    const profbo::BlackBox fn = profbo::lookup_blackbox(function, control);
    const Eigen::VectorXd xs = profbo::evenly_spaced(grid);
    profbo::OracleOptions opt;
    opt.grid_resolution = resolution;
    const Eigen::VectorXd T = profbo::true_profile(fn, xs, opt);
    if (out_path.empty()) {
        std::cout << "xstar,T\n";
        for (int i = 0; i < xs.size(); ++i)
            std::cout << profbo::fmt_double(xs[i]) << "," << profbo::fmt_double(T[i]) << "\n";
    } else {
        profbo::CsvWriter w(out_path, {"xstar", "T"});
        for (int i = 0; i < xs.size(); ++i)
            w.row({profbo::fmt_double(xs[i]), profbo::fmt_double(T[i])});
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

int cmd_candidates(const std::string& design_path, int control, int axis,
                   double fringe_frac, const std::string& out_path) {
    const Eigen::MatrixXd X = profbo::read_csv_matrix(design_path);
    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw profbo::io_error("cannot open for writing: " + out_path);
        os = &file;
    }
    if (axis > 0) {
        const profbo::CandidateSet cs =
            profbo::tricands_plus(X, control, profbo::evenly_spaced(axis), fringe_frac);
        for (int j = 0; j < cs.full.cols(); ++j) *os << "x" << j + 1 << ",";
        *os << "tag\n";
        for (int i = 0; i < cs.full.rows(); ++i) {
            for (int j = 0; j < cs.full.cols(); ++j)
                *os << profbo::fmt_double(cs.full(i, j)) << ",";
            *os << (cs.tags[i % cs.n_per_slice()] == profbo::CandidateTag::internal
                        ? "internal" : "fringe")
                << "\n";
        }
    } else {
        Eigen::MatrixXd nuis(X.rows(), X.cols() - 1);
        int c = 0;
        for (int j = 0; j < X.cols(); ++j)
            if (j != control) nuis.col(c++) = X.col(j);
        const profbo::TricandSet tc = profbo::tricands(nuis, fringe_frac);
        for (int j = 0; j < tc.points.cols(); ++j) *os << "x" << j + 1 << ",";
        *os << "tag\n";
        for (int i = 0; i < tc.points.rows(); ++i) {
            for (int j = 0; j < tc.points.cols(); ++j)
                *os << profbo::fmt_double(tc.points(i, j)) << ",";
            *os << (tc.tags[i] == profbo::CandidateTag::internal ? "internal" : "fringe")
                << "\n";
        }
    }
    return 0;
}

// line protocol: read native-domain vectors, reply with one value per line
int cmd_serve(const std::string& function, int control) {
    const profbo::BlackBox fn = profbo::lookup_blackbox(function, control);
    std::string line;
    while (std::getline(std::cin, line)) {
        std::istringstream ss(line);
        Eigen::VectorXd x(fn.dim);
        for (int j = 0; j < fn.dim; ++j)
            if (!(ss >> x[j])) return fail_json("protocol", "expected " +
                                                std::to_string(fn.dim) + " values per line");
        std::cout << profbo::fmt_double(fn.eval_native(x)) << "\n" << std::flush;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Profile optimization of expensive black-box functions"};
    app.require_subcommand(1);

    std::string config_path, function = "branin", design_path, out_path, results_dir;
    int grid = 100, control = 0, resolution = 201, axis = 0;
    double fringe_frac = 0.9;
    profbo::json overrides = profbo::json::object();

    auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
    run->add_option("config", config_path, "Path to config JSON")->required();
    std::string ov_seed, ov_reps, ov_method, ov_sur, ov_out, ov_jobs, ov_fn;
    run->add_option("--seed", ov_seed, "Override seed");
    run->add_option("--repetitions", ov_reps, "Override repetition count");
    run->add_option("--method", ov_method, "Override method (lhs|bo_ei|pei|pbo)");
    run->add_option("--surrogate", ov_sur, "Override surrogate (gp|dgp)");
    run->add_option("--output-dir", ov_out, "Override output directory");
    run->add_option("--jobs", ov_jobs, "Override worker count");
    run->add_option("--function", ov_fn, "Override function name");

    auto* exp = app.add_subcommand("export", "Bundle results into plot-ready CSV tables");
    exp->add_option("results", results_dir, "Results directory")->required();

    auto* truth = app.add_subcommand("truth", "Emit the oracle profile table");
    truth->add_option("function", function, "Benchmark name")->required();
    truth->add_option("--grid", grid, "Control grid size");
    truth->add_option("--control", control, "Control parameter index");
    truth->add_option("--resolution", resolution, "Oracle grid resolution per dimension");
    truth->add_option("--out", out_path, "Output CSV (stdout when omitted)");

    auto* cand = app.add_subcommand("candidates", "Emit tricands for a design CSV");
    cand->add_option("design", design_path, "Design CSV (d columns)")->required();
    cand->add_option("--control", control, "Control parameter index");
    cand->add_option("--axis", axis, "Control axis size (0: nuisance candidates only)");
    cand->add_option("--fringe-frac", fringe_frac, "Fringe placement fraction");
    cand->add_option("--out", out_path, "Output CSV (stdout when omitted)");

    auto* serve = app.add_subcommand("serve", "Evaluate a benchmark over stdin/stdout");
    serve->add_option("function", function, "Benchmark name")->required();
    serve->add_option("--control", control, "Control parameter index");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (!ov_seed.empty()) overrides["seed"] = std::stoull(ov_seed);
            if (!ov_reps.empty()) overrides["repetitions"] = std::stoi(ov_reps);
            if (!ov_method.empty()) overrides["method"] = ov_method;
            if (!ov_sur.empty()) overrides["surrogate"] = ov_sur;
            if (!ov_out.empty()) overrides["output_dir"] = ov_out;
            if (!ov_jobs.empty()) overrides["jobs"] = std::stoi(ov_jobs);
            if (!ov_fn.empty()) overrides["function"] = ov_fn;
            return cmd_run(config_path, overrides);
        }
        if (exp->parsed()) {
            profbo::export_plotdata(results_dir);
            std::cout << "wrote " << (std::filesystem::path(results_dir) / "export").string()
                      << "\n";
            return 0;
        }
        if (truth->parsed()) return cmd_truth(function, grid, control, resolution, out_path);
        if (cand->parsed()) return cmd_candidates(design_path, control, axis, fringe_frac, out_path);
        if (serve->parsed()) return cmd_serve(function, control);
    } catch (const profbo::config_error& e) {
        return fail_json("config", e.what());
    } catch (const profbo::io_error& e) {
        return fail_json("io", e.what());
    } catch (const profbo::invalid_argument& e) {
        return fail_json("invalid-argument", e.what());
    } catch (const profbo::numerical_error& e) {
        return fail_json("numerical-failure", e.what());
    } catch (const std::exception& e) {
        return fail_json("internal", e.what());
    }
    return 0;
}
