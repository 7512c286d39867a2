#ifndef PROFBO_LOOPS_HPP
#define PROFBO_LOOPS_HPP

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "profbo/blackbox.hpp"
#include "profbo/design.hpp"
#include "profbo/metrics.hpp"
#include "profbo/optim.hpp"
#include "profbo/profile.hpp"
#include "profbo/surrogate.hpp"

namespace profbo {

enum class Method { lhs, bo_ei, pei, pbo };

inline std::string method_name(Method m) {
    switch (m) {
        case Method::lhs: return "lhs";
        case Method::bo_ei: return "bo_ei";
        case Method::pei: return "pei";
        case Method::pbo: return "pbo";
    }
    return "?";
}

inline Method method_from_name(const std::string& s) {
    if (s == "lhs") return Method::lhs;
    if (s == "bo_ei") return Method::bo_ei;
    if (s == "pei") return Method::pei;
    if (s == "pbo") return Method::pbo;
    throw config_error("unknown method: " + s);
}

struct AcquisitionRecord {
    int iteration = 0;           // dataset size before this acquisition
    Eigen::VectorXd x_next;
    double xstar_next = 0.0;
    double criterion_value = 0.0;
    Method method = Method::pbo;
    bool zero_utility = false;
};

struct LoopConfig {
    int axis_loop = 50;     // LHS control axis size inside the loop
    int axis_final = 100;   // evenly spaced control axis for the output
    int samples = 1000;     // joint posterior samples per estimate
    int cond_size = 40;
    double fringe_frac = 0.9;
    bool record_initial_estimate = true;
    int bo_multistarts = 20;
    double duplicate_tol = 1e-12;
    std::string checkpoint_path;  // written when a surrogate fit fails mid-loop
};

struct LoopResult {
    Dataset data;
    ProfileEstimate final_estimate;
    std::optional<ProfileEstimate> initial_estimate;
    std::vector<AcquisitionRecord> records;
};

namespace detail {

inline bool is_duplicate_row(const Eigen::MatrixXd& X, const Eigen::VectorXd& x, double tol) {
    for (int i = 0; i < X.rows(); ++i)
        if ((X.row(i).transpose() - x).lpNorm<Eigen::Infinity>() <= tol) return true;
    return false;
}

/// Raw-scale pointwise moments through the dataset's standardization record.
inline PointwiseFn raw_pointwise(const Surrogate& sur) {
    return [&sur](const Eigen::MatrixXd& Xp) {
        PointwiseMoments m = sur.pointwise_std(Xp);
        const Dataset& d = sur.data();
        m.mean = d.destandardize(m.mean);
        m.sd *= d.y_sd;
        return m;
    };
}

inline ProfileEstimate estimate_at_axis(const Surrogate& sur, const Eigen::MatrixXd& X,
                                        int control_index, const Eigen::VectorXd& axis,
                                        const LoopConfig& cfg, Rng& rng) {
    CandidateSet cands = tricands_plus(X, control_index, axis, cfg.fringe_frac);
    JointSamples samples = sur.sample_joint_std(cands.full, cfg.samples, cfg.cond_size, rng);
    const Dataset& d = sur.data();
    samples.draws = (samples.draws.array() * d.y_sd + d.y_mean).matrix();
    return estimate_profile(samples, cands);
}

inline void checkpoint_on_failure(const Surrogate& sur, const LoopConfig& cfg) {
    if (cfg.checkpoint_path.empty()) return;
    std::ofstream out(cfg.checkpoint_path);
    if (out) out << sur.checkpoint().dump(2) << "\n";
}

template <typename RefitFn>
void refit_or_abort(Surrogate& sur, RefitFn&& refit, const LoopConfig& cfg) {
    try {
        refit();
    } catch (const std::exception&) {
        checkpoint_on_failure(sur, cfg);
        throw;
    }
}

} // namespace detail

/// Sequential profile Bayesian optimization: per iteration, estimate the
/// profile on a re-randomized LHS control axis, pick the control value with
/// the widest credible band, then maximize PEI over the tricands on that
/// slice. The returned estimate uses the evenly spaced final axis.
inline LoopResult pbo_loop(const BlackBox& fn, const Dataset& init, int m,
                           Surrogate& sur, const LoopConfig& cfg, std::uint64_t seed) {
    if (m < init.n()) throw invalid_argument("pbo_loop: budget below initial design size");
    LoopResult res;
    res.data = init;
    sur.fit(res.data, stream_seed(seed, {0xf17, 0}));

    if (cfg.record_initial_estimate) {
        Rng rng(seed, {0x1e57, 0});
        res.initial_estimate = detail::estimate_at_axis(
            sur, res.data.X, res.data.control_index, evenly_spaced(cfg.axis_final), cfg, rng);
    }

    for (int it = init.n(); it < m; ++it) {
        const std::uint64_t itu = static_cast<std::uint64_t>(it);
        Rng axis_rng(seed, {0xa715, itu});
        Rng samp_rng(seed, {0x5a3b, itu});

        const Eigen::VectorXd axis = lhs_axis(cfg.axis_loop, axis_rng);
        CandidateSet cands =
            tricands_plus(res.data.X, res.data.control_index, axis, cfg.fringe_frac);
        JointSamples samples =
            sur.sample_joint_std(cands.full, cfg.samples, cfg.cond_size, samp_rng);
        samples.draws = (samples.draws.array() * res.data.y_sd + res.data.y_mean).matrix();
        const ProfileEstimate est = estimate_profile(samples, cands);

        const XstarSelection xsel = select_xstar(est);
        const double y_min = res.data.y.minCoeff();
        NuisanceSelection nsel =
            select_nuisance(detail::raw_pointwise(sur), xsel.xstar, cands.tri_cands,
                            res.data.control_index, y_min, est.mu_T[xsel.index]);

        // never re-evaluate a point: walk down the PEI ranking if needed
        if (detail::is_duplicate_row(res.data.X, nsel.x_full, cfg.duplicate_tol)) {
            const PointwiseMoments mom = detail::raw_pointwise(sur)(cands.full);
            std::vector<int> order(cands.full.rows());
            std::iota(order.begin(), order.end(), 0);
            std::vector<double> pei(cands.full.rows());
            for (int i = 0; i < cands.full.rows(); ++i) {
                const int slice = i / cands.n_per_slice();
                pei[i] = profile_expected_improvement(mom.mean[i], mom.sd[i], y_min,
                                                      est.mu_T[slice]);
            }
            std::stable_sort(order.begin(), order.end(),
                             [&](int a, int b) { return pei[a] > pei[b]; });
            for (int i : order) {
                Eigen::VectorXd cand = cands.full.row(i).transpose();
                if (!detail::is_duplicate_row(res.data.X, cand, cfg.duplicate_tol)) {
                    nsel.x_full = cand;
                    nsel.pei = pei[i];
                    break;
                }
            }
        }

        AcquisitionRecord rec;
        rec.iteration = it;
        rec.x_next = nsel.x_full;
        rec.xstar_next = nsel.x_full[res.data.control_index];
        rec.criterion_value = nsel.pei;
        rec.method = Method::pbo;
        rec.zero_utility = nsel.zero_utility;
        res.records.push_back(rec);

        res.data.append(nsel.x_full, eval_function(fn, nsel.x_full));
        detail::refit_or_abort(
            sur, [&] { sur.refit(res.data, stream_seed(seed, {0xf17, itu + 1})); }, cfg);
    }

    Rng final_rng(seed, {0x1e57, 1});
    res.final_estimate = detail::estimate_at_axis(
        sur, res.data.X, res.data.control_index, evenly_spaced(cfg.axis_final), cfg, final_rng);
    return res;
}

/// Classic Bayesian optimization comparator: maximize EI over the unit cube
/// by multistart local search; profile estimates only at the start/end.
inline LoopResult bo_ei_loop(const BlackBox& fn, const Dataset& init, int m,
                             Surrogate& sur, const LoopConfig& cfg, std::uint64_t seed) {
    if (m < init.n()) throw invalid_argument("bo_ei_loop: budget below initial design size");
    LoopResult res;
    res.data = init;
    sur.fit(res.data, stream_seed(seed, {0xf17, 0}));

    if (cfg.record_initial_estimate) {
        Rng rng(seed, {0x1e57, 0});
        res.initial_estimate = detail::estimate_at_axis(
            sur, res.data.X, res.data.control_index, evenly_spaced(cfg.axis_final), cfg, rng);
    }

    const int d = init.dim();
    const Eigen::VectorXd lo = Eigen::VectorXd::Zero(d);
    const Eigen::VectorXd hi = Eigen::VectorXd::Ones(d);
    NelderMeadOptions nm;
    nm.max_iter = 250;
    nm.initial_step = 0.08;

    for (int it = init.n(); it < m; ++it) {
        const std::uint64_t itu = static_cast<std::uint64_t>(it);
        const double y_min = res.data.y.minCoeff();
        const PointwiseFn pw = detail::raw_pointwise(sur);
        auto neg_ei = [&](const Eigen::VectorXd& x) {
            const PointwiseMoments mom = pw(x.transpose());
            return -expected_improvement(mom.mean[0], mom.sd[0], y_min);
        };

        Rng start_rng(seed, {0xb0e1, itu});
        const Eigen::MatrixXd starts = lhs_sample(cfg.bo_multistarts, d, start_rng);
        Eigen::VectorXd best_x = starts.row(0).transpose();
        double best_v = std::numeric_limits<double>::infinity();
        for (int s = 0; s < starts.rows(); ++s) {
            OptimResult r = nelder_mead_box(neg_ei, starts.row(s).transpose(), lo, hi, nm);
            if (r.value < best_v &&
                !detail::is_duplicate_row(res.data.X, r.x, cfg.duplicate_tol)) {
                best_v = r.value;
                best_x = r.x;
            }
        }
        if (detail::is_duplicate_row(res.data.X, best_x, cfg.duplicate_tol)) {
            // flat EI landed on data; fall back to the best non-duplicate start
            for (int s = 0; s < starts.rows(); ++s) {
                Eigen::VectorXd cand = starts.row(s).transpose();
                if (!detail::is_duplicate_row(res.data.X, cand, cfg.duplicate_tol)) {
                    best_x = cand;
                    best_v = neg_ei(cand);
                    break;
                }
            }
        }

        AcquisitionRecord rec;
        rec.iteration = it;
        rec.x_next = best_x;
        rec.xstar_next = best_x[res.data.control_index];
        rec.criterion_value = -best_v;
        rec.method = Method::bo_ei;
        rec.zero_utility = !(-best_v > 0.0);
        res.records.push_back(rec);

        res.data.append(best_x, eval_function(fn, best_x));
        detail::refit_or_abort(
            sur, [&] { sur.refit(res.data, stream_seed(seed, {0xf17, itu + 1})); }, cfg);
    }

    Rng final_rng(seed, {0x1e57, 1});
    res.final_estimate = detail::estimate_at_axis(
        sur, res.data.X, res.data.control_index, evenly_spaced(cfg.axis_final), cfg, final_rng);
    return res;
}

/// Single-stage profile-EI comparator: maximize PEI over the entire
/// candidate set each iteration.
inline LoopResult pei_loop(const BlackBox& fn, const Dataset& init, int m,
                           Surrogate& sur, const LoopConfig& cfg, std::uint64_t seed) {
    if (m < init.n()) throw invalid_argument("pei_loop: budget below initial design size");
    LoopResult res;
    res.data = init;
    sur.fit(res.data, stream_seed(seed, {0xf17, 0}));

    if (cfg.record_initial_estimate) {
        Rng rng(seed, {0x1e57, 0});
        res.initial_estimate = detail::estimate_at_axis(
            sur, res.data.X, res.data.control_index, evenly_spaced(cfg.axis_final), cfg, rng);
    }

    for (int it = init.n(); it < m; ++it) {
        const std::uint64_t itu = static_cast<std::uint64_t>(it);
        Rng axis_rng(seed, {0xa715, itu});
        Rng samp_rng(seed, {0x5a3b, itu});

        const Eigen::VectorXd axis = lhs_axis(cfg.axis_loop, axis_rng);
        CandidateSet cands =
            tricands_plus(res.data.X, res.data.control_index, axis, cfg.fringe_frac);
        JointSamples samples =
            sur.sample_joint_std(cands.full, cfg.samples, cfg.cond_size, samp_rng);
        samples.draws = (samples.draws.array() * res.data.y_sd + res.data.y_mean).matrix();
        const ProfileEstimate est = estimate_profile(samples, cands);

        const double y_min = res.data.y.minCoeff();
        const PointwiseMoments mom = detail::raw_pointwise(sur)(cands.full);
        int best_i = 0;
        double best_v = -1.0;
        for (int i = 0; i < cands.full.rows(); ++i) {
            const int slice = i / cands.n_per_slice();
            const double v = profile_expected_improvement(mom.mean[i], mom.sd[i], y_min,
                                                          est.mu_T[slice]);
            Eigen::VectorXd cand = cands.full.row(i).transpose();
            if (v > best_v && !detail::is_duplicate_row(res.data.X, cand, cfg.duplicate_tol)) {
                best_v = v;
                best_i = i;
            }
        }

        AcquisitionRecord rec;
        rec.iteration = it;
        rec.x_next = cands.full.row(best_i).transpose();
        rec.xstar_next = rec.x_next[res.data.control_index];
        rec.criterion_value = std::max(best_v, 0.0);
        rec.method = Method::pei;
        rec.zero_utility = !(best_v > 0.0);
        res.records.push_back(rec);

        res.data.append(rec.x_next, eval_function(fn, rec.x_next));
        detail::refit_or_abort(
            sur, [&] { sur.refit(res.data, stream_seed(seed, {0xf17, itu + 1})); }, cfg);
    }

    Rng final_rng(seed, {0x1e57, 1});
    res.final_estimate = detail::estimate_at_axis(
        sur, res.data.X, res.data.control_index, evenly_spaced(cfg.axis_final), cfg, final_rng);
    return res;
}

/// Space-filling baseline: a fresh LHS of the full budget, one fit, one
/// estimate. Shares its design stream across surrogates so GP and DGP run
/// on identical designs.
inline LoopResult lhs_run(const BlackBox& fn, int m, int control_index,
                          Surrogate& sur, const LoopConfig& cfg, std::uint64_t seed) {
    if (m < 2) throw invalid_argument("lhs_run: need a budget of at least 2");
    LoopResult res;
    Rng design_rng(seed, {0xde51, 0});
    const Eigen::MatrixXd X = lhs_sample(m, fn.dim, design_rng);
    res.data = make_dataset(X, [&](const Eigen::VectorXd& x) { return eval_function(fn, x); },
                            control_index);
    sur.fit(res.data, stream_seed(seed, {0xf17, 0}));
    Rng final_rng(seed, {0x1e57, 1});
    res.final_estimate = detail::estimate_at_axis(
        sur, res.data.X, res.data.control_index, evenly_spaced(cfg.axis_final), cfg, final_rng);
    return res;
}

inline LoopResult run_method(Method method, const BlackBox& fn, const Dataset& init, int m,
                             Surrogate& sur, const LoopConfig& cfg, std::uint64_t seed) {
    switch (method) {
        case Method::pbo: return pbo_loop(fn, init, m, sur, cfg, seed);
        case Method::bo_ei: return bo_ei_loop(fn, init, m, sur, cfg, seed);
        case Method::pei: return pei_loop(fn, init, m, sur, cfg, seed);
        case Method::lhs: return lhs_run(fn, m, init.control_index, sur, cfg, seed);
    }
    throw config_error("run_method: unknown method");
}

} // namespace profbo

#endif
