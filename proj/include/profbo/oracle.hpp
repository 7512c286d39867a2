#ifndef PROFBO_ORACLE_HPP
#define PROFBO_ORACLE_HPP

#include <Eigen/Dense>
#include <limits>

#include "profbo/blackbox.hpp"
#include "profbo/design.hpp"
#include "profbo/optim.hpp"
#include "profbo/rng.hpp"

namespace profbo {

namespace detail {

// Assemble the full unit-cube point from a control value and nuisance block.
inline Eigen::VectorXd insert_control(const Eigen::VectorXd& nuis, double xstar,
                                      int control_index) {
    Eigen::VectorXd x(nuis.size() + 1);
    int c = 0;
    for (int j = 0; j < x.size(); ++j)
        x[j] = (j == control_index) ? xstar : nuis[c++];
    return x;
}

} // namespace detail

struct OracleOptions {
    int grid_resolution = 201;  // per nuisance dimension when d-1 <= 2
    int multistarts = 50;       // Nelder-Mead starts when d-1 >= 3
    std::uint64_t seed = 20250901;
};

/// Ground-truth slice minimum: min over the nuisance cube of f at fixed
/// control value (unit scale). Dense grid plus local polish in low nuisance
/// dimension, multistart derivative-free search otherwise.
inline double true_slice_min(const BlackBox& fn, double xstar, const OracleOptions& opt = {}) {
    const int nd = fn.dim - 1;
    auto slice = [&](const Eigen::VectorXd& nuis) {
        return eval_function(fn, detail::insert_control(nuis, xstar, fn.control_index));
    };

    if (nd == 0)
        return eval_function(fn, Eigen::VectorXd::Constant(1, xstar));

    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x = Eigen::VectorXd::Constant(nd, 0.5);

    NelderMeadOptions nm;
    nm.max_iter = 600;
    nm.f_tol = 1e-13;
    nm.x_tol = 1e-10;
    nm.initial_step = 0.05;
    const Eigen::VectorXd lo = Eigen::VectorXd::Zero(nd);
    const Eigen::VectorXd hi = Eigen::VectorXd::Ones(nd);

    if (nd <= 2) {
        const int g = opt.grid_resolution;
        Eigen::VectorXd grid = evenly_spaced(g);
        Eigen::VectorXd p(nd);
        if (nd == 1) {
            for (int i = 0; i < g; ++i) {
                p[0] = grid[i];
                const double v = slice(p);
                if (v < best) { best = v; best_x = p; }
            }
        } else {
            for (int i = 0; i < g; ++i) {
                p[0] = grid[i];
                for (int j = 0; j < g; ++j) {
                    p[1] = grid[j];
                    const double v = slice(p);
                    if (v < best) { best = v; best_x = p; }
                }
            }
        }
        OptimResult polish = nelder_mead_box(slice, best_x, lo, hi, nm);
        return std::min(best, polish.value);
    }

    // higher nuisance dimension: coarse scan seeds + LHS multistarts
    Rng rng(opt.seed, {0x0eac1eULL, static_cast<std::uint64_t>(fn.dim)});
    Eigen::MatrixXd starts = lhs_sample(opt.multistarts, nd, rng);
    const int coarse = 7;
    Eigen::VectorXd cgrid = evenly_spaced(coarse);
    Eigen::VectorXd cp(nd);
    double coarse_best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd coarse_x = Eigen::VectorXd::Constant(nd, 0.5);
    std::vector<int> idx(nd, 0);
    while (true) {
        for (int j = 0; j < nd; ++j) cp[j] = cgrid[idx[j]];
        const double v = slice(cp);
        if (v < coarse_best) { coarse_best = v; coarse_x = cp; }
        int j = 0;
        while (j < nd && ++idx[j] == coarse) idx[j++] = 0;
        if (j == nd) break;
    }

    OptimResult r0 = nelder_mead_box(slice, coarse_x, lo, hi, nm);
    best = r0.value;
    for (int s = 0; s < opt.multistarts; ++s) {
        OptimResult r = nelder_mead_box(slice, starts.row(s).transpose(), lo, hi, nm);
        if (r.value < best) best = r.value;
    }
    return best;
}

/// Profile optima at each control value of `xstar_grid` (unit scale).
inline Eigen::VectorXd true_profile(const BlackBox& fn, const Eigen::VectorXd& xstar_grid,
                                    const OracleOptions& opt = {}) {
    Eigen::VectorXd T(xstar_grid.size());
    for (int i = 0; i < xstar_grid.size(); ++i)
        T[i] = true_slice_min(fn, xstar_grid[i], opt);
    return T;
}

} // namespace profbo

#endif
