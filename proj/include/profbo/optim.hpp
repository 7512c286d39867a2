#ifndef PROFBO_OPTIM_HPP
#define PROFBO_OPTIM_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "profbo/errors.hpp"

namespace profbo {

struct NelderMeadOptions {
    int max_iter = 400;
    double f_tol = 1e-10;
    double x_tol = 1e-10;
    double initial_step = 0.1;
};

struct OptimResult {
    Eigen::VectorXd x;
    double value = std::numeric_limits<double>::infinity();
    int evaluations = 0;
};

/// Derivative-free Nelder-Mead minimization. Deterministic for a fixed
/// starting point. The objective may return +inf to encode hard bounds;
/// the simplex contracts away from such points.
inline OptimResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                               const Eigen::VectorXd& x0,
                               const NelderMeadOptions& opt = {}) {
    const int n = static_cast<int>(x0.size());
    if (n < 1) throw invalid_argument("nelder_mead: empty start point");

    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    int evals = 0;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++evals;
        double v = f(x);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };

    std::vector<Eigen::VectorXd> pts(n + 1, x0);
    std::vector<double> vals(n + 1);
    vals[0] = eval(x0);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd p = x0;
        p[i] += (x0[i] != 0.0) ? opt.initial_step * std::max(std::abs(x0[i]), 1.0)
                               : opt.initial_step;
        pts[i + 1] = p;
        vals[i + 1] = eval(p);
    }

    std::vector<int> order(n + 1);
    for (int it = 0; it < opt.max_iter; ++it) {
        for (int i = 0; i <= n; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return vals[a] < vals[b]; });
        const int best = order[0], worst = order[n], second_worst = order[n - 1];

        if (std::abs(vals[worst] - vals[best]) < opt.f_tol) {
            double spread = 0.0;
            for (int i = 1; i <= n; ++i)
                spread = std::max(spread, (pts[order[i]] - pts[best]).lpNorm<Eigen::Infinity>());
            if (spread < opt.x_tol) break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i <= n; ++i)
            if (i != worst) centroid += pts[i];
        centroid /= n;

        Eigen::VectorXd xr = centroid + alpha * (centroid - pts[worst]);
        double fr = eval(xr);
        if (fr < vals[best]) {
            Eigen::VectorXd xe = centroid + gamma * (xr - centroid);
            double fe = eval(xe);
            if (fe < fr) { pts[worst] = xe; vals[worst] = fe; }
            else         { pts[worst] = xr; vals[worst] = fr; }
        } else if (fr < vals[second_worst]) {
            pts[worst] = xr; vals[worst] = fr;
        } else {
            Eigen::VectorXd xc = centroid + rho * (pts[worst] - centroid);
            double fc = eval(xc);
            if (fc < vals[worst]) { pts[worst] = xc; vals[worst] = fc; }
            else {
                for (int i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    pts[i] = pts[best] + sigma * (pts[i] - pts[best]);
                    vals[i] = eval(pts[i]);
                }
            }
        }
    }

    int best = 0;
    for (int i = 1; i <= n; ++i)
        if (vals[i] < vals[best]) best = i;
    return {pts[best], vals[best], evals};
}

/// Minimize over the box [lo, hi]^n: evaluations outside the box are
/// rejected with +inf, and the returned point is clamped.
inline OptimResult nelder_mead_box(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x0,
                                   const Eigen::VectorXd& lo,
                                   const Eigen::VectorXd& hi,
                                   const NelderMeadOptions& opt = {}) {
    auto wrapped = [&](const Eigen::VectorXd& x) {
        for (int j = 0; j < x.size(); ++j)
            if (x[j] < lo[j] || x[j] > hi[j])
                return std::numeric_limits<double>::infinity();
        return f(x);
    };
    Eigen::VectorXd start = x0.cwiseMax(lo).cwiseMin(hi);
    OptimResult r = nelder_mead(wrapped, start, opt);
    r.x = r.x.cwiseMax(lo).cwiseMin(hi);
    return r;
}

} // namespace profbo

#endif
