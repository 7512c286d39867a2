#ifndef PROFBO_GP_HPP
#define PROFBO_GP_HPP

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <utility>

#include "profbo/dataset.hpp"
#include "profbo/matern.hpp"
#include "profbo/optim.hpp"

namespace profbo {

namespace detail {

inline std::pair<int, int> closest_pair(const Eigen::MatrixXd& X) {
    int bi = 0, bj = 1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < X.rows(); ++i)
        for (int j = i + 1; j < X.rows(); ++j) {
            const double d = (X.row(i) - X.row(j)).squaredNorm();
            if (d < best) { best = d; bi = i; bj = j; }
        }
    return {bi, bj};
}

/// Cholesky with bounded jitter escalation: the nugget is inflated x10 up to
/// `max_nugget` until the factorization succeeds. Throws numerical_error
/// naming the closest pair of rows if even that fails.
inline Eigen::LLT<Eigen::MatrixXd> chol_with_jitter(const Eigen::MatrixXd& C_unit_diag,
                                                    const Eigen::MatrixXd& X,
                                                    double nugget, double max_nugget,
                                                    double* nugget_used) {
    double g = nugget;
    while (true) {
        Eigen::MatrixXd K = C_unit_diag;
        K.diagonal().array() += g;
        Eigen::LLT<Eigen::MatrixXd> llt(K);
        if (llt.info() == Eigen::Success) {
            if (nugget_used) *nugget_used = g;
            return llt;
        }
        if (g >= max_nugget) break;
        g = std::min(g * 10.0, max_nugget);
    }
    auto [i, j] = closest_pair(X);
    std::ostringstream msg;
    msg << "covariance not positive definite after nugget escalation to " << max_nugget
        << "; nearest rows are " << i << " and " << j
        << " at distance " << (X.row(i) - X.row(j)).norm();
    throw numerical_error(msg.str());
}

} // namespace detail

/// Trained GP surrogate on standardized responses. Immutable after
/// construction; safe to share across threads.
struct GPFit {
    Dataset data;               // carries the standardization record
    Eigen::VectorXd y_std;      // cached standardized responses
    Hyperparameters hyp;
    Eigen::MatrixXd chol_L;     // lower Cholesky factor of corr + g*I
    Eigen::VectorXd alpha;      // (corr + g*I)^{-1} y_std
    double nugget_used = 1e-6;
    double loglik = 0.0;        // profiled log marginal likelihood
};

/// Profiled log marginal likelihood of standardized responses for given
/// lengthscales: the scale tau2 is maximized analytically. Returns the
/// likelihood value and the profiled tau2.
inline std::pair<double, double> profile_loglik(const Eigen::MatrixXd& X,
                                                const Eigen::VectorXd& y_std,
                                                const Hyperparameters& hyp,
                                                double tau2_floor = 1e-12) {
    const int n = static_cast<int>(X.rows());
    Eigen::MatrixXd C = corr_matrix(X, hyp);
    C.diagonal().array() += hyp.nugget;
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    if (llt.info() != Eigen::Success)
        return {-std::numeric_limits<double>::infinity(), tau2_floor};
    const Eigen::VectorXd alpha = llt.solve(y_std);
    const double quad = y_std.dot(alpha);
    const double tau2 = std::max(quad / n, tau2_floor);
    double logdet = 0.0;
    for (int i = 0; i < n; ++i) logdet += std::log(llt.matrixL()(i, i));
    logdet *= 2.0;
    const double ll = -0.5 * n * std::log(tau2) - 0.5 * logdet
                    - 0.5 * n * (1.0 + std::log(2.0 * std::numbers::pi));
    return {ll, tau2};
}

struct GpFitOptions {
    int multistarts = 5;
    double ls_lower = 1e-2;
    double ls_upper = 5.0;
    Smoothness nu = Smoothness::matern52;
    double max_nugget = 1e-4;
};

/// Maximum-likelihood GP fit: deterministic multistart Nelder-Mead over
/// log-lengthscales with the scale profiled out. Rejects duplicate rows
/// (a deterministic simulator is never re-evaluated at the same point).
inline GPFit fit_gp(const Dataset& data, double nugget = 1e-6, const GpFitOptions& opt = {}) {
    const int n = data.n(), d = data.dim();
    if (n < 2) throw invalid_argument("fit_gp: need at least 2 observations");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if ((data.X.row(i) - data.X.row(j)).squaredNorm() < 1e-24) {
                std::ostringstream msg;
                msg << "fit_gp: duplicate design rows " << i << " and " << j;
                throw invalid_argument(msg.str());
            }

    const Eigen::VectorXd y_std = data.y_standardized();
    const double llo = std::log(opt.ls_lower), lhi = std::log(opt.ls_upper);

    Hyperparameters hyp;
    hyp.nugget = nugget;
    hyp.nu = opt.nu;
    hyp.lengthscales = Eigen::VectorXd::Ones(d);

    auto objective = [&](const Eigen::VectorXd& logls) {
        for (int j = 0; j < d; ++j)
            if (logls[j] < llo || logls[j] > lhi)
                return std::numeric_limits<double>::infinity();
        Hyperparameters h = hyp;
        h.lengthscales = logls.array().exp().matrix();
        return -profile_loglik(data.X, y_std, h).first;
    };

    // fixed spread of isotropic starts across the admissible range
    NelderMeadOptions nm;
    nm.max_iter = 200 + 40 * d;
    nm.f_tol = 1e-9;
    nm.x_tol = 1e-7;
    nm.initial_step = 0.4;

    double best_val = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_logls = Eigen::VectorXd::Zero(d);
    for (int s = 0; s < opt.multistarts; ++s) {
        const double frac = (s + 1.0) / (opt.multistarts + 1.0);
        Eigen::VectorXd x0 = Eigen::VectorXd::Constant(d, llo + frac * (lhi - llo));
        OptimResult r = nelder_mead(objective, x0, nm);
        if (r.value < best_val) { best_val = r.value; best_logls = r.x; }
    }
    best_logls = best_logls.cwiseMax(llo).cwiseMin(lhi);

    hyp.lengthscales = best_logls.array().exp().matrix();
    auto [ll, tau2] = profile_loglik(data.X, y_std, hyp);
    hyp.tau2 = tau2;

    GPFit fit;
    fit.data = data;
    fit.y_std = y_std;
    fit.hyp = hyp;
    Eigen::MatrixXd C = corr_matrix(data.X, hyp);
    auto llt = detail::chol_with_jitter(C, data.X, nugget, opt.max_nugget, &fit.nugget_used);
    fit.hyp.nugget = fit.nugget_used;
    fit.chol_L = llt.matrixL();
    fit.alpha = llt.solve(y_std);
    fit.loglik = ll;
    return fit;
}

/// Construct a GPFit from fixed hyperparameters (no likelihood search).
inline GPFit make_gp_fit(const Dataset& data, const Hyperparameters& hyp,
                         double max_nugget = 1e-4) {
    GPFit fit;
    fit.data = data;
    fit.y_std = data.y_standardized();
    fit.hyp = hyp;
    Eigen::MatrixXd C = corr_matrix(data.X, hyp);
    auto llt = detail::chol_with_jitter(C, data.X, hyp.nugget, max_nugget, &fit.nugget_used);
    fit.hyp.nugget = fit.nugget_used;
    fit.chol_L = llt.matrixL();
    fit.alpha = llt.solve(fit.y_std);
    fit.loglik = profile_loglik(data.X, fit.y_std, fit.hyp).first;
    return fit;
}

/// Exact joint posterior (standardized scale) at prediction rows Xp:
/// mean = K_pn K_nn^{-1} y, cov = K_pp - K_pn K_nn^{-1} K_np, with the
/// nugget on both square-matrix diagonals.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> posterior(const GPFit& fit,
                                                             const Eigen::MatrixXd& Xp) {
    if (Xp.cols() != fit.data.dim())
        throw invalid_argument("posterior: prediction dimension mismatch");
    const double tau2 = fit.hyp.tau2, g = fit.hyp.nugget;
    const Eigen::MatrixXd Cpn = cross_corr(Xp, fit.data.X, fit.hyp);
    Eigen::VectorXd mean = Cpn * fit.alpha;

    Eigen::MatrixXd Cpp = corr_matrix(Xp, fit.hyp);
    Cpp.diagonal().array() += g;
    const Eigen::MatrixXd V = fit.chol_L.triangularView<Eigen::Lower>().solve(Cpn.transpose());
    Eigen::MatrixXd cov = tau2 * (Cpp - V.transpose() * V);
    cov = 0.5 * (cov + cov.transpose()).eval();
    return {std::move(mean), std::move(cov)};
}

struct PointwiseMoments {
    Eigen::VectorXd mean;  // standardized scale
    Eigen::VectorXd sd;
};

/// Marginal posterior mean/sd per prediction row (no joint covariance).
inline PointwiseMoments posterior_pointwise(const GPFit& fit, const Eigen::MatrixXd& Xp) {
    if (Xp.cols() != fit.data.dim())
        throw invalid_argument("posterior_pointwise: prediction dimension mismatch");
    const double tau2 = fit.hyp.tau2, g = fit.hyp.nugget;
    const Eigen::MatrixXd Cpn = cross_corr(Xp, fit.data.X, fit.hyp);
    PointwiseMoments out;
    out.mean = Cpn * fit.alpha;
    const Eigen::MatrixXd V = fit.chol_L.triangularView<Eigen::Lower>().solve(Cpn.transpose());
    out.sd.resize(Xp.rows());
    for (int i = 0; i < Xp.rows(); ++i) {
        const double var = tau2 * (1.0 + g - V.col(i).squaredNorm());
        out.sd[i] = std::sqrt(std::max(var, 0.0));
    }
    return out;
}

} // namespace profbo

#endif
