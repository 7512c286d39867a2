#ifndef PROFBO_DGP_HPP
#define PROFBO_DGP_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <vector>

#include "profbo/dataset.hpp"
#include "profbo/gp.hpp"
#include "profbo/vecchia.hpp"

namespace profbo {

// ---------------------------------------------------------------------------
// Elliptical slice sampling
// ---------------------------------------------------------------------------

/// Point on the ellipse through `w` and auxiliary draw `nu`, both centered
/// at the prior mean: mu + (w - mu) cos(theta) + nu sin(theta).
inline Eigen::VectorXd ess_point(const Eigen::VectorXd& w, const Eigen::VectorXd& mu,
                                 const Eigen::VectorXd& nu, double theta) {
    return mu + (w - mu) * std::cos(theta) + nu * std::sin(theta);
}

/// One elliptical slice sampling transition for a latent vector with prior
/// N(mu, L L^T). Rejection-free: the bracket shrinks toward theta = 0, so
/// termination is guaranteed (bounded here at `max_shrink` steps).
inline Eigen::VectorXd ess_update(const Eigen::VectorXd& w, const Eigen::VectorXd& mu,
                                  const Eigen::MatrixXd& prior_chol_L,
                                  const std::function<double(const Eigen::VectorXd&)>& loglik,
                                  Rng& rng, double* loglik_out = nullptr,
                                  int max_shrink = 100) {
    const int n = static_cast<int>(w.size());
    const double ll_cur = loglik(w);
    if (std::isnan(ll_cur))
        throw numerical_error("ess_update: log-likelihood is NaN at the current state");

    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = rng.normal();
    const Eigen::VectorXd nu = prior_chol_L.triangularView<Eigen::Lower>() * z;

    const double log_u = ll_cur + std::log(rng.uniform());
    double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    double lo = theta - 2.0 * std::numbers::pi;
    double hi = theta;

    for (int step = 0; step <= max_shrink; ++step) {
        const Eigen::VectorXd prop = ess_point(w, mu, nu, theta);
        const double ll = loglik(prop);
        if (std::isnan(ll))
            throw numerical_error("ess_update: log-likelihood is NaN at a proposal");
        if (ll > log_u) {
            if (loglik_out) *loglik_out = ll;
            return prop;
        }
        if (theta < 0.0) lo = theta; else hi = theta;
        theta = rng.uniform(lo, hi);
    }
    throw numerical_error("ess_update: bracket failed to shrink within limit");
}

// ---------------------------------------------------------------------------
// Two-layer DGP state
// ---------------------------------------------------------------------------

/// One retained posterior draw: the latent layer and the hyperparameters it
/// was sampled under. outer.tau2 holds the plugged-in scale for prediction.
struct DgpDraw {
    Eigen::MatrixXd W;       // n x d latent inputs of the outer layer
    Hyperparameters inner;   // kernel over X (tau2 fixed at 1)
    Hyperparameters outer;   // kernel over W
};

struct McmcLog {
    std::vector<double> loglik_trace;          // outer data log-likelihood per iteration
    Eigen::VectorXd accept_rate_inner;         // per inner lengthscale
    Eigen::VectorXd accept_rate_outer;         // per outer lengthscale
    int iterations = 0;
    int burn_in = 0;
};

/// Fitted two-layer deep GP. Latent nodes are conditionally independent with
/// prior mean mu_w = X; inference is by elliptical slice sampling on each
/// node interleaved with Metropolis moves on log-lengthscales.
struct DGPState {
    Dataset data;
    Eigen::VectorXd y_std;
    Eigen::MatrixXd mu_w;                // n x d prior mean for W (the inputs)
    std::vector<DgpDraw> draws;          // retained, thinned posterior draws
    Hyperparameters inner_hyp;           // last sampled values (warm restarts)
    Hyperparameters outer_hyp;
    Eigen::MatrixXd W_last;
    Eigen::VectorXd step_inner;          // adaptive MH step sizes, kept for restarts
    Eigen::VectorXd step_outer;
    McmcLog log;

    int retained() const { return static_cast<int>(draws.size()); }
};

struct DgpOptions {
    int retained = 100;
    double ls_lower = 1e-2;
    double ls_upper = 5.0;
    double nugget = 1e-6;
    Smoothness nu = Smoothness::matern52;
    double target_accept = 0.4;
    int adapt_batch = 50;
    int divergence_limit = 50;
};

namespace detail {

/// Outer-layer data log-likelihood with the scale integrated out under the
/// reference prior: -(1/2) log|C+gI| - (n/2) log(y' (C+gI)^{-1} y).
/// Returns -inf when the factorization fails. `tau2_hat` receives the
/// plug-in scale estimate.
inline double outer_marginal_loglik(const Eigen::MatrixXd& W, const Eigen::VectorXd& y_std,
                                    const Hyperparameters& outer, double* tau2_hat = nullptr) {
    const int n = static_cast<int>(W.rows());
    Eigen::MatrixXd C = corr_matrix(W, outer);
    C.diagonal().array() += outer.nugget;
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const double quad = y_std.dot(llt.solve(y_std));
    if (!(quad > 0.0)) return -std::numeric_limits<double>::infinity();
    double logdet = 0.0;
    for (int i = 0; i < n; ++i) logdet += std::log(llt.matrixL()(i, i));
    if (tau2_hat) *tau2_hat = quad / n;
    return -logdet - 0.5 * n * std::log(quad);
}

/// Prior log-density of all latent nodes (up to constants):
/// sum_i -(1/2) (w_i - mu_i)' (C+gI)^{-1} (w_i - mu_i) - (d/2) log|C+gI|.
inline double latent_prior_loglik(const Eigen::MatrixXd& W, const Eigen::MatrixXd& mu_w,
                                  const Eigen::LLT<Eigen::MatrixXd>& llt_in) {
    const int n = static_cast<int>(W.rows());
    const int d = static_cast<int>(W.cols());
    const Eigen::MatrixXd resid = W - mu_w;
    const Eigen::MatrixXd sol = llt_in.solve(resid);
    double quad = 0.0;
    for (int j = 0; j < d; ++j) quad += resid.col(j).dot(sol.col(j));
    double logdet = 0.0;
    for (int i = 0; i < n; ++i) logdet += std::log(llt_in.matrixL()(i, i));
    return -0.5 * quad - d * logdet;
}

} // namespace detail

namespace detail {

struct DgpMcmcCounters {
    Eigen::VectorXi inner_acc, inner_try, outer_acc, outer_try;
};

/// Run `iters` MCMC sweeps from the current state of `st`, appending to the
/// log. Adaptation of MH steps happens during the first `adapt_until`
/// iterations only. `snapshot` (if set) is called after each sweep with the
/// zero-based sweep index within this run.
inline void dgp_mcmc_run(DGPState& st, int iters, int adapt_until, Rng& rng,
                         const DgpOptions& opt,
                         const std::function<void(int, const Eigen::MatrixXd&,
                                                  const Hyperparameters&,
                                                  const Hyperparameters&)>& snapshot = {}) {
    const int n = st.data.n();
    const int d = st.data.dim();
    const double llo = std::log(opt.ls_lower), lhi = std::log(opt.ls_upper);

    Eigen::MatrixXd W = st.W_last;
    Hyperparameters inner = st.inner_hyp;
    Hyperparameters outer = st.outer_hyp;

    auto inner_corr_llt = [&](const Hyperparameters& h) {
        Eigen::MatrixXd C = corr_matrix(st.data.X, h);
        C.diagonal().array() += h.nugget;
        return Eigen::LLT<Eigen::MatrixXd>(C);
    };

    Eigen::LLT<Eigen::MatrixXd> llt_in = inner_corr_llt(inner);
    if (llt_in.info() != Eigen::Success)
        throw numerical_error("fit_dgp: inner correlation matrix not positive definite");
    Eigen::MatrixXd L_in = llt_in.matrixL();

    double ll_outer = detail::outer_marginal_loglik(W, st.y_std, outer);
    double lp_latent = detail::latent_prior_loglik(W, st.mu_w, llt_in);

    DgpMcmcCounters cnt;
    cnt.inner_acc = Eigen::VectorXi::Zero(d);
    cnt.inner_try = Eigen::VectorXi::Zero(d);
    cnt.outer_acc = Eigen::VectorXi::Zero(d);
    cnt.outer_try = Eigen::VectorXi::Zero(d);
    Eigen::VectorXi batch_inner_acc = Eigen::VectorXi::Zero(d);
    Eigen::VectorXi batch_outer_acc = Eigen::VectorXi::Zero(d);
    int divergent_streak = 0;

    for (int it = 0; it < iters; ++it) {
        // --- latent nodes by elliptical slice sampling ---
        for (int j = 0; j < d; ++j) {
            auto node_loglik = [&](const Eigen::VectorXd& wj) {
                Eigen::MatrixXd Wp = W;
                Wp.col(j) = wj;
                return detail::outer_marginal_loglik(Wp, st.y_std, outer);
            };
            double ll_new = ll_outer;
            W.col(j) = ess_update(W.col(j), st.mu_w.col(j), L_in, node_loglik, rng, &ll_new);
            ll_outer = ll_new;
        }
        lp_latent = detail::latent_prior_loglik(W, st.mu_w, llt_in);

        // --- inner lengthscales: univariate random-walk Metropolis ---
        for (int j = 0; j < d; ++j) {
            cnt.inner_try[j]++;
            const double cur = std::log(inner.lengthscales[j]);
            const double prop = cur + st.step_inner[j] * rng.normal();
            const double u = rng.uniform();
            if (prop < llo || prop > lhi) continue;
            Hyperparameters cand = inner;
            cand.lengthscales[j] = std::exp(prop);
            Eigen::LLT<Eigen::MatrixXd> llt_cand = inner_corr_llt(cand);
            if (llt_cand.info() != Eigen::Success) continue;
            const double lp_cand = detail::latent_prior_loglik(W, st.mu_w, llt_cand);
            if (std::log(u) < lp_cand - lp_latent) {
                inner = cand;
                llt_in = llt_cand;
                L_in = llt_in.matrixL();
                lp_latent = lp_cand;
                cnt.inner_acc[j]++;
                batch_inner_acc[j]++;
            }
        }

        // --- outer lengthscales ---
        for (int j = 0; j < d; ++j) {
            cnt.outer_try[j]++;
            const double cur = std::log(outer.lengthscales[j]);
            const double prop = cur + st.step_outer[j] * rng.normal();
            const double u = rng.uniform();
            if (prop < llo || prop > lhi) continue;
            Hyperparameters cand = outer;
            cand.lengthscales[j] = std::exp(prop);
            const double ll_cand = detail::outer_marginal_loglik(W, st.y_std, cand);
            if (std::log(u) < ll_cand - ll_outer) {
                outer = cand;
                ll_outer = ll_cand;
                cnt.outer_acc[j]++;
                batch_outer_acc[j]++;
            }
        }

        // --- batched step adaptation (burn-in only) ---
        const int total_it = st.log.iterations + it + 1;
        if (it < adapt_until && total_it % opt.adapt_batch == 0) {
            const double scale = 1.0 / std::sqrt(static_cast<double>(total_it / opt.adapt_batch));
            for (int j = 0; j < d; ++j) {
                const double ri = batch_inner_acc[j] / static_cast<double>(opt.adapt_batch);
                const double ro = batch_outer_acc[j] / static_cast<double>(opt.adapt_batch);
                st.step_inner[j] *= std::exp(scale * (ri - opt.target_accept));
                st.step_outer[j] *= std::exp(scale * (ro - opt.target_accept));
                st.step_inner[j] = std::clamp(st.step_inner[j], 1e-3, 5.0);
                st.step_outer[j] = std::clamp(st.step_outer[j], 1e-3, 5.0);
            }
            batch_inner_acc.setZero();
            batch_outer_acc.setZero();
        }

        st.log.loglik_trace.push_back(ll_outer);
        if (!std::isfinite(ll_outer)) {
            if (++divergent_streak >= opt.divergence_limit) {
                std::ostringstream msg;
                msg << "fit_dgp: chain diverged (" << opt.divergence_limit
                    << " consecutive non-finite log-likelihoods); recent trace:";
                const int m = static_cast<int>(st.log.loglik_trace.size());
                for (int i = std::max(0, m - 10); i < m; ++i)
                    msg << " " << st.log.loglik_trace[i];
                throw numerical_error(msg.str());
            }
        } else {
            divergent_streak = 0;
        }
        if (snapshot) snapshot(it, W, inner, outer);
    }

    st.W_last = W;
    st.inner_hyp = inner;
    st.outer_hyp = outer;
    st.log.iterations += iters;
    st.log.accept_rate_inner =
        cnt.inner_acc.cast<double>().cwiseQuotient(cnt.inner_try.cast<double>().cwiseMax(1.0));
    st.log.accept_rate_outer =
        cnt.outer_acc.cast<double>().cwiseQuotient(cnt.outer_try.cast<double>().cwiseMax(1.0));
}

/// Evenly spaced iteration indices in [first, last), at most `count` of
/// them, ending at last-1.
inline std::vector<int> thin_indices(int first, int last, int count) {
    std::vector<int> idx;
    const int span = last - first;
    if (span <= 0 || count <= 0) return idx;
    const int take = std::min(span, count);
    idx.reserve(take);
    for (int k = 0; k < take; ++k)
        idx.push_back(first + static_cast<int>((k + 1.0) * span / take) - 1);
    return idx;
}

} // namespace detail

/// Fit a two-layer DGP by MCMC: `iters` sweeps, first half discarded as
/// burn-in, remainder thinned to opt.retained draws. With `warm_from` set,
/// the chain starts from that state's last sampled values and no burn-in
/// is discarded beyond the first half.
inline DGPState fit_dgp(const Dataset& data, int iters, std::uint64_t seed,
                        const DgpOptions& opt = {}, const DGPState* warm_from = nullptr) {
    const int n = data.n(), d = data.dim();
    if (n < 5) throw invalid_argument("fit_dgp: need at least 5 observations");
    if (iters < 2) throw invalid_argument("fit_dgp: need at least 2 iterations");

    DGPState st;
    st.data = data;
    st.y_std = data.y_standardized();
    st.mu_w = data.X;

    if (warm_from && warm_from->data.n() > 0) {
        const int n_old = warm_from->data.n();
        if (n_old > n || warm_from->data.dim() != d)
            throw invalid_argument("fit_dgp: warm start state incompatible with data");
        st.W_last = data.X;  // new rows start at the prior mean
        st.W_last.topRows(n_old) = warm_from->W_last;
        st.inner_hyp = warm_from->inner_hyp;
        st.outer_hyp = warm_from->outer_hyp;
        st.step_inner = warm_from->step_inner;
        st.step_outer = warm_from->step_outer;
    } else {
        st.W_last = data.X;  // identity warp start
        st.inner_hyp.tau2 = 1.0;
        st.inner_hyp.lengthscales = Eigen::VectorXd::Ones(d);
        st.inner_hyp.nugget = opt.nugget;
        st.inner_hyp.nu = opt.nu;
        st.outer_hyp = st.inner_hyp;
        st.step_inner = Eigen::VectorXd::Constant(d, 0.3);
        st.step_outer = Eigen::VectorXd::Constant(d, 0.3);
    }

    Rng rng(seed, {0xd69ULL});
    const int burn = iters / 2;
    const int adapt_until = warm_from ? iters / 4 : burn;

    // run the full chain; snapshot post-burn-in sweeps at the thinned indices
    std::vector<Eigen::MatrixXd> Ws;
    std::vector<Hyperparameters> inners, outers;
    Ws.reserve(std::min(iters - burn, opt.retained));
    const std::vector<int> keep = detail::thin_indices(burn, iters, opt.retained);
    std::size_t next_keep = 0;
    detail::dgp_mcmc_run(
        st, iters, adapt_until, rng, opt,
        [&](int it, const Eigen::MatrixXd& W, const Hyperparameters& in_h,
            const Hyperparameters& out_h) {
            if (next_keep < keep.size() && it == keep[next_keep]) {
                Ws.push_back(W);
                inners.push_back(in_h);
                outers.push_back(out_h);
                ++next_keep;
            }
        });
    st.draws.clear();
    st.draws.reserve(Ws.size());
    for (std::size_t k = 0; k < Ws.size(); ++k) {
        DgpDraw drw;
        drw.W = std::move(Ws[k]);
        drw.inner = inners[k];
        drw.outer = outers[k];
        double tau2 = 1.0;
        detail::outer_marginal_loglik(drw.W, st.y_std, drw.outer, &tau2);
        drw.outer.tau2 = tau2;
        st.draws.push_back(std::move(drw));
    }
    st.log.burn_in = burn;

    for (const auto& drw : st.draws)
        if (!drw.W.allFinite())
            throw numerical_error("fit_dgp: retained draw contains non-finite latent values");
    return st;
}

/// Continue from a previous fit after the data grew (warm restart).
inline DGPState refit_dgp(const DGPState& prev, const Dataset& data, int iters,
                          std::uint64_t seed, const DgpOptions& opt = {}) {
    return fit_dgp(data, iters, seed, opt, &prev);
}

/// Joint posterior draws of the response surface at Xp: for each retained
/// draw, the latent layer is extended to Xp by Vecchia sampling of each node
/// under the inner kernel, then `samples_per_draw` joint outer-layer samples
/// are drawn on the warped geometry. Total rows = retained * samples_per_draw.
/// Conditioning sets and visit order are planned once in the input geometry.
inline JointSamples dgp_sample_joint(const DGPState& st, const Eigen::MatrixXd& Xp,
                                     int samples_per_draw, int cond_size, Rng& rng) {
    if (st.retained() < 1)
        throw invalid_argument("dgp_sample_joint: state has no retained draws");
    if (samples_per_draw < 1)
        throw invalid_argument("dgp_sample_joint: samples_per_draw must be >= 1");
    if (Xp.cols() != st.data.dim())
        throw invalid_argument("dgp_sample_joint: prediction dimension mismatch");

    const int n = st.data.n();
    const int d = st.data.dim();
    const int np = static_cast<int>(Xp.rows());
    const int T = st.retained();

    const VecchiaPlan plan = build_vecchia_plan(st.data.X, Xp, cond_size);

    JointSamples out;
    out.locations = Xp;
    out.conditioning_size = cond_size;
    out.draws.resize(T * samples_per_draw, np);

    Eigen::MatrixXd inner_resid(d, n);   // node residuals as rows
    for (int t = 0; t < T; ++t) {
        const DgpDraw& drw = st.draws[t];

        // latent layer at Xp: one joint sample per node, shared weights
        for (int j = 0; j < d; ++j)
            inner_resid.row(j) = (drw.W.col(j) - st.mu_w.col(j)).transpose();
        Eigen::MatrixXd wp_resid = detail::vecchia_sample_residuals(
            st.data.X, inner_resid, Xp, drw.inner, d, plan, rng);
        Eigen::MatrixXd Wp = Xp;  // prior mean of the latent layer is the input
        Wp += wp_resid.transpose();

        // outer layer on the warped geometry
        const Eigen::MatrixXd resid_rows = st.y_std.transpose().replicate(samples_per_draw, 1);
        out.draws.middleRows(t * samples_per_draw, samples_per_draw) =
            detail::vecchia_sample_residuals(drw.W, resid_rows, Wp, drw.outer,
                                             samples_per_draw, plan, rng);
    }
    return out;
}

} // namespace profbo

#endif
