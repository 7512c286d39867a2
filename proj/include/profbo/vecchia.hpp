#ifndef PROFBO_VECCHIA_HPP
#define PROFBO_VECCHIA_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "profbo/gp.hpp"
#include "profbo/rng.hpp"

namespace profbo {

/// Joint posterior realizations at a fixed location set: each row of
/// `draws` is one joint sample over all locations.
struct JointSamples {
    Eigen::MatrixXd locations;  // n_p x d
    Eigen::MatrixXd draws;      // S x n_p
    int conditioning_size = 0;
};

/// Greedy maximin ordering: start nearest the centroid, then repeatedly
/// pick the point farthest from everything already selected. Ties break to
/// the lowest index.
inline std::vector<int> maximin_ordering(const Eigen::MatrixXd& pts) {
    const int n = static_cast<int>(pts.rows());
    std::vector<int> order;
    order.reserve(n);
    if (n == 0) return order;

    const Eigen::RowVectorXd centroid = pts.colwise().mean();
    int first = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double d = (pts.row(i) - centroid).squaredNorm();
        if (d < best) { best = d; first = i; }
    }
    order.push_back(first);

    Eigen::VectorXd min_dist(n);
    for (int i = 0; i < n; ++i)
        min_dist[i] = (pts.row(i) - pts.row(first)).squaredNorm();
    min_dist[first] = -1.0;

    for (int k = 1; k < n; ++k) {
        int next = -1;
        double far = -1.0;
        for (int i = 0; i < n; ++i)
            if (min_dist[i] > far) { far = min_dist[i]; next = i; }
        order.push_back(next);
        min_dist[next] = -1.0;
        const Eigen::RowVectorXd p = pts.row(next);
        for (int i = 0; i < n; ++i) {
            if (min_dist[i] < 0.0) continue;
            const double d = (pts.row(i) - p).squaredNorm();
            if (d < min_dist[i]) min_dist[i] = d;
        }
    }
    return order;
}

/// Precomputed sampling schedule: the visit order of prediction locations
/// and, per visit, the conditioning set drawn from training points and
/// previously visited prediction points (nearest neighbors in the geometry
/// the plan was built from). Combined indices: t in [0, n_train) refers to
/// training row t; t >= n_train refers to the (t - n_train)-th visited
/// prediction location.
struct VecchiaPlan {
    std::vector<int> ordering;
    std::vector<std::vector<int>> cond;
    int n_train = 0;
};

inline VecchiaPlan build_vecchia_plan(const Eigen::MatrixXd& train_locs,
                                      const Eigen::MatrixXd& pred_locs,
                                      int cond_size,
                                      const std::vector<int>* ordering_override = nullptr) {
    if (cond_size < 1) throw invalid_argument("build_vecchia_plan: cond_size must be >= 1");
    const int n = static_cast<int>(train_locs.rows());
    const int np = static_cast<int>(pred_locs.rows());
    const int d = static_cast<int>(pred_locs.cols());
    if (n > 0 && train_locs.cols() != d)
        throw invalid_argument("build_vecchia_plan: dimension mismatch");

    VecchiaPlan plan;
    plan.n_train = n;
    plan.ordering = ordering_override ? *ordering_override : maximin_ordering(pred_locs);
    if (static_cast<int>(plan.ordering.size()) != np)
        throw invalid_argument("build_vecchia_plan: ordering length mismatch");
    plan.cond.resize(np);

    // combined coordinates in visit order: training rows then visited preds
    Eigen::MatrixXd combined(n + np, d);
    if (n > 0) combined.topRows(n) = train_locs;
    Eigen::VectorXd norms(n + np);
    for (int i = 0; i < n; ++i) norms[i] = combined.row(i).squaredNorm();

    std::vector<int> idx;
    std::vector<double> dist;
    Eigen::VectorXd dots;
    for (int k = 0; k < np; ++k) {
        const int loc = plan.ordering[k];
        const Eigen::RowVectorXd q = pred_locs.row(loc);
        const int m = n + k;  // points available to condition on
        const int take = std::min(cond_size, m);
        auto& c = plan.cond[k];
        if (take > 0) {
            dots.resize(m);
            dots.noalias() = combined.topRows(m) * q.transpose();
            idx.resize(m);
            std::iota(idx.begin(), idx.end(), 0);
            dist.resize(m);
            const double qn = q.squaredNorm();
            for (int i = 0; i < m; ++i) dist[i] = norms[i] + qn - 2.0 * dots[i];
            if (take < m)
                std::nth_element(idx.begin(), idx.begin() + take, idx.end(),
                                 [&](int a, int b) {
                                     return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
                                 });
            c.assign(idx.begin(), idx.begin() + take);
            std::sort(c.begin(), c.end());
        }
        combined.row(m) = q;
        norms[m] = q.squaredNorm();
    }
    return plan;
}

namespace detail {

/// In-place lower Cholesky on the leading m x m block (column major, lower
/// triangle only). Tight loops beat the general-purpose factorization at
/// conditioning-set sizes. Returns false when not positive definite.
inline bool small_chol_inplace(Eigen::MatrixXd& K, int m) {
    const Eigen::Index stride = K.rows();
    double* a = K.data();
    for (int j = 0; j < m; ++j) {
        double* colj = a + j * stride;
        for (int k = 0; k < j; ++k) {
            const double* colk = a + k * stride;
            const double ljk = colk[j];
            for (int i = j; i < m; ++i) colj[i] -= ljk * colk[i];
        }
        if (!(colj[j] > 0.0)) return false;
        const double inv = 1.0 / std::sqrt(colj[j]);
        for (int i = j; i < m; ++i) colj[i] *= inv;
    }
    return true;
}

/// Solve (L L^T) w = b given the in-place factor from small_chol_inplace.
inline void small_chol_solve(const Eigen::MatrixXd& K, int m, Eigen::VectorXd& b) {
    const Eigen::Index stride = K.rows();
    const double* a = K.data();
    double* x = b.data();
    for (int j = 0; j < m; ++j) {
        const double* colj = a + j * stride;
        x[j] /= colj[j];
        const double xj = x[j];
        for (int i = j + 1; i < m; ++i) x[i] -= xj * colj[i];
    }
    for (int j = m - 1; j >= 0; --j) {
        const double* colj = a + j * stride;
        double s = x[j];
        for (int i = j + 1; i < m; ++i) s -= colj[i] * x[i];
        x[j] = s / colj[j];
    }
}

/// Sequential conditional sampler core. Works on residuals about the prior
/// mean; conditional weights are recomputed per location from `hyp`, then
/// shared by all S draws. Training residuals are given per sample row
/// (S x n), which lets callers run S chains against S different conditioning
/// values in one pass. Combined geometry rows follow the plan's indexing.
inline Eigen::MatrixXd vecchia_sample_residuals(const Eigen::MatrixXd& train_locs,
                                                const Eigen::MatrixXd& train_resid_rows,
                                                const Eigen::MatrixXd& pred_locs,
                                                const Hyperparameters& hyp,
                                                int S, const VecchiaPlan& plan, Rng& rng) {
    const int n = static_cast<int>(train_locs.rows());
    const int np = static_cast<int>(pred_locs.rows());
    const double g = hyp.nugget, tau2 = hyp.tau2;
    if (plan.n_train != n)
        throw invalid_argument("vecchia_sample_residuals: plan built for different training size");
    if (train_resid_rows.rows() != S || train_resid_rows.cols() != n)
        throw invalid_argument("vecchia_sample_residuals: residual matrix must be S x n");

    // residual values per sample, columns in combined order
    Eigen::MatrixXd vals(S, n + np);
    if (n > 0) vals.leftCols(n) = train_resid_rows;

    // scaled coordinates once (kernel distances are lengthscale-scaled)
    Eigen::MatrixXd scaled(n + np, pred_locs.cols());
    if (n > 0) scaled.topRows(n) = scale_rows(train_locs, hyp.lengthscales);
    {
        Eigen::MatrixXd sp = scale_rows(pred_locs, hyp.lengthscales);
        for (int k = 0; k < np; ++k) scaled.row(n + k) = sp.row(plan.ordering[k]);
    }
    Eigen::VectorXd snorm = scaled.rowwise().squaredNorm();

    const bool m52 = hyp.nu == Smoothness::matern52;
    const double root = m52 ? std::sqrt(5.0) : std::sqrt(3.0);
    // in-place scaled-distance -> Matern transform, no temporaries
    auto matern_inplace = [&](auto&& seg) {
        seg = seg.max(0.0).sqrt() * root;
        if (m52)
            seg = (1.0 + seg + seg.square() / 3.0) * (-seg).exp();
        else
            seg = (1.0 + seg) * (-seg).exp();
    };

    Eigen::MatrixXd draws(S, np);
    Eigen::MatrixXd Kcc, gathered;
    Eigen::VectorXd kc, w, gnorm, z(S), mean_part(S);

    for (int k = 0; k < np; ++k) {
        const auto& c = plan.cond[k];
        const int m = static_cast<int>(c.size());
        const int self = n + k;
        double cond_var_corr = 1.0 + g;
        for (int s = 0; s < S; ++s) z[s] = rng.normal();

        if (m == 0) {
            const double sd = std::sqrt(tau2 * cond_var_corr);
            for (int s = 0; s < S; ++s) {
                const double v = sd * z[s];
                vals(s, self) = v;
                draws(s, plan.ordering[k]) = v;
            }
            continue;
        }

        gathered.resize(m, scaled.cols());
        gnorm.resize(m);
        for (int i = 0; i < m; ++i) {
            gathered.row(i) = scaled.row(c[i]);
            gnorm[i] = snorm[c[i]];
        }

        // correlation among the conditioning set (+ nugget): only the lower
        // triangle is built, which is all the factorization reads
        if (Kcc.rows() < m) Kcc.resize(m, m);
        auto K = Kcc.topLeftCorner(m, m);
        K.triangularView<Eigen::Lower>().setZero();
        K.selfadjointView<Eigen::Lower>().rankUpdate(gathered);
        for (int j = 0; j < m; ++j) {
            const int len = m - j;
            auto col = K.col(j).tail(len).array();
            col = gnorm.tail(len).array() + gnorm[j] - 2.0 * col;
            matern_inplace(col);
        }
        K.diagonal().setConstant(1.0 + g);

        kc.resize(m);
        kc.noalias() = gathered * scaled.row(self).transpose();
        kc = (gnorm.array() + snorm[self] - 2.0 * kc.array()).matrix();
        matern_inplace(kc.array());

        if (!small_chol_inplace(Kcc, m))
            throw numerical_error("vecchia: conditioning matrix not positive definite");
        w = kc;
        small_chol_solve(Kcc, m, w);
        cond_var_corr = 1.0 + g - kc.dot(w);
        if (cond_var_corr < -1e-8 * (1.0 + g))
            throw numerical_error("vecchia: negative conditional variance");
        const double sd = std::sqrt(tau2 * std::max(cond_var_corr, 0.0));

        mean_part.setZero();
        for (int i = 0; i < m; ++i) mean_part += w[i] * vals.col(c[i]);
        for (int s = 0; s < S; ++s) {
            const double v = mean_part[s] + sd * z[s];
            vals(s, self) = v;
            draws(s, plan.ordering[k]) = v;
        }
    }
    return draws;
}

} // namespace detail

/// Vecchia-approximated joint posterior samples from a fitted GP at rows of
/// Xp (standardized response scale). Locations are visited in maximin order
/// and each is drawn from its Gaussian conditional given the `cond_size`
/// nearest points among training data and previously sampled locations.
/// With cond_size >= n + n_p - 1 the sampler is exact.
inline JointSamples sample_joint(const GPFit& fit, const Eigen::MatrixXd& Xp, int S,
                                 int cond_size, Rng& rng,
                                 const VecchiaPlan* plan = nullptr) {
    if (S < 1) throw invalid_argument("sample_joint: S must be >= 1");
    if (Xp.cols() != fit.data.dim())
        throw invalid_argument("sample_joint: prediction dimension mismatch");
    Hyperparameters hyp = fit.hyp;
    VecchiaPlan local;
    if (!plan) {
        // nearest neighbors in lengthscale-scaled coordinates
        const Eigen::MatrixXd st = scale_rows(fit.data.X, hyp.lengthscales);
        const Eigen::MatrixXd sp = scale_rows(Xp, hyp.lengthscales);
        local = build_vecchia_plan(st, sp, cond_size);
        plan = &local;
    }
    JointSamples out;
    out.locations = Xp;
    out.conditioning_size = cond_size;
    const Eigen::MatrixXd resid_rows = fit.y_std.transpose().replicate(S, 1);
    out.draws = detail::vecchia_sample_residuals(fit.data.X, resid_rows, Xp, hyp, S, *plan, rng);
    return out;
}

inline JointSamples sample_joint(const GPFit& fit, const Eigen::MatrixXd& Xp, int S,
                                 int cond_size, std::uint64_t seed) {
    Rng rng(seed);
    return sample_joint(fit, Xp, S, cond_size, rng);
}

} // namespace profbo

#endif
