#ifndef PROFBO_PROFILE_HPP
#define PROFBO_PROFILE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <vector>

#include "profbo/acquisition.hpp"
#include "profbo/candidates.hpp"
#include "profbo/vecchia.hpp"

namespace profbo {

/// Empirical distribution of per-slice minima from joint posterior samples:
/// mu_T is the mean over samples, the credible band the 2.5%/97.5%
/// empirical quantiles.
struct ProfileEstimate {
    Eigen::VectorXd xstar_values;
    Eigen::VectorXd mu_T;
    Eigen::VectorXd ci_lo;
    Eigen::VectorXd ci_hi;
    Eigen::VectorXd ci_width;
    Eigen::MatrixXd per_slice_minima;  // g x S
};

namespace detail {

// type-7 empirical quantile on sorted values
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
    const int n = static_cast<int>(sorted.size());
    if (n == 1) return sorted[0];
    const double h = (n - 1) * p;
    const int lo = static_cast<int>(h);
    if (lo + 1 >= n) return sorted[n - 1];
    return sorted[lo] + (h - lo) * (sorted[lo + 1] - sorted[lo]);
}

} // namespace detail

/// Per control value, the minimum of each joint sample over that slice's
/// candidate rows; mean and 95% band of those minima form the estimate.
/// Sample locations must be the candidate set's `full` matrix.
inline ProfileEstimate estimate_profile(const JointSamples& samples,
                                        const CandidateSet& candidates) {
    const int g = candidates.n_slices();
    const int c = candidates.n_per_slice();
    const int S = static_cast<int>(samples.draws.rows());
    if (c == 0) throw invalid_argument("estimate_profile: slice with zero candidates");
    if (samples.locations.rows() != candidates.full.rows() ||
        samples.locations.cols() != candidates.full.cols() ||
        (samples.locations - candidates.full).cwiseAbs().maxCoeff() > 1e-12)
        throw invalid_argument("estimate_profile: samples were not drawn at the candidate set");

    ProfileEstimate est;
    est.xstar_values = candidates.xstar_axis;
    est.mu_T.resize(g);
    est.ci_lo.resize(g);
    est.ci_hi.resize(g);
    est.ci_width.resize(g);
    est.per_slice_minima.resize(g, S);

    std::vector<double> sorted(S);
    for (int k = 0; k < g; ++k) {
        est.per_slice_minima.row(k) =
            samples.draws.middleCols(k * c, c).rowwise().minCoeff().transpose();
        est.mu_T[k] = est.per_slice_minima.row(k).mean();
        for (int s = 0; s < S; ++s) sorted[s] = est.per_slice_minima(k, s);
        std::sort(sorted.begin(), sorted.end());
        est.ci_lo[k] = detail::quantile_sorted(sorted, 0.025);
        est.ci_hi[k] = detail::quantile_sorted(sorted, 0.975);
        est.ci_width[k] = est.ci_hi[k] - est.ci_lo[k];
    }
    return est;
}

struct XstarSelection {
    int index = 0;
    double xstar = 0.0;
    double width = 0.0;
};

/// Control value with the widest credible band; ties go to the lowest index.
inline XstarSelection select_xstar(const ProfileEstimate& est) {
    const int g = static_cast<int>(est.xstar_values.size());
    if (g == 0) throw invalid_argument("select_xstar: empty estimate");
    XstarSelection sel;
    sel.width = est.ci_width[0];
    for (int k = 1; k < g; ++k)
        if (est.ci_width[k] > sel.width) { sel.index = k; sel.width = est.ci_width[k]; }
    sel.xstar = est.xstar_values[sel.index];
    return sel;
}

/// Raw-scale marginal moments at a batch of unit-cube points.
using PointwiseFn = std::function<PointwiseMoments(const Eigen::MatrixXd&)>;

struct NuisanceSelection {
    Eigen::VectorXd x_full;   // d-vector with the control value spliced in
    int candidate_index = 0;
    double pei = 0.0;
    bool zero_utility = false;
};

/// Maximize PEI along the chosen slice over the nuisance candidates, using
/// marginal posterior moments. All-zero utility falls back to the first
/// candidate and is flagged.
inline NuisanceSelection select_nuisance(const PointwiseFn& pointwise_raw, double xstar,
                                         const Eigen::MatrixXd& tri_cands, int control_index,
                                         double y_min_raw, double mu_T_at_xstar) {
    const int c = static_cast<int>(tri_cands.rows());
    if (c == 0) throw invalid_argument("select_nuisance: empty candidate set");

    Eigen::MatrixXd slice(c, tri_cands.cols() + 1);
    for (int i = 0; i < c; ++i)
        slice.row(i) =
            assemble_point(tri_cands.row(i).transpose(), xstar, control_index).transpose();

    const PointwiseMoments mom = pointwise_raw(slice);
    NuisanceSelection sel;
    double best = -1.0;
    for (int i = 0; i < c; ++i) {
        const double v =
            profile_expected_improvement(mom.mean[i], mom.sd[i], y_min_raw, mu_T_at_xstar);
        if (v > best) { best = v; sel.candidate_index = i; }
    }
    sel.pei = std::max(best, 0.0);
    sel.zero_utility = !(best > 0.0);
    sel.x_full = slice.row(sel.candidate_index).transpose();
    return sel;
}

} // namespace profbo

#endif
