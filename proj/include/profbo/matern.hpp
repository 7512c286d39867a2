#ifndef PROFBO_MATERN_HPP
#define PROFBO_MATERN_HPP

#include <Eigen/Dense>
#include <cmath>

#include "profbo/errors.hpp"

namespace profbo {

enum class Smoothness { matern32, matern52 };

/// Kernel state for one GP layer. Lengthscales are per-dimension: distances
/// are scaled coordinate-wise before the Matern correlation is applied.
struct Hyperparameters {
    double tau2 = 1.0;
    Eigen::VectorXd lengthscales;  // one per input dimension, all > 0
    double nugget = 1e-6;          // fixed, not estimated
    Smoothness nu = Smoothness::matern52;
};

/// Matern correlation at a given distance. 1 at distance zero, strictly
/// decreasing, vanishing as dist -> inf.
inline double matern_corr(double dist, double lengthscale, Smoothness nu) {
    if (lengthscale <= 0.0) throw invalid_argument("matern_corr: lengthscale must be > 0");
    if (dist < 0.0) throw invalid_argument("matern_corr: negative distance");
    const double r = dist / lengthscale;
    if (nu == Smoothness::matern32) {
        const double t = std::sqrt(3.0) * r;
        return (1.0 + t) * std::exp(-t);
    }
    const double t = std::sqrt(5.0) * r;
    return (1.0 + t + t * t / 3.0) * std::exp(-t);
}

namespace detail {

// Vectorized Matern applied to an array of *squared* scaled distances.
template <typename Derived>
inline Eigen::ArrayXXd matern_from_sqdist(const Eigen::ArrayBase<Derived>& sq, Smoothness nu) {
    Eigen::ArrayXXd t = sq.max(0.0).sqrt();
    if (nu == Smoothness::matern32) {
        t *= std::sqrt(3.0);
        return (1.0 + t) * (-t).exp();
    }
    t *= std::sqrt(5.0);
    return (1.0 + t + t.square() / 3.0) * (-t).exp();
}

} // namespace detail

/// Rows of `X` divided coordinate-wise by the lengthscales; pairwise
/// Euclidean distances of the result feed matern_corr with unit lengthscale.
inline Eigen::MatrixXd scale_rows(const Eigen::MatrixXd& X, const Eigen::VectorXd& ls) {
    if (X.cols() != ls.size())
        throw invalid_argument("scale_rows: lengthscale count does not match dimension");
    for (int j = 0; j < ls.size(); ++j)
        if (ls[j] <= 0.0) throw invalid_argument("scale_rows: lengthscale must be > 0");
    return X * ls.cwiseInverse().asDiagonal();
}

/// Correlation matrix of row-stacked inputs, unit diagonal (no nugget).
inline Eigen::MatrixXd corr_matrix(const Eigen::MatrixXd& X, const Hyperparameters& hyp) {
    const Eigen::MatrixXd S = scale_rows(X, hyp.lengthscales);
    const Eigen::VectorXd sq = S.rowwise().squaredNorm();
    Eigen::MatrixXd D2 = sq.replicate(1, S.rows()) + sq.transpose().replicate(S.rows(), 1);
    D2.noalias() -= 2.0 * S * S.transpose();
    Eigen::MatrixXd C = detail::matern_from_sqdist(D2.array(), hyp.nu).matrix();
    C.diagonal().setOnes();
    return C;
}

/// Cross-correlations between rows of `A` and rows of `B`.
inline Eigen::MatrixXd cross_corr(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                  const Hyperparameters& hyp) {
    const Eigen::MatrixXd Sa = scale_rows(A, hyp.lengthscales);
    const Eigen::MatrixXd Sb = scale_rows(B, hyp.lengthscales);
    const Eigen::VectorXd na = Sa.rowwise().squaredNorm();
    const Eigen::VectorXd nb = Sb.rowwise().squaredNorm();
    Eigen::MatrixXd D2 = na.replicate(1, Sb.rows()) + nb.transpose().replicate(Sa.rows(), 1);
    D2.noalias() -= 2.0 * Sa * Sb.transpose();
    return detail::matern_from_sqdist(D2.array(), hyp.nu).matrix();
}

/// Covariance of training inputs: tau2 * (corr + nugget * I).
inline Eigen::MatrixXd cov_matrix(const Eigen::MatrixXd& X, const Hyperparameters& hyp) {
    Eigen::MatrixXd K = corr_matrix(X, hyp);
    K.diagonal().array() += hyp.nugget;
    return hyp.tau2 * K;
}

} // namespace profbo

#endif
