#ifndef PROFBO_DESIGN_HPP
#define PROFBO_DESIGN_HPP

#include <Eigen/Dense>
#include <numeric>
#include <vector>

#include "profbo/errors.hpp"
#include "profbo/rng.hpp"

namespace profbo {

/// Random Latin hypercube sample of n points in [0,1]^d: per dimension,
/// exactly one point per stratum [k/n, (k+1)/n), uniformly placed within it.
inline Eigen::MatrixXd lhs_sample(int n, int d, Rng& rng) {
    if (n < 1 || d < 1) throw invalid_argument("lhs_sample: n and d must be >= 1");
    Eigen::MatrixXd X(n, d);
    std::vector<int> perm(n);
    for (int j = 0; j < d; ++j) {
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm.data(), perm.size());
        for (int i = 0; i < n; ++i)
            X(i, j) = (perm[i] + rng.uniform()) / n;
    }
    return X;
}

inline Eigen::MatrixXd lhs_sample(int n, int d, std::uint64_t seed) {
    Rng rng(seed);
    return lhs_sample(n, d, rng);
}

/// Evenly spaced grid on [0,1], endpoints inclusive.
inline Eigen::VectorXd evenly_spaced(int n) {
    if (n < 1) throw invalid_argument("evenly_spaced: n must be >= 1");
    if (n == 1) return Eigen::VectorXd::Constant(1, 0.5);
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g[i] = static_cast<double>(i) / (n - 1);
    return g;
}

/// Sorted 1-D LHS, used for the re-randomized control axis.
inline Eigen::VectorXd lhs_axis(int n, Rng& rng) {
    Eigen::MatrixXd X = lhs_sample(n, 1, rng);
    Eigen::VectorXd v = X.col(0);
    std::sort(v.data(), v.data() + v.size());
    return v;
}

} // namespace profbo

#endif
