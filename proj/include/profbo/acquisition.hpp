#ifndef PROFBO_ACQUISITION_HPP
#define PROFBO_ACQUISITION_HPP

#include <algorithm>
#include <cmath>
#include <numbers>

namespace profbo {

inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

/// Expected improvement for minimization: E[max(y_min - Y, 0)] for
/// Y ~ N(mu, sigma^2). Total function: sigma <= 0 collapses to the
/// deterministic improvement max(y_min - mu, 0).
inline double expected_improvement(double mu, double sigma, double y_min) {
    const double gap = y_min - mu;
    if (!(sigma > 0.0)) return std::max(gap, 0.0);
    const double z = gap / sigma;
    const double v = gap * normal_cdf(z) + sigma * normal_pdf(z);
    return std::max(v, 0.0);
}

/// Profile expected improvement: EI against the slice-dependent threshold
/// t_min = max(y_min, mu_T(x*)), so slices whose estimated profile optimum
/// sits above the global incumbent stay informative.
inline double profile_expected_improvement(double mu, double sigma, double y_min,
                                           double mu_T_at_xstar) {
    return expected_improvement(mu, sigma, std::max(y_min, mu_T_at_xstar));
}

} // namespace profbo

#endif
