#ifndef PROFBO_METRICS_HPP
#define PROFBO_METRICS_HPP

#include <Eigen/Dense>
#include <cmath>

#include "profbo/errors.hpp"
#include "profbo/profile.hpp"

namespace profbo {

/// Profile-estimation quality over a control grid: average error (RMSE),
/// worst-case error (MaxAD), mean credible-interval width (AvgCI), and the
/// fraction of grid points whose truth lies inside the interval (Coverage).
struct MetricsReport {
    double rmse = 0.0;
    double maxad = 0.0;
    double avgci = 0.0;
    double coverage = 0.0;
    int grid_size = 0;
};

inline MetricsReport compute_metrics(const ProfileEstimate& est, const Eigen::VectorXd& truth) {
    const int g = static_cast<int>(est.xstar_values.size());
    if (g == 0) throw invalid_argument("compute_metrics: empty estimate");
    if (truth.size() != g)
        throw invalid_argument("compute_metrics: estimate grid and truth grid differ in size");

    MetricsReport m;
    m.grid_size = g;
    double sse = 0.0;
    int covered = 0;
    for (int i = 0; i < g; ++i) {
        const double e = est.mu_T[i] - truth[i];
        sse += e * e;
        m.maxad = std::max(m.maxad, std::abs(e));
        m.avgci += est.ci_width[i];
        if (truth[i] >= est.ci_lo[i] && truth[i] <= est.ci_hi[i]) ++covered;
    }
    m.rmse = std::sqrt(sse / g);
    m.avgci /= g;
    m.coverage = static_cast<double>(covered) / g;
    return m;
}

} // namespace profbo

#endif
