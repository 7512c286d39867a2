#ifndef PROFBO_DELAUNAY_HPP
#define PROFBO_DELAUNAY_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "profbo/hull.hpp"
#include "profbo/rng.hpp"

namespace profbo {

/// Delaunay triangulation of points in [0,1]^D. Simplices carry D+1 vertex
/// indices; hull_facets are the boundary facets of the points' convex hull
/// (D indices each; for D = 1 the two extreme points).
struct Triangulation {
    Eigen::MatrixXd vertices;                 // m x D
    std::vector<std::vector<int>> simplices;  // each of size D+1
    std::vector<std::vector<int>> hull_facets;
};

namespace geom {

inline double simplex_volume(const Eigen::MatrixXd& pts, const std::vector<int>& verts) {
    const int D = static_cast<int>(pts.cols());
    Eigen::MatrixXd E(D, D);
    for (int i = 1; i <= D; ++i)
        E.row(i - 1) = pts.row(verts[i]) - pts.row(verts[0]);
    double fact = 1.0;
    for (int i = 2; i <= D; ++i) fact *= i;
    return std::abs(E.determinant()) / fact;
}

} // namespace geom

/// Delaunay via paraboloid lifting: lift to (x, |x|^2), take the convex
/// hull in D+1 dimensions, keep downward-facing facets. The lifted
/// coordinate gets a deterministic sub-nanoscale jitter so cospherical
/// point sets break ties reproducibly. For D = 1 the triangulation is the
/// sorted sequence of consecutive intervals.
inline Triangulation delaunay(const Eigen::MatrixXd& points) {
    const int D = static_cast<int>(points.cols());
    const int n = static_cast<int>(points.rows());
    if (D < 1) throw invalid_argument("delaunay: need at least one dimension");
    if (n < D + 1) throw invalid_argument("delaunay: need at least D+1 points");

    Triangulation tri;
    tri.vertices = points;

    if (D == 1) {
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return points(a, 0) < points(b, 0); });
        for (int i = 0; i + 1 < n; ++i)
            tri.simplices.push_back({order[i], order[i + 1]});
        tri.hull_facets.push_back({order.front()});
        tri.hull_facets.push_back({order.back()});
        return tri;
    }

    if (n == D + 1) {
        // exactly one simplex possible
        std::vector<int> simplex(n);
        std::iota(simplex.begin(), simplex.end(), 0);
        if (geom::simplex_volume(points, simplex) <= 1e-12)
            throw degeneracy_error("delaunay: points span an affine subspace of dimension "
                                   "below the space dimension");
        tri.simplices.push_back(std::move(simplex));
        const geom::ConvexHull base = geom::convex_hull(points);
        for (const auto& f : base.facets) {
            std::vector<int> facet = f.vertices;
            std::sort(facet.begin(), facet.end());
            tri.hull_facets.push_back(std::move(facet));
        }
        return tri;
    }

    // the jitter must dominate the hull's degeneracy threshold (1e-10 of
    // scale) while staying far below any real circumsphere violation
    Eigen::MatrixXd lifted(n, D + 1);
    lifted.leftCols(D) = points;
    for (int i = 0; i < n; ++i) {
        const double jig =
            1e-8 * (static_cast<double>(detail::mix64(0x7ac5u ^ static_cast<std::uint64_t>(i)) >> 11)
                    * 0x1.0p-53);
        lifted(i, D) = points.row(i).squaredNorm() + jig;
    }

    const geom::ConvexHull hull = geom::convex_hull(lifted);
    for (const auto& f : hull.facets) {
        if (f.normal[D] >= -1e-12) continue;  // keep only downward-facing facets
        std::vector<int> simplex = f.vertices;
        std::sort(simplex.begin(), simplex.end());
        if (geom::simplex_volume(points, simplex) <= 1e-12) continue;
        tri.simplices.push_back(std::move(simplex));
    }
    if (tri.simplices.empty())
        throw degeneracy_error("delaunay: no non-degenerate simplices; "
                               "points may be affinely dependent");

    const geom::ConvexHull base = geom::convex_hull(points);
    for (const auto& f : base.facets) {
        std::vector<int> facet = f.vertices;
        std::sort(facet.begin(), facet.end());
        tri.hull_facets.push_back(std::move(facet));
    }
    return tri;
}

} // namespace profbo

#endif
