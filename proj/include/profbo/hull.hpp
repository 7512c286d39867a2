#ifndef PROFBO_HULL_HPP
#define PROFBO_HULL_HPP

#include <Eigen/Dense>
#include <gmpxx.h>

#include <algorithm>
#include <map>
#include <sstream>
#include <vector>

#include "profbo/errors.hpp"

namespace profbo {

namespace geom {

/// Exact sign of the determinant of an m x m matrix of doubles, via
/// fraction-free elimination over rationals (doubles convert exactly).
inline int exact_det_sign(const Eigen::MatrixXd& M) {
    const int m = static_cast<int>(M.rows());
    std::vector<std::vector<mpq_class>> a(m, std::vector<mpq_class>(m));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            a[i][j] = mpq_class(M(i, j));
    int sign = 1;
    for (int col = 0; col < m; ++col) {
        int pivot = -1;
        for (int r = col; r < m; ++r)
            if (a[r][col] != 0) { pivot = r; break; }
        if (pivot < 0) return 0;
        if (pivot != col) { std::swap(a[pivot], a[col]); sign = -sign; }
        for (int r = col + 1; r < m; ++r) {
            const mpq_class factor = a[r][col] / a[col][col];
            for (int c = col; c < m; ++c) a[r][c] -= factor * a[col][c];
        }
    }
    mpq_class det = a[0][0];
    for (int i = 1; i < m; ++i) det *= a[i][i];
    const int s = sgn(det);
    return s * sign;
}

/// Sign of det(rows v_i - q). Fast double path with a Hadamard-style error
/// bound; falls back to exact rational arithmetic near zero.
inline int orient_sign(const Eigen::MatrixXd& pts, const std::vector<int>& verts,
                       const Eigen::VectorXd& q) {
    const int m = static_cast<int>(q.size());
    Eigen::MatrixXd M(m, m);
    for (int i = 0; i < m; ++i)
        M.row(i) = pts.row(verts[i]) - q.transpose();

    double hadamard = 1.0;
    for (int i = 0; i < m; ++i) hadamard *= M.row(i).norm();
    const double det = M.determinant();
    if (std::abs(det) > 1e-11 * std::max(hadamard, 1e-300))
        return det > 0.0 ? 1 : -1;
    return exact_det_sign(M);
}

struct HullFacet {
    std::vector<int> vertices;   // m indices, oriented so the interior is negative
    Eigen::VectorXd normal;      // unit outward normal (double precision)
    double offset = 0.0;         // normal . x = offset on the facet plane
};

struct ConvexHull {
    std::vector<HullFacet> facets;
    std::vector<int> vertex_indices;  // sorted union of facet vertices
    int dim = 0;
};

namespace detail {

// Greedy affinely-independent seed simplex (m+1 indices); throws
// degeneracy_error naming the affine dimension actually spanned.
inline std::vector<int> initial_simplex(const Eigen::MatrixXd& pts) {
    const int m = static_cast<int>(pts.cols());
    const int n = static_cast<int>(pts.rows());
    double scale = 1e-12;
    for (int i = 0; i < n; ++i) scale = std::max(scale, pts.row(i).norm());
    const double tol = 1e-10 * scale;

    std::vector<int> verts{0};
    Eigen::MatrixXd basis(m, 0);  // orthonormal columns spanning the affine hull so far
    while (static_cast<int>(verts.size()) < m + 1) {
        int best = -1;
        double best_res = tol;
        Eigen::VectorXd best_dir;
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd v = (pts.row(i) - pts.row(verts[0])).transpose();
            if (basis.cols() > 0) v -= basis * (basis.transpose() * v);
            const double r = v.norm();
            if (r > best_res) { best_res = r; best = i; best_dir = v / r; }
        }
        if (best < 0) {
            std::ostringstream msg;
            msg << "points span an affine subspace of dimension " << verts.size() - 1
                << " but dimension " << m << " is required";
            throw degeneracy_error(msg.str());
        }
        verts.push_back(best);
        basis.conservativeResize(m, basis.cols() + 1);
        basis.col(basis.cols() - 1) = best_dir;
    }
    return verts;
}

inline void compute_plane(const Eigen::MatrixXd& pts, HullFacet& f) {
    const int m = static_cast<int>(pts.cols());
    Eigen::MatrixXd E(m - 1, m);
    for (int i = 1; i < m; ++i)
        E.row(i - 1) = pts.row(f.vertices[i]) - pts.row(f.vertices[0]);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(E);
    const Eigen::MatrixXd null_space = lu.kernel();
    Eigen::VectorXd nrm = null_space.col(0);
    nrm.normalize();
    f.normal = nrm;
    f.offset = nrm.dot(pts.row(f.vertices[0]));
}

} // namespace detail

/// Incremental (beneath-beyond) convex hull in dimension 2..6. Orientation
/// tests use exact arithmetic near ties. Points are visited in index order.
inline ConvexHull convex_hull(const Eigen::MatrixXd& pts) {
    const int m = static_cast<int>(pts.cols());
    const int n = static_cast<int>(pts.rows());
    if (m < 2 || m > 6) throw invalid_argument("convex_hull: dimension must be in [2, 6]");
    if (n < m + 1) throw invalid_argument("convex_hull: need at least dim+1 points");

    const std::vector<int> seed = detail::initial_simplex(pts);
    Eigen::VectorXd interior = Eigen::VectorXd::Zero(m);
    for (int v : seed) interior += pts.row(v).transpose();
    interior /= static_cast<double>(seed.size());

    auto orient_facet = [&](HullFacet& f) {
        // interior must be on the negative side
        const int s = geom::orient_sign(pts, f.vertices, interior);
        if (s == 0)
            throw degeneracy_error("convex_hull: interior reference lies on a facet plane");
        if (s > 0) std::swap(f.vertices[0], f.vertices[1]);
    };

    std::vector<HullFacet> facets;
    std::vector<bool> alive;
    for (int skip = 0; skip <= m; ++skip) {
        HullFacet f;
        for (int i = 0; i <= m; ++i)
            if (i != skip) f.vertices.push_back(seed[i]);
        orient_facet(f);
        facets.push_back(std::move(f));
        alive.push_back(true);
    }

    std::vector<bool> used(n, false);
    for (int v : seed) used[v] = true;

    for (int p = 0; p < n; ++p) {
        if (used[p]) continue;
        const Eigen::VectorXd q = pts.row(p).transpose();
        std::vector<int> visible;
        for (std::size_t fi = 0; fi < facets.size(); ++fi) {
            if (!alive[fi]) continue;
            if (geom::orient_sign(pts, facets[fi].vertices, q) > 0)
                visible.push_back(static_cast<int>(fi));
        }
        if (visible.empty()) continue;  // inside or on the hull

        // horizon ridges appear in exactly one visible facet
        std::map<std::vector<int>, int> ridge_count;
        for (int fi : visible) {
            const auto& vs = facets[fi].vertices;
            for (int skip = 0; skip < m; ++skip) {
                std::vector<int> ridge;
                for (int i = 0; i < m; ++i)
                    if (i != skip) ridge.push_back(vs[i]);
                std::sort(ridge.begin(), ridge.end());
                ridge_count[ridge]++;
            }
        }
        for (int fi : visible) alive[fi] = false;
        for (const auto& [ridge, count] : ridge_count) {
            if (count != 1) continue;
            HullFacet f;
            f.vertices = ridge;
            f.vertices.push_back(p);
            orient_facet(f);
            facets.push_back(std::move(f));
            alive.push_back(true);
        }
    }

    ConvexHull hull;
    hull.dim = m;
    std::vector<int> vset;
    for (std::size_t fi = 0; fi < facets.size(); ++fi) {
        if (!alive[fi]) continue;
        detail::compute_plane(pts, facets[fi]);
        // make the stored normal point outward
        if (facets[fi].normal.dot(interior) > facets[fi].offset) {
            facets[fi].normal = -facets[fi].normal;
            facets[fi].offset = -facets[fi].offset;
        }
        for (int v : facets[fi].vertices) vset.push_back(v);
        hull.facets.push_back(std::move(facets[fi]));
    }
    std::sort(vset.begin(), vset.end());
    vset.erase(std::unique(vset.begin(), vset.end()), vset.end());
    hull.vertex_indices = std::move(vset);
    return hull;
}

} // namespace geom

} // namespace profbo

#endif
