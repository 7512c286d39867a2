#ifndef PROFBO_CANDIDATES_HPP
#define PROFBO_CANDIDATES_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "profbo/delaunay.hpp"

namespace profbo {

enum class CandidateTag { internal, fringe };

/// Nuisance-space candidates: internal candidates at simplex centroids,
/// fringe candidates pushed from the triangulation boundary toward the
/// domain boundary. Fringe bookkeeping (base point, direction, available
/// distance) is kept so placement is auditable.
struct TricandSet {
    Eigen::MatrixXd points;            // c x D, internal block first
    std::vector<CandidateTag> tags;    // c entries
    int n_internal = 0;
    int n_fringe = 0;
    // per fringe candidate: where the push started, its unit direction and
    // the full distance to the domain boundary along it
    Eigen::MatrixXd fringe_base;
    Eigen::MatrixXd fringe_dir;
    Eigen::VectorXd fringe_dist;
};

namespace detail {

// distance from p along unit direction u to the boundary of [0,1]^D
inline double distance_to_box(const Eigen::VectorXd& p, const Eigen::VectorXd& u) {
    double t = std::numeric_limits<double>::infinity();
    for (int j = 0; j < p.size(); ++j) {
        if (u[j] > 1e-300) t = std::min(t, (1.0 - p[j]) / u[j]);
        else if (u[j] < -1e-300) t = std::min(t, (0.0 - p[j]) / u[j]);
    }
    return std::isfinite(t) ? std::max(t, 0.0) : 0.0;
}

inline Eigen::MatrixXd dedup_rows(const Eigen::MatrixXd& X, double tol) {
    std::vector<int> keep;
    for (int i = 0; i < X.rows(); ++i) {
        bool dup = false;
        for (int k : keep)
            if ((X.row(i) - X.row(k)).norm() < tol) { dup = true; break; }
        if (!dup) keep.push_back(i);
    }
    Eigen::MatrixXd out(keep.size(), X.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) out.row(i) = X.row(keep[i]);
    return out;
}

struct FringeAccumulator {
    std::vector<Eigen::VectorXd> pts, base, dir;
    std::vector<double> dist;

    void add(const Eigen::VectorXd& b, const Eigen::VectorXd& u, double frac) {
        const double t = distance_to_box(b, u);
        if (t <= 1e-12) return;
        Eigen::VectorXd p = b + frac * t * u;
        p = p.cwiseMax(0.0).cwiseMin(1.0);
        for (const auto& q : pts)
            if ((q - p).norm() < 1e-12) return;  // collapse duplicates
        pts.push_back(p);
        base.push_back(b);
        dir.push_back(u);
        dist.push_back(t);
    }
};

// robustness fallback for degenerate early designs: pairwise midpoints plus
// axis-aligned pushes toward both boundaries
inline TricandSet midpoint_fallback(const Eigen::MatrixXd& X, double frac) {
    const int D = static_cast<int>(X.cols());
    std::vector<Eigen::VectorXd> internal;
    for (int i = 0; i < X.rows(); ++i)
        for (int j = i + 1; j < X.rows(); ++j)
            internal.push_back(0.5 * (X.row(i) + X.row(j)).transpose());

    FringeAccumulator fa;
    for (int j = 0; j < D; ++j) {
        int lo = 0, hi = 0;
        for (int i = 1; i < X.rows(); ++i) {
            if (X(i, j) < X(lo, j)) lo = i;
            if (X(i, j) > X(hi, j)) hi = i;
        }
        Eigen::VectorXd u = Eigen::VectorXd::Zero(D);
        u[j] = -1.0;
        fa.add(X.row(lo).transpose(), u, frac);
        u[j] = 1.0;
        fa.add(X.row(hi).transpose(), u, frac);
    }

    TricandSet out;
    out.n_internal = static_cast<int>(internal.size());
    out.n_fringe = static_cast<int>(fa.pts.size());
    out.points.resize(out.n_internal + out.n_fringe, D);
    out.fringe_base.resize(out.n_fringe, D);
    out.fringe_dir.resize(out.n_fringe, D);
    out.fringe_dist.resize(out.n_fringe);
    for (int i = 0; i < out.n_internal; ++i) {
        out.points.row(i) = internal[i].transpose();
        out.tags.push_back(CandidateTag::internal);
    }
    for (int i = 0; i < out.n_fringe; ++i) {
        out.points.row(out.n_internal + i) = fa.pts[i].transpose();
        out.fringe_base.row(i) = fa.base[i].transpose();
        out.fringe_dir.row(i) = fa.dir[i].transpose();
        out.fringe_dist[i] = fa.dist[i];
        out.tags.push_back(CandidateTag::fringe);
    }
    return out;
}

} // namespace detail

/// Triangulation candidates over the nuisance space [0,1]^D. One internal
/// candidate per Delaunay simplex (its centroid); fringe candidates sit at
/// `fringe_frac` of the remaining distance to the domain boundary, emitted
/// from each hull facet centroid along the outward normal and from the hull
/// vertex nearest each domain corner toward that corner. With D = 1 the
/// internal candidates are the midpoints of consecutive points and the two
/// fringe candidates push the extremes toward 0 and 1.
inline TricandSet tricands(const Eigen::MatrixXd& X_nuis, double fringe_frac = 0.9) {
    const int D = static_cast<int>(X_nuis.cols());
    if (D < 1) throw invalid_argument("tricands: empty nuisance space");
    if (X_nuis.rows() < 1) throw invalid_argument("tricands: no points");
    if (fringe_frac <= 0.0 || fringe_frac > 1.0)
        throw invalid_argument("tricands: fringe_frac must be in (0, 1]");

    const Eigen::MatrixXd X = detail::dedup_rows(X_nuis, 1e-9);

    if (D == 1) {
        std::vector<double> v(X.rows());
        for (int i = 0; i < X.rows(); ++i) v[i] = X(i, 0);
        std::sort(v.begin(), v.end());

        std::vector<double> internal;
        for (std::size_t i = 0; i + 1 < v.size(); ++i)
            internal.push_back(0.5 * (v[i] + v[i + 1]));

        detail::FringeAccumulator fa;
        Eigen::VectorXd u(1), b(1);
        b[0] = v.front(); u[0] = -1.0;
        fa.add(b, u, fringe_frac);
        b[0] = v.back(); u[0] = 1.0;
        fa.add(b, u, fringe_frac);

        TricandSet out;
        out.n_internal = static_cast<int>(internal.size());
        out.n_fringe = static_cast<int>(fa.pts.size());
        out.points.resize(out.n_internal + out.n_fringe, 1);
        out.fringe_base.resize(out.n_fringe, 1);
        out.fringe_dir.resize(out.n_fringe, 1);
        out.fringe_dist.resize(out.n_fringe);
        for (int i = 0; i < out.n_internal; ++i) {
            out.points(i, 0) = internal[i];
            out.tags.push_back(CandidateTag::internal);
        }
        for (int i = 0; i < out.n_fringe; ++i) {
            out.points.row(out.n_internal + i) = fa.pts[i].transpose();
            out.fringe_base.row(i) = fa.base[i].transpose();
            out.fringe_dir.row(i) = fa.dir[i].transpose();
            out.fringe_dist[i] = fa.dist[i];
            out.tags.push_back(CandidateTag::fringe);
        }
        if (out.points.rows() == 0)
            throw invalid_argument("tricands: no candidates from a single point in 1-D");
        return out;
    }

    if (X.rows() < D + 1) return detail::midpoint_fallback(X, fringe_frac);

    const Triangulation tri = delaunay(X);

    std::vector<Eigen::VectorXd> internal;
    internal.reserve(tri.simplices.size());
    for (const auto& s : tri.simplices) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(D);
        for (int v : s) c += X.row(v).transpose();
        internal.push_back(c / static_cast<double>(s.size()));
    }

    const geom::ConvexHull hull = geom::convex_hull(X);
    detail::FringeAccumulator fa;
    for (const auto& f : hull.facets) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(D);
        for (int v : f.vertices) c += X.row(v).transpose();
        c /= static_cast<double>(f.vertices.size());
        fa.add(c, f.normal, fringe_frac);
    }
    // push the nearest hull vertex toward each domain corner
    const int corners = 1 << D;
    for (int mask = 0; mask < corners; ++mask) {
        Eigen::VectorXd corner(D);
        for (int j = 0; j < D; ++j) corner[j] = (mask >> j) & 1 ? 1.0 : 0.0;
        int nearest = hull.vertex_indices.front();
        double best = std::numeric_limits<double>::infinity();
        for (int v : hull.vertex_indices) {
            const double d = (X.row(v).transpose() - corner).squaredNorm();
            if (d < best) { best = d; nearest = v; }
        }
        Eigen::VectorXd dir = corner - X.row(nearest).transpose();
        const double len = dir.norm();
        if (len < 1e-12) continue;
        fa.add(X.row(nearest).transpose(), dir / len, fringe_frac);
    }

    TricandSet out;
    out.n_internal = static_cast<int>(internal.size());
    out.n_fringe = static_cast<int>(fa.pts.size());
    out.points.resize(out.n_internal + out.n_fringe, D);
    out.fringe_base.resize(out.n_fringe, D);
    out.fringe_dir.resize(out.n_fringe, D);
    out.fringe_dist.resize(out.n_fringe);
    for (int i = 0; i < out.n_internal; ++i) {
        out.points.row(i) = internal[i].transpose();
        out.tags.push_back(CandidateTag::internal);
    }
    for (int i = 0; i < out.n_fringe; ++i) {
        out.points.row(out.n_internal + i) = fa.pts[i].transpose();
        out.fringe_base.row(i) = fa.base[i].transpose();
        out.fringe_dir.row(i) = fa.dir[i].transpose();
        out.fringe_dist[i] = fa.dist[i];
        out.tags.push_back(CandidateTag::fringe);
    }
    return out;
}

/// Full candidate set: every (control value, nuisance candidate) pair with
/// the control column spliced in at control_index. Rows are grouped by
/// control value (axis-major), with an identical nuisance block per slice.
struct CandidateSet {
    Eigen::MatrixXd tri_cands;        // c x (d-1)
    std::vector<CandidateTag> tags;   // c entries
    Eigen::VectorXd xstar_axis;       // g control values
    int control_index = 0;
    Eigen::MatrixXd full;             // (g*c) x d

    int n_slices() const { return static_cast<int>(xstar_axis.size()); }
    int n_per_slice() const { return static_cast<int>(tri_cands.rows()); }
};

inline Eigen::VectorXd assemble_point(const Eigen::VectorXd& nuis, double xstar,
                                      int control_index) {
    Eigen::VectorXd x(nuis.size() + 1);
    int c = 0;
    for (int j = 0; j < x.size(); ++j)
        x[j] = (j == control_index) ? xstar : nuis[c++];
    return x;
}

inline CandidateSet tricands_plus(const Eigen::MatrixXd& X_n, int control_index,
                                  const Eigen::VectorXd& axis, double fringe_frac = 0.9) {
    const int d = static_cast<int>(X_n.cols());
    if (control_index < 0 || control_index >= d)
        throw invalid_argument("tricands_plus: control_index out of range");
    if (axis.size() < 1) throw invalid_argument("tricands_plus: empty control axis");
    for (int i = 0; i < axis.size(); ++i)
        if (axis[i] < 0.0 || axis[i] > 1.0)
            throw invalid_argument("tricands_plus: axis values must lie in [0,1]");

    Eigen::MatrixXd nuis(X_n.rows(), d - 1);
    int c = 0;
    for (int j = 0; j < d; ++j) {
        if (j == control_index) continue;
        nuis.col(c++) = X_n.col(j);
    }

    CandidateSet out;
    TricandSet tc = tricands(nuis, fringe_frac);
    out.tri_cands = std::move(tc.points);
    out.tags = std::move(tc.tags);
    out.xstar_axis = axis;
    out.control_index = control_index;

    const int g = static_cast<int>(axis.size());
    const int cc = static_cast<int>(out.tri_cands.rows());
    out.full.resize(g * cc, d);
    for (int k = 0; k < g; ++k)
        for (int i = 0; i < cc; ++i)
            out.full.row(k * cc + i) =
                assemble_point(out.tri_cands.row(i).transpose(), axis[k], control_index)
                    .transpose();
    return out;
}

} // namespace profbo

#endif
