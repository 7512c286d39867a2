#include <catch2/catch_amalgamated.hpp>

#include "profbo/candidates.hpp"
#include "profbo/design.hpp"

using namespace profbo;

namespace {

// brute-force circumsphere of a simplex: solve for the center equidistant
// from all vertices, then check no other point lies strictly inside
void check_empty_circumsphere(const Eigen::MatrixXd& pts, const std::vector<int>& simplex,
                              double tol = 1e-7) {
    const int D = static_cast<int>(pts.cols());
    Eigen::MatrixXd A(D, D);
    Eigen::VectorXd b(D);
    const Eigen::RowVectorXd v0 = pts.row(simplex[0]);
    for (int i = 1; i <= D; ++i) {
        const Eigen::RowVectorXd vi = pts.row(simplex[i]);
        A.row(i - 1) = 2.0 * (vi - v0);
        b[i - 1] = vi.squaredNorm() - v0.squaredNorm();
    }
    const Eigen::VectorXd center = A.fullPivLu().solve(b);
    const double r2 = (v0.transpose() - center).squaredNorm();
    for (int p = 0; p < pts.rows(); ++p) {
        if (std::find(simplex.begin(), simplex.end(), p) != simplex.end()) continue;
        const double d2 = (pts.row(p).transpose() - center).squaredNorm();
        REQUIRE(d2 > r2 - tol);
    }
}

double hull_volume_2d(const Eigen::MatrixXd& pts, const geom::ConvexHull& hull) {
    // shoelace over facet segments against an interior point
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (int v : hull.vertex_indices) c += pts.row(v).transpose();
    c /= hull.vertex_indices.size();
    double vol = 0.0;
    for (const auto& f : hull.facets) {
        const Eigen::Vector2d a = pts.row(f.vertices[0]).transpose() - c;
        const Eigen::Vector2d b = pts.row(f.vertices[1]).transpose() - c;
        vol += std::abs(a.x() * b.y() - a.y() * b.x()) / 2.0;
    }
    return vol;
}

} // namespace

TEST_CASE("1-d triangulation is sorting") {
    Eigen::MatrixXd pts(3, 1);
    pts << 0.6, 0.2, 0.9;
    const Triangulation tri = delaunay(pts);
    REQUIRE(tri.simplices.size() == 2);
    REQUIRE(tri.simplices[0] == std::vector<int>{1, 0});
    REQUIRE(tri.simplices[1] == std::vector<int>{0, 2});
}

TEST_CASE("three points give one triangle, square corners give two") {
    Eigen::MatrixXd tri3(3, 2);
    tri3 << 0.1, 0.1, 0.9, 0.2, 0.4, 0.8;
    const Triangulation t3 = delaunay(tri3);
    REQUIRE(t3.simplices.size() == 1);

    Eigen::MatrixXd sq(4, 2);
    sq << 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0;
    const Triangulation t4 = delaunay(sq);
    REQUIRE(t4.simplices.size() == 2);
    for (const auto& s : t4.simplices) check_empty_circumsphere(sq, s);
}

TEST_CASE("degenerate inputs raise a degeneracy error") {
    Eigen::MatrixXd line(5, 2);
    for (int i = 0; i < 5; ++i) { line(i, 0) = 0.1 + 0.2 * i; line(i, 1) = 0.3 + 0.1 * i; }
    REQUIRE_THROWS_AS(delaunay(line), degeneracy_error);
    try {
        delaunay(line);
    } catch (const degeneracy_error& e) {
        REQUIRE(std::string(e.what()).find("affine subspace") != std::string::npos);
    }
    Eigen::MatrixXd too_few(2, 2);
    too_few << 0.1, 0.2, 0.8, 0.9;
    REQUIRE_THROWS_AS(delaunay(too_few), invalid_argument);
}

TEST_CASE("random designs satisfy the empty-circumsphere property") {
    Rng meta(515);
    for (int trial = 0; trial < 6; ++trial) {
        const int D = 2 + static_cast<int>(meta.below(2));
        const int n = D + 2 + static_cast<int>(meta.below(20));
        const Eigen::MatrixXd pts = lhs_sample(n, D, meta.bits());
        const Triangulation tri = delaunay(pts);
        REQUIRE(!tri.simplices.empty());
        for (const auto& s : tri.simplices) check_empty_circumsphere(pts, s);
    }
}

TEST_CASE("simplex volumes tile the convex hull") {
    Rng meta(929);
    for (int trial = 0; trial < 4; ++trial) {
        const Eigen::MatrixXd pts = lhs_sample(14 + trial * 4, 2, meta.bits());
        const Triangulation tri = delaunay(pts);
        double vol = 0.0;
        for (const auto& s : tri.simplices) vol += geom::simplex_volume(pts, s);
        const geom::ConvexHull hull = geom::convex_hull(pts);
        REQUIRE(vol == Catch::Approx(hull_volume_2d(pts, hull)).margin(1e-9));
    }
}

TEST_CASE("tricands in one dimension: midpoints plus two fringe points") {
    Eigen::MatrixXd X(2, 1);
    X << 0.2, 0.6;
    const TricandSet tc = tricands(X, 0.9);
    REQUIRE(tc.n_internal == 1);
    REQUIRE(tc.points(0, 0) == Catch::Approx(0.4).margin(1e-15));
    REQUIRE(tc.n_fringe == 2);
    std::vector<double> fr{tc.points(1, 0), tc.points(2, 0)};
    std::sort(fr.begin(), fr.end());
    REQUIRE(fr[0] == Catch::Approx(0.2 - 0.9 * 0.2).margin(1e-15));
    REQUIRE(fr[1] == Catch::Approx(0.6 + 0.9 * 0.4).margin(1e-15));
}

TEST_CASE("internal candidates are simplex centroids strictly inside the hull") {
    Eigen::MatrixXd X(3, 2);
    X << 0.2, 0.2, 0.8, 0.25, 0.5, 0.75;
    const TricandSet tc = tricands(X);
    REQUIRE(tc.n_internal == 1);
    const Eigen::Vector2d centroid = (X.row(0) + X.row(1) + X.row(2)).transpose() / 3.0;
    REQUIRE((tc.points.row(0).transpose() - centroid).norm() < 1e-12);
}

TEST_CASE("fringe candidates sit at the requested fraction toward the boundary") {
    Rng meta(31337);
    for (int trial = 0; trial < 4; ++trial) {
        const int D = 1 + static_cast<int>(meta.below(3));
        const int n = std::max(D + 2, 6) + static_cast<int>(meta.below(10));
        const Eigen::MatrixXd X = 0.6 * lhs_sample(n, D, meta.bits()).array() + 0.2;
        const TricandSet tc = tricands(X, 0.9);
        REQUIRE(tc.n_fringe > 0);
        for (int i = 0; i < tc.n_fringe; ++i) {
            const Eigen::VectorXd base = tc.fringe_base.row(i).transpose();
            const Eigen::VectorXd dir = tc.fringe_dir.row(i).transpose();
            const Eigen::VectorXd p = tc.points.row(tc.n_internal + i).transpose();
            REQUIRE((p - (base + 0.9 * tc.fringe_dist[i] * dir)).norm() < 1e-9);
            // the recorded distance really is the distance to the box boundary
            const Eigen::VectorXd at_boundary = base + tc.fringe_dist[i] * dir;
            double edge = 1.0;
            for (int j = 0; j < D; ++j)
                edge = std::min({edge, std::abs(at_boundary[j]), std::abs(1.0 - at_boundary[j])});
            REQUIRE(edge < 1e-9);
        }
        for (int i = 0; i < tc.points.rows(); ++i)
            for (int j = 0; j < D; ++j) {
                REQUIRE(tc.points(i, j) >= 0.0);
                REQUIRE(tc.points(i, j) <= 1.0);
            }
    }
}

TEST_CASE("fringe_frac = 1 lands exactly on the boundary") {
    Eigen::MatrixXd X(2, 1);
    X << 0.3, 0.7;
    const TricandSet tc = tricands(X, 1.0);
    std::vector<double> fr;
    for (int i = tc.n_internal; i < tc.points.rows(); ++i) fr.push_back(tc.points(i, 0));
    std::sort(fr.begin(), fr.end());
    REQUIRE(fr.front() == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(fr.back() == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("duplicate projections are collapsed and tiny sets fall back") {
    Eigen::MatrixXd X(4, 2);
    X << 0.5, 0.5,
         0.5, 0.5,  // exact duplicate
         0.2, 0.8,
         0.5, 0.5 + 1e-12;  // duplicate within tolerance
    const TricandSet tc = tricands(X);
    REQUIRE(tc.n_internal == 1);  // pairwise midpoint fallback of 2 points
    REQUIRE(tc.points.rows() >= 2);
    for (const auto tag : tc.tags)
        REQUIRE((tag == CandidateTag::internal || tag == CandidateTag::fringe));
}

TEST_CASE("tricands_plus enumerates the axis-candidate product") {
    Rng rng(4242);
    const Eigen::MatrixXd X = lhs_sample(10, 3, rng);
    Eigen::VectorXd axis(6);
    axis << 0.0, 0.2, 0.4, 0.6, 0.8, 1.0;
    const CandidateSet cs = tricands_plus(X, 0, axis);
    const int c = cs.n_per_slice();
    REQUIRE(cs.full.rows() == 6 * c);
    // identical nuisance block per slice, control column from the axis
    for (int k = 0; k < 6; ++k)
        for (int i = 0; i < c; ++i) {
            REQUIRE(cs.full(k * c + i, 0) == axis[k]);
            REQUIRE(cs.full(k * c + i, 1) == cs.tri_cands(i, 0));
            REQUIRE(cs.full(k * c + i, 2) == cs.tri_cands(i, 1));
        }

    // singleton axis reduces to the tricands with a constant control column
    const CandidateSet single = tricands_plus(X, 1, Eigen::VectorXd::Constant(1, 0.35));
    REQUIRE(single.full.rows() == single.tri_cands.rows());
    for (int i = 0; i < single.full.rows(); ++i)
        REQUIRE(single.full(i, 1) == 0.35);

    // axis source only changes the control column
    Rng arng(7);
    const Eigen::VectorXd lhs_ax = lhs_axis(6, arng);
    const CandidateSet cs2 = tricands_plus(X, 0, lhs_ax);
    REQUIRE((cs2.tri_cands - cs.tri_cands).cwiseAbs().maxCoeff() == 0.0);

    REQUIRE_THROWS_AS(tricands_plus(X, 5, axis), invalid_argument);
    Eigen::VectorXd bad_axis(2);
    bad_axis << 0.5, 1.5;
    REQUIRE_THROWS_AS(tricands_plus(X, 0, bad_axis), invalid_argument);
}

TEST_CASE("higher-dimensional triangulations cover their hull") {
    // 4-d nuisance space exercise of the lifted 5-d hull
    Rng rng(60);
    const Eigen::MatrixXd X = lhs_sample(12, 4, rng);
    const Triangulation tri = delaunay(X);
    REQUIRE(!tri.simplices.empty());
    for (const auto& s : tri.simplices) {
        REQUIRE(s.size() == 5);
        REQUIRE(geom::simplex_volume(X, s) > 1e-12);
    }
    const TricandSet tc = tricands(X);
    REQUIRE(tc.n_internal == static_cast<int>(tri.simplices.size()));
}
