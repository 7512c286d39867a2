#include <catch2/catch_amalgamated.hpp>

#include "profbo/design.hpp"
#include "profbo/gp.hpp"

using namespace profbo;

namespace {

Hyperparameters default_hyp(int d, double ls = 1.0) {
    Hyperparameters h;
    h.tau2 = 1.0;
    h.lengthscales = Eigen::VectorXd::Constant(d, ls);
    h.nugget = 1e-6;
    h.nu = Smoothness::matern52;
    return h;
}

// draw a GP realization at X under hyp (standardizing is left to the caller)
Eigen::VectorXd simulate_gp(const Eigen::MatrixXd& X, const Hyperparameters& hyp, Rng& rng) {
    const Eigen::MatrixXd K = cov_matrix(X, hyp);
    const Eigen::LLT<Eigen::MatrixXd> llt(K);
    Eigen::VectorXd z(X.rows());
    for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return llt.matrixL() * z;
}

} // namespace

TEST_CASE("matern correlation basics") {
    for (auto nu : {Smoothness::matern32, Smoothness::matern52}) {
        REQUIRE(matern_corr(0.0, 1.0, nu) == 1.0);
        REQUIRE(matern_corr(1e8, 0.5, nu) < 1e-12);
        double prev = 1.0;
        for (double d = 0.05; d < 4.0; d += 0.05) {
            const double v = matern_corr(d, 0.7, nu);
            REQUIRE(v < prev);
            REQUIRE(v > 0.0);
            prev = v;
        }
    }
    // frozen closed-form values, cross-checked against a high-precision
    // independent evaluation
    REQUIRE(matern_corr(1.0, 1.0, Smoothness::matern52) ==
            Catch::Approx(0.52399410883182031).epsilon(1e-14));
    REQUIRE(matern_corr(1.0, 1.0, Smoothness::matern32) ==
            Catch::Approx(0.48335772459650765).epsilon(1e-14));
    REQUIRE_THROWS_AS(matern_corr(1.0, 0.0, Smoothness::matern52), invalid_argument);
    REQUIRE_THROWS_AS(matern_corr(1.0, -2.0, Smoothness::matern52), invalid_argument);
}

TEST_CASE("kernel matrix is symmetric with unit-plus-nugget diagonal") {
    Rng rng(7);
    const Eigen::MatrixXd X = lhs_sample(25, 3, rng);
    Hyperparameters hyp = default_hyp(3, 0.6);
    hyp.tau2 = 2.3;
    const Eigen::MatrixXd K = cov_matrix(X, hyp);
    REQUIRE((K - K.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    for (int i = 0; i < K.rows(); ++i)
        REQUIRE(K(i, i) == Catch::Approx(hyp.tau2 * (1.0 + hyp.nugget)).epsilon(1e-12));
    // matches the scalar form entry by entry
    const Eigen::MatrixXd S = scale_rows(X, hyp.lengthscales);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            if (i == j) continue;
            const double dist = (S.row(i) - S.row(j)).norm();
            REQUIRE(K(i, j) ==
                    Catch::Approx(hyp.tau2 * matern_corr(dist, 1.0, hyp.nu)).epsilon(1e-10));
        }
}

TEST_CASE("fit_gp recovers a known lengthscale") {
    Hyperparameters truth = default_hyp(1, 0.3);
    int in_range = 0;
    double sum_ls = 0.0;
    for (int s = 0; s < 20; ++s) {
        Rng rng(1000 + s);
        Dataset d;
        d.X = lhs_sample(200, 1, rng);
        d.y = simulate_gp(d.X, truth, rng);
        d.restandardize();
        const GPFit fit = fit_gp(d);
        const double ls = fit.hyp.lengthscales[0];
        sum_ls += ls;
        if (ls >= 0.15 && ls <= 0.6) ++in_range;
    }
    REQUIRE(in_range >= 16);  // statistical: most seeds recover the scale
    REQUIRE(sum_ls / 20.0 >= 0.15);
    REQUIRE(sum_ls / 20.0 <= 0.6);
}

TEST_CASE("fit_gp handles constant responses and duplicates") {
    Rng rng(5);
    Dataset d;
    d.X = lhs_sample(12, 2, rng);
    d.y = Eigen::VectorXd::Constant(12, 3.0);
    d.restandardize();
    const GPFit fit = fit_gp(d);
    REQUIRE(fit.hyp.tau2 > 0.0);
    REQUIRE(std::isfinite(fit.loglik));

    Dataset dup = d;
    dup.y = Eigen::VectorXd::LinSpaced(12, 0.0, 1.0);
    dup.X.row(5) = dup.X.row(2);
    dup.restandardize();
    REQUIRE_THROWS_AS(fit_gp(dup), invalid_argument);
    REQUIRE_THROWS_AS([&] {
        Dataset tiny;
        tiny.X = Eigen::MatrixXd::Constant(1, 1, 0.5);
        tiny.y = Eigen::VectorXd::Constant(1, 1.0);
        tiny.restandardize();
        return fit_gp(tiny);
    }(), invalid_argument);
}

TEST_CASE("fit_gp is deterministic and beats its starting points") {
    Rng rng(21);
    Dataset d;
    d.X = lhs_sample(40, 2, rng);
    d.y.resize(40);
    for (int i = 0; i < 40; ++i)
        d.y[i] = std::sin(4.0 * d.X(i, 0)) + std::cos(3.0 * d.X(i, 1)) + 0.5 * d.X(i, 1);
    d.restandardize();

    const GPFit a = fit_gp(d);
    const GPFit b = fit_gp(d);
    REQUIRE(a.hyp.tau2 == b.hyp.tau2);
    REQUIRE((a.hyp.lengthscales - b.hyp.lengthscales).cwiseAbs().maxCoeff() == 0.0);

    // optimizer monotonicity: final log-likelihood beats every start
    GpFitOptions opt;
    const Eigen::VectorXd y_std = d.y_standardized();
    for (int s = 0; s < opt.multistarts; ++s) {
        const double frac = (s + 1.0) / (opt.multistarts + 1.0);
        const double l0 =
            std::exp(std::log(opt.ls_lower) + frac * (std::log(opt.ls_upper) - std::log(opt.ls_lower)));
        Hyperparameters h = default_hyp(2, l0);
        REQUIRE(a.loglik >= profile_loglik(d.X, y_std, h).first - 1e-9);
    }
}

TEST_CASE("posterior interpolates training data") {
    Rng rng(31);
    Dataset d;
    d.X = lhs_sample(15, 2, rng);
    d.y.resize(15);
    for (int i = 0; i < 15; ++i) d.y[i] = 2.0 + std::sin(5.0 * d.X(i, 0)) * d.X(i, 1);
    d.restandardize();
    const GPFit fit = fit_gp(d);

    auto [mean, cov] = posterior(fit, d.X);
    for (int i = 0; i < 15; ++i) {
        REQUIRE(std::abs(d.destandardize(mean[i]) - d.y[i]) < 1e-3);
        // nugget-level residual variance at data
        REQUIRE(cov(i, i) >= -1e-10);
        REQUIRE(cov(i, i) < 10.0 * fit.hyp.tau2 * fit.hyp.nugget * (2.0 + fit.hyp.nugget));
    }
}

TEST_CASE("posterior reverts to the prior far from data") {
    Dataset d;
    d.X.resize(3, 2);
    d.X << 0.01, 0.02,
           0.04, 0.05,
           0.03, 0.08;
    d.y.resize(3);
    d.y << 1.0, 2.0, 3.0;
    d.restandardize();
    Hyperparameters hyp = default_hyp(2, 0.02);
    hyp.tau2 = 1.7;
    const GPFit fit = make_gp_fit(d, hyp);

    Eigen::MatrixXd far(1, 2);
    far << 0.95, 0.95;
    auto [mean, cov] = posterior(fit, far);
    REQUIRE(std::abs(mean[0]) < 1e-8);
    REQUIRE(cov(0, 0) == Catch::Approx(hyp.tau2 * (1.0 + hyp.nugget)).epsilon(1e-8));
}

TEST_CASE("posterior with one point matches hand algebra") {
    Dataset d;
    d.X = Eigen::MatrixXd::Constant(1, 1, 0.3);
    d.y = Eigen::VectorXd::Constant(1, 2.0);
    d.restandardize();  // n = 1: y_sd = 1, y_mean = 2 -> y_std = 0
    REQUIRE(d.y_standardized()[0] == 0.0);

    Hyperparameters hyp = default_hyp(1, 0.4);
    hyp.tau2 = 1.3;
    const double g = hyp.nugget;
    const GPFit fit = make_gp_fit(d, hyp);

    Eigen::MatrixXd xp = Eigen::MatrixXd::Constant(1, 1, 0.7);
    auto [mean, cov] = posterior(fit, xp);
    const double k = matern_corr(std::abs(0.7 - 0.3), 0.4, hyp.nu);
    const double expect_mean = k * 0.0 / (1.0 + g);
    const double expect_var = hyp.tau2 * ((1.0 + g) - k * k / (1.0 + g));
    REQUIRE(mean[0] == Catch::Approx(expect_mean).margin(1e-12));
    REQUIRE(cov(0, 0) == Catch::Approx(expect_var).epsilon(1e-12));
}

TEST_CASE("posterior covariance is symmetric PSD with bounded diagonal") {
    Rng rng(77);
    Dataset d;
    d.X = lhs_sample(20, 3, rng);
    d.y.resize(20);
    for (int i = 0; i < 20; ++i) d.y[i] = d.X.row(i).prod();
    d.restandardize();
    const GPFit fit = fit_gp(d);

    const Eigen::MatrixXd Xp = lhs_sample(30, 3, rng);
    auto [mean, cov] = posterior(fit, Xp);
    REQUIRE((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    const double cap = fit.hyp.tau2 * (1.0 + fit.hyp.nugget) + 1e-8;
    for (int i = 0; i < 30; ++i) REQUIRE(cov(i, i) <= cap);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    REQUIRE(es.eigenvalues().minCoeff() > -1e-8);

    REQUIRE_THROWS_AS(posterior(fit, lhs_sample(4, 2, rng)), invalid_argument);

    const PointwiseMoments pm = posterior_pointwise(fit, Xp);
    for (int i = 0; i < 30; ++i) {
        REQUIRE(pm.mean[i] == Catch::Approx(mean[i]).margin(1e-10));
        REQUIRE(pm.sd[i] * pm.sd[i] == Catch::Approx(cov(i, i)).margin(1e-8));
    }
}
