#include <doctest.h>

#include <random>

#include "fdepth/fpca.hpp"
#include "fdepth/sim.hpp"

using namespace fdepth;

TEST_CASE("eigendecompose recovers the model-1 spectrum") {
    auto grid = EvaluationGrid::equidistant(0.0, 1.0, 75);
    auto dec = eigendecompose(true_covariance_surface(1, grid), grid, 0.99);
    REQUIRE(dec.K == 4);
    const double expected[] = {0.25, 1.0 / 9.0, 0.0625, 0.04};
    for (int k = 0; k < 4; ++k)
        CHECK(std::abs(dec.eigenvalues(k) - expected[k]) / expected[k] < 0.02);
}

TEST_CASE("eigendecompose orthonormality and sign convention") {
    auto grid = EvaluationGrid::equidistant(0.0, 1.0, 75);
    auto dec = eigendecompose(true_covariance_surface(1, grid), grid, 0.99);
    const Eigen::VectorXd w = grid.trapezoid_weights();
    for (int j = 0; j < dec.K; ++j) {
        for (int k = 0; k < dec.K; ++k) {
            const double ip = (dec.eigenfunctions.row(j).transpose().array() *
                               dec.eigenfunctions.row(k).transpose().array() * w.array())
                                  .sum();
            CHECK(std::abs(ip - (j == k ? 1.0 : 0.0)) <= 1e-6);
        }
        double half = 0.0;
        for (Eigen::Index p = 0; p < grid.size(); ++p)
            if (grid.points()(p) <= 0.5) half += w(p) * dec.eigenfunctions(j, p);
        CHECK(half >= 0.0);
    }
}

TEST_CASE("eigendecompose rank-1 surface") {
    auto grid = EvaluationGrid::equidistant(0.0, 1.0, 20);
    const Eigen::VectorXd w = grid.trapezoid_weights();
    Eigen::VectorXd v = Eigen::VectorXd::Ones(grid.size());
    v /= std::sqrt((v.array().square() * w.array()).sum());  // unit L2 norm
    Eigen::MatrixXd surface = 2.5 * v * v.transpose();
    auto dec = eigendecompose(surface, grid, 0.99);
    REQUIRE(dec.K == 1);
    CHECK(dec.eigenvalues(0) == doctest::Approx(2.5).epsilon(1e-10));
    CHECK((dec.eigenfunctions.row(0).transpose() - v).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("eigendecompose rebuilds the positive part of the surface") {
    auto grid = EvaluationGrid::equidistant(0.0, 1.0, 40);
    Eigen::MatrixXd surface = true_covariance_surface(2, grid);
    auto dec = eigendecompose(surface, grid, 1.0);  // keep all positive components
    const Eigen::VectorXd w = grid.trapezoid_weights();
    Eigen::MatrixXd rebuilt = Eigen::MatrixXd::Zero(grid.size(), grid.size());
    for (int k = 0; k < dec.K; ++k)
        rebuilt += dec.eigenvalues(k) * dec.eigenfunctions.row(k).transpose() *
                   dec.eigenfunctions.row(k);
    // the analytic surface is PSD, so its positive part is itself
    CHECK((rebuilt - surface).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("eigendecompose rejects all-nonpositive surfaces") {
    auto grid = EvaluationGrid::equidistant(0.0, 1.0, 10);
    Eigen::MatrixXd surface = -Eigen::MatrixXd::Identity(10, 10);
    CHECK_THROWS(eigendecompose(surface, grid, 0.99));
}

namespace {

FpcModel toy_model(int k, double sigma2, std::uint64_t seed = 99) {
    auto grid = EvaluationGrid::equidistant(0.0, 1.0, 50);
    FpcModel model;
    model.grid = grid;
    model.mean.resize(grid.size());
    model.eigenfunctions.resize(k, grid.size());
    for (Eigen::Index p = 0; p < grid.size(); ++p) {
        model.mean(p) = true_mean(grid.points()(p));
        for (int j = 1; j <= k; ++j)
            model.eigenfunctions(j - 1, p) = true_eigenfunction(j, grid.points()(p));
    }
    model.eigenvalues.resize(k);
    for (int j = 1; j <= k; ++j) model.eigenvalues(j - 1) = true_eigenvalue(1, j);
    model.sigma2 = sigma2;
    model.K = k;
    (void)seed;
    return model;
}

}  // namespace

TEST_CASE("blup scores vanish on zero residuals") {
    auto model = toy_model(3, 0.01);
    Eigen::VectorXd pts(5);
    pts << 0.1, 0.3, 0.5, 0.7, 0.9;
    const Eigen::VectorXd obs = model.mean_at(pts);
    const Eigen::VectorXd scores = blup_scores(model, pts, obs);
    CHECK(scores.cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("blup shrinkage grows with sigma2") {
    auto model = toy_model(2, 0.01);
    Eigen::VectorXd pts(5);
    pts << 0.05, 0.25, 0.5, 0.75, 0.95;
    Eigen::VectorXd obs = model.mean_at(pts);
    obs.array() += 1.0;
    double prev = std::numeric_limits<double>::infinity();
    for (double s2 : {1.0, 10.0, 100.0}) {
        model.sigma2 = s2;
        const double norm = blup_scores(model, pts, obs).norm();
        CHECK(norm < prev);
        prev = norm;
    }
}

TEST_CASE("blup matches the Woodbury-equivalent form") {
    std::mt19937 rng(123);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto model = toy_model(2, 0.3);
    Eigen::VectorXd pts(5);
    pts << 0.1, 0.33, 0.52, 0.8, 0.97;
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::VectorXd obs(5);
        for (int j = 0; j < 5; ++j) obs(j) = model.mean_at(pts)(j) + normal(rng);
        const Eigen::VectorXd scores = blup_scores(model, pts, obs);

        // independent oracle: Lambda Phi' (Phi Lambda Phi' + sigma2 I)^{-1} resid
        const Eigen::MatrixXd phi = model.phi_at(pts);
        const Eigen::VectorXd resid = obs - model.mean_at(pts);
        const Eigen::MatrixXd big =
            phi * model.eigenvalues.asDiagonal() * phi.transpose() +
            model.sigma2 * Eigen::MatrixXd::Identity(5, 5);
        const Eigen::VectorXd oracle =
            model.eigenvalues.asDiagonal() * phi.transpose() * big.ldlt().solve(resid);
        CHECK((scores - oracle).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("blup singular system error names the subject") {
    auto model = toy_model(3, 0.0);
    Eigen::VectorXd pts(2), obs(2);
    pts << 0.2, 0.8;
    obs << 1.0, 2.0;
    CHECK_THROWS_WITH_AS(blup_scores(model, pts, obs, "subj42"), doctest::Contains("subj42"),
                         std::runtime_error);
}

TEST_CASE("reconstruct is mean plus score-weighted eigenfunctions") {
    auto model = toy_model(3, 0.01);
    CHECK((reconstruct(model, Eigen::VectorXd::Zero(3)) - model.mean).cwiseAbs().maxCoeff() ==
          0.0);
    Eigen::VectorXd e2 = Eigen::VectorXd::Zero(3);
    e2(1) = 1.0;
    const Eigen::VectorXd rec = reconstruct(model, e2);
    CHECK((rec - model.mean - model.eigenfunctions.row(1).transpose()).cwiseAbs().maxCoeff() <
          1e-14);
    CHECK_THROWS(reconstruct(model, Eigen::VectorXd::Zero(2)));
}

TEST_CASE("reconstruction linearity in scores") {
    auto model = toy_model(4, 0.05);
    std::mt19937 rng(7);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd xi(4), zeta(4);
    for (int k = 0; k < 4; ++k) {
        xi(k) = normal(rng);
        zeta(k) = normal(rng);
    }
    const double a = 0.7, b = -1.3;
    const Eigen::VectorXd lhs = reconstruct(model, a * xi + b * zeta);
    const Eigen::VectorXd rhs = a * reconstruct(model, xi) + b * reconstruct(model, zeta) -
                                (a + b - 1.0) * model.mean;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("conditional variance: information ordering and K=1 closed form") {
    auto model = toy_model(3, 0.01);
    Eigen::VectorXd sparse_pts(2);
    sparse_pts << 0.3, 0.7;
    const Eigen::VectorXd dense_pts = model.grid.points();
    const Eigen::VectorXd v_sparse = conditional_variance(model, sparse_pts);
    const Eigen::VectorXd v_dense = conditional_variance(model, dense_pts);
    CHECK(v_dense.maxCoeff() < v_sparse.maxCoeff());
    CHECK(v_sparse.minCoeff() >= 0.0);
    CHECK_THROWS(conditional_variance(model, Eigen::VectorXd()));

    auto m1 = toy_model(1, 0.04);
    Eigen::VectorXd pts(3);
    pts << 0.2, 0.5, 0.9;
    const Eigen::VectorXd var = conditional_variance(m1, pts);
    const Eigen::VectorXd phi_obs = m1.phi_at(pts).col(0);
    const double denom = phi_obs.squaredNorm() / m1.sigma2 + 1.0 / m1.eigenvalues(0);
    for (Eigen::Index p = 0; p < m1.grid.size(); ++p) {
        const double expected = m1.eigenfunctions(0, p) * m1.eigenfunctions(0, p) / denom;
        CHECK(std::abs(var(p) - expected) < 1e-12);
    }
}

TEST_CASE("conditional variance requires sigma2 > 0") {
    auto model = toy_model(2, 0.0);
    Eigen::VectorXd pts(3);
    pts << 0.1, 0.5, 0.9;
    CHECK_THROWS(conditional_variance(model, pts));
}

TEST_CASE("pointwise confidence intervals") {
    Eigen::VectorXd est(3), var(3);
    est << 1.0, 2.0, 3.0;
    var << 0.0, 1.0, 4.0;
    auto [lo, hi] = pointwise_ci(est, var, 0.05);
    CHECK(lo(0) == est(0));
    CHECK(hi(0) == est(0));
    CHECK(hi(1) - est(1) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0));

    // width grows as alpha shrinks
    double prev_width = 0.0;
    for (double alpha : {0.5, 0.2, 0.05, 0.01}) {
        auto [l, u] = pointwise_ci(est, var, alpha);
        const double width = (u - l)(2);
        CHECK(width > prev_width);
        prev_width = width;
    }
    CHECK_THROWS(pointwise_ci(est, var, 0.0));
    CHECK_THROWS(pointwise_ci(est, var, 1.0));
}

TEST_CASE("dense noiseless model-1 subject reconstructs the true curve") {
    ModelSpec spec;
    spec.model_id = 1;
    spec.n = 5;
    spec.seed = 41;
    auto sample = generate(spec);

    // model holding the analytic mean/eigenstructure of the generator
    auto grid = EvaluationGrid::equidistant(0.0, 1.0, 75);
    FpcModel model;
    model.grid = grid;
    model.mean.resize(grid.size());
    model.eigenfunctions.resize(4, grid.size());
    for (Eigen::Index p = 0; p < grid.size(); ++p) {
        model.mean(p) = true_mean(grid.points()(p));
        for (int k = 1; k <= 4; ++k)
            model.eigenfunctions(k - 1, p) = true_eigenfunction(k, grid.points()(p));
    }
    model.eigenvalues.resize(4);
    for (int k = 1; k <= 4; ++k) model.eigenvalues(k - 1) = true_eigenvalue(1, k);
    model.sigma2 = 0.0;
    model.K = 4;

    // observed densely and noiselessly: scores come back exactly
    const Eigen::VectorXd scores = blup_scores(model, sample.true_curves.grid.points(),
                                               sample.true_curves.values.row(0).transpose());
    const Eigen::VectorXd rec = reconstruct(model, scores);
    double sup = 0.0;
    for (Eigen::Index p = 0; p < grid.size(); ++p)
        sup = std::max(sup, std::abs(rec(p) - sample.true_curves.values(0, p)));
    CHECK(sup < 0.05);
}
