#include <doctest.h>

#include <map>

#include "fdepth/sim.hpp"

using namespace fdepth;

TEST_CASE("true mean endpoints") {
    CHECK(true_mean(0.0) == doctest::Approx(-1.5).epsilon(1e-12));
    CHECK(true_mean(1.0) == doctest::Approx(3.5).epsilon(1e-12));
}

TEST_CASE("generated grid and determinism") {
    ModelSpec spec;
    spec.model_id = 1;
    spec.n = 10;
    spec.seed = 5;
    auto a = generate(spec);
    auto b = generate(spec);
    CHECK(a.true_curves.grid.size() == 75);
    CHECK(a.true_curves.values == b.true_curves.values);
    CHECK(a.noisy_curves.values == b.noisy_curves.values);
    // noise is the only difference between true and noisy
    const double noise_rms =
        std::sqrt((a.noisy_curves.values - a.true_curves.values).array().square().mean());
    CHECK(noise_rms == doctest::Approx(0.1).epsilon(0.2));
}

TEST_CASE("score variances match the model spectra") {
    // recover empirical Var(xi_k) by projecting generated curves onto the
    // known eigenfunctions with trapezoid quadrature
    const auto grid = EvaluationGrid::equidistant(0.0, 1.0, 75);
    const Eigen::VectorXd w = grid.trapezoid_weights();
    Eigen::MatrixXd phi(4, grid.size());
    Eigen::VectorXd mu(grid.size());
    for (Eigen::Index p = 0; p < grid.size(); ++p) {
        mu(p) = true_mean(grid.points()(p));
        for (int k = 1; k <= 4; ++k) phi(k - 1, p) = true_eigenfunction(k, grid.points()(p));
    }
    for (int model_id : {1, 2, 3, 4}) {
        ModelSpec spec;
        spec.model_id = model_id;
        spec.n = 50000;
        spec.seed = 1234;
        auto sample = generate(spec);
        for (int k = 0; k < 4; ++k) {
            Eigen::VectorXd scores(spec.n);
            for (int i = 0; i < spec.n; ++i) {
                const Eigen::VectorXd centered =
                    sample.true_curves.values.row(i).transpose() - mu;
                scores(i) = (centered.array() * phi.row(k).transpose().array() * w.array()).sum();
            }
            const double mean = scores.mean();
            const double var = (scores.array() - mean).square().sum() / (spec.n - 1);
            const double lambda = true_eigenvalue(model_id, k + 1);
            CHECK(std::abs(var - lambda) / lambda < 0.03);
        }
    }
}

TEST_CASE("empirical mean curve converges to mu") {
    ModelSpec spec;
    spec.model_id = 1;
    spec.n = 10000;
    spec.seed = 77;
    auto sample = generate(spec);
    const Eigen::VectorXd avg = sample.true_curves.values.colwise().mean();
    double sup = 0.0;
    for (Eigen::Index p = 0; p < sample.true_curves.grid.size(); ++p)
        sup = std::max(sup,
                       std::abs(avg(p) - true_mean(sample.true_curves.grid.points()(p))));
    CHECK(sup < 0.05);
}

namespace {

std::map<Eigen::Index, int> j_histogram(const SparseFunctionalDataset& ds) {
    std::map<Eigen::Index, int> hist;
    for (const auto& subj : ds.subjects) ++hist[subj.obs_points.size()];
    return hist;
}

}  // namespace

TEST_CASE("setting 1 keeps J in the dense range") {
    ModelSpec spec;
    spec.model_id = 1;
    spec.n = 200;
    spec.seed = 2;
    auto sample = generate(spec);
    SparsitySpec sp;
    sp.protocol = SparsityProtocol::Setting1;
    sp.seed = 3;
    auto ds = sparsify(sample.noisy_curves, sp);
    for (const auto& subj : ds.subjects) {
        CHECK(subj.obs_points.size() >= 25);
        CHECK(subj.obs_points.size() <= 75);
    }
}

TEST_CASE("setting 4 frequencies are about uniform on {2..5}") {
    ModelSpec spec;
    spec.model_id = 1;
    spec.n = 10000;
    spec.grid_points = 10;
    spec.seed = 6;
    auto sample = generate(spec);
    SparsitySpec sp;
    sp.protocol = SparsityProtocol::Setting4;
    sp.seed = 8;
    auto ds = sparsify(sample.noisy_curves, sp);
    auto hist = j_histogram(ds);
    for (Eigen::Index j = 2; j <= 5; ++j) {
        const double freq = hist[j] / 10000.0;
        CHECK(std::abs(freq - 0.25) < 0.02);
    }
}

TEST_CASE("setting 3 mixes J = n/4 with probability n^{-1/4}") {
    const int n = 200;
    int hits = 0, total = 0;
    for (std::uint64_t rep = 0; rep < 50; ++rep) {
        ModelSpec spec;
        spec.model_id = 1;
        spec.n = n;
        spec.seed = 100 + rep;
        auto sample = generate(spec);
        SparsitySpec sp;
        sp.protocol = SparsityProtocol::Setting3;
        sp.seed = 200 + rep;
        auto ds = sparsify(sample.noisy_curves, sp);
        for (const auto& subj : ds.subjects) {
            ++total;
            if (subj.obs_points.size() == 50) ++hits;
        }
    }
    const double expected = std::pow(static_cast<double>(n), -0.25);  // about 0.266
    CHECK(std::abs(static_cast<double>(hits) / total - expected) < 0.02);
}

TEST_CASE("induced-sparsity protocols fix J as stated") {
    ModelSpec spec;
    spec.model_id = 1;
    spec.n = 100;
    spec.seed = 4;
    auto sample = generate(spec);
    for (auto [proto, j] : {std::pair{SparsityProtocol::FixedJ5, Eigen::Index{5}},
                            std::pair{SparsityProtocol::FixedJ2, Eigen::Index{2}}}) {
        SparsitySpec sp;
        sp.protocol = proto;
        sp.seed = 5;
        auto ds = sparsify(sample.noisy_curves, sp);
        for (const auto& subj : ds.subjects) CHECK(subj.obs_points.size() == j);
    }
}

TEST_CASE("sparsified values are exact copies of the dense values") {
    ModelSpec spec;
    spec.model_id = 2;
    spec.n = 40;
    spec.seed = 9;
    auto sample = generate(spec);
    SparsitySpec sp;
    sp.protocol = SparsityProtocol::Setting4;
    sp.seed = 10;
    auto ds = sparsify(sample.noisy_curves, sp);
    for (std::size_t i = 0; i < ds.subjects.size(); ++i) {
        const auto& subj = ds.subjects[i];
        for (Eigen::Index t = 0; t < subj.obs_points.size(); ++t) {
            // locate the grid column and compare bit-exactly
            Eigen::Index col = -1;
            for (Eigen::Index p = 0; p < sample.noisy_curves.grid.size(); ++p)
                if (sample.noisy_curves.grid.points()(p) == subj.obs_points(t)) col = p;
            REQUIRE(col >= 0);
            CHECK(subj.obs_values(t) ==
                  sample.noisy_curves.values(static_cast<Eigen::Index>(i), col));
        }
    }
}

TEST_CASE("sparsify rejects J beyond the grid") {
    ModelSpec spec;
    spec.model_id = 1;
    spec.n = 100;
    spec.grid_points = 4;
    spec.seed = 1;
    auto sample = generate(spec);
    SparsitySpec sp;
    sp.protocol = SparsityProtocol::FixedJ5;
    sp.seed = 2;
    CHECK_THROWS(sparsify(sample.noisy_curves, sp));
}
