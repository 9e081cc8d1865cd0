#include "fdepth/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fdepth/rng.hpp"

namespace fdepth {

double true_mean(double s) {
    return 1.5 * std::sin(3.0 * M_PI * (s + 0.5)) + 2.0 * s * s * s;
}

double true_eigenfunction(int k, double s) {
    const double sqrt2 = std::sqrt(2.0);
    switch (k) {
        case 1: return sqrt2 * std::cos(2.0 * M_PI * s);
        case 2: return sqrt2 * std::sin(2.0 * M_PI * s);
        case 3: return sqrt2 * std::cos(4.0 * M_PI * s);
        case 4: return sqrt2 * std::sin(4.0 * M_PI * s);
        default: throw std::invalid_argument("true_eigenfunction: k must be in 1..4");
    }
}

double true_eigenvalue(int model_id, int k) {
    if (k < 1 || k > 4) throw std::invalid_argument("true_eigenvalue: k must be in 1..4");
    // Model 3 uses the more balanced spectrum 1/(k+1); others 1/(k+1)^2.
    if (model_id == 3) return 1.0 / (k + 1);
    return 1.0 / ((k + 1) * (k + 1));
}

double noise_variance(int model_id) { return model_id == 4 ? 0.02 : 0.01; }

Eigen::MatrixXd true_covariance_surface(int model_id, const EvaluationGrid& grid) {
    const Eigen::Index g = grid.size();
    Eigen::MatrixXd surface = Eigen::MatrixXd::Zero(g, g);
    for (int k = 1; k <= 4; ++k) {
        Eigen::VectorXd phi(g);
        for (Eigen::Index i = 0; i < g; ++i) phi(i) = true_eigenfunction(k, grid.points()(i));
        surface += true_eigenvalue(model_id, k) * phi * phi.transpose();
    }
    return surface;
}

GeneratedSample generate(const ModelSpec& model) {
    if (model.model_id < 1 || model.model_id > 4)
        throw std::invalid_argument("generate: model_id must be in 1..4");
    if (model.n < 2) throw std::invalid_argument("generate: need n >= 2");

    const EvaluationGrid grid = EvaluationGrid::equidistant(0.0, 1.0, model.grid_points);
    const Eigen::Index g = grid.size();

    Eigen::VectorXd mu(g);
    Eigen::MatrixXd phi(4, g);
    for (Eigen::Index i = 0; i < g; ++i) {
        mu(i) = true_mean(grid.points()(i));
        for (int k = 1; k <= 4; ++k) phi(k - 1, i) = true_eigenfunction(k, grid.points()(i));
    }

    // Separate streams so sparsification or noise changes never shift scores.
    Rng score_rng = make_rng(derive_seed(model.seed, 0x5c04e5));
    Rng noise_rng = make_rng(derive_seed(model.seed, 0x401c3));
    std::normal_distribution<double> std_normal(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);

    GeneratedSample out;
    out.true_curves.grid = grid;
    out.noisy_curves.grid = grid;
    out.true_curves.values.resize(model.n, g);
    out.noisy_curves.values.resize(model.n, g);

    const double noise_sd = std::sqrt(noise_variance(model.model_id));
    for (int i = 0; i < model.n; ++i) {
        Eigen::Vector4d scores;
        for (int k = 1; k <= 4; ++k) {
            const double lambda = true_eigenvalue(model.model_id, k);
            if (model.model_id == 2) {
                // Equal-probability mixture of N(-sqrt(lambda/2), lambda/2)
                // and N(sqrt(lambda/2), lambda/2); total variance lambda.
                const double center = std::sqrt(lambda / 2.0) * (coin(score_rng) ? 1.0 : -1.0);
                scores(k - 1) = center + std::sqrt(lambda / 2.0) * std_normal(score_rng);
            } else {
                scores(k - 1) = std::sqrt(lambda) * std_normal(score_rng);
            }
        }
        out.true_curves.values.row(i) = (mu + phi.transpose() * scores).transpose();
        for (Eigen::Index p = 0; p < g; ++p)
            out.noisy_curves.values(i, p) =
                out.true_curves.values(i, p) + noise_sd * std_normal(noise_rng);
    }
    return out;
}

SparsityProtocol setting_protocol(int setting_id) {
    switch (setting_id) {
        case 1: return SparsityProtocol::Setting1;
        case 2: return SparsityProtocol::Setting2;
        case 3: return SparsityProtocol::Setting3;
        case 4: return SparsityProtocol::Setting4;
        default: throw std::invalid_argument("setting_id must be in 1..4");
    }
}

SparseFunctionalDataset sparsify(const DenseCurveMatrix& noisy_curves, const SparsitySpec& spec) {
    const Eigen::Index n = noisy_curves.num_curves();
    const Eigen::Index g = noisy_curves.grid.size();
    Rng rng = make_rng(derive_seed(spec.seed, 0x5ba151));

    std::uniform_int_distribution<int> uni25(2, 5);
    const int n_quarter = static_cast<int>(std::lround(static_cast<double>(n) / 4.0));

    auto draw_j = [&]() -> int {
        switch (spec.protocol) {
            case SparsityProtocol::Setting1: {
                std::uniform_int_distribution<int> d(static_cast<int>(n / 8),
                                                     static_cast<int>(3 * n / 8));
                return d(rng);
            }
            case SparsityProtocol::Setting2:
                return std::bernoulli_distribution(0.5)(rng) ? n_quarter : uni25(rng);
            case SparsityProtocol::Setting3: {
                const double p = std::pow(static_cast<double>(n), -0.25);
                return std::bernoulli_distribution(p)(rng) ? n_quarter : uni25(rng);
            }
            case SparsityProtocol::Setting4: return uni25(rng);
            case SparsityProtocol::FixedJ5: return 5;
            case SparsityProtocol::J2to5: return uni25(rng);
            case SparsityProtocol::FixedJ2: return 2;
        }
        throw std::logic_error("unreachable");
    };

    SparseFunctionalDataset dataset;
    dataset.domain = Interval{noisy_curves.grid.front(), noisy_curves.grid.back()};
    std::vector<Eigen::Index> all(static_cast<std::size_t>(g));
    std::iota(all.begin(), all.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < n; ++i) {
        const int j_i = draw_j();
        if (j_i > g)
            throw std::runtime_error("sparsify: J_i exceeds grid size");
        // Partial Fisher-Yates draw of j_i indices without replacement.
        std::vector<Eigen::Index> pool = all;
        std::vector<Eigen::Index> keep;
        keep.reserve(static_cast<std::size_t>(j_i));
        for (int t = 0; t < j_i; ++t) {
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            const std::size_t r = pick(rng);
            keep.push_back(pool[r]);
            pool[r] = pool.back();
            pool.pop_back();
        }
        std::sort(keep.begin(), keep.end());
        SparseSubject subj;
        subj.id = std::to_string(i + 1);
        subj.obs_points.resize(j_i);
        subj.obs_values.resize(j_i);
        for (int t = 0; t < j_i; ++t) {
            subj.obs_points(t) = noisy_curves.grid.points()(keep[static_cast<std::size_t>(t)]);
            subj.obs_values(t) = noisy_curves.values(i, keep[static_cast<std::size_t>(t)]);
        }
        dataset.subjects.push_back(std::move(subj));
    }
    return dataset;
}

}  // namespace fdepth
