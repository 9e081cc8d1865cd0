#pragma once

#include <cstdint>

#include "fdepth/types.hpp"

namespace fdepth {

// Four-component Karhunen-Loeve generator on [0,1] with model variants for
// score law and noise level.
struct ModelSpec {
    int model_id = 1;  // 1..4
    int n = 200;
    int grid_points = 75;
    std::uint64_t seed = 0;
};

enum class SparsityProtocol {
    Setting1,  // J uniform on {floor(n/8) .. floor(3n/8)}
    Setting2,  // J = n/4 or uniform{2..5}, each with probability 1/2
    Setting3,  // J = n/4 with probability n^{-1/4}, else uniform{2..5}
    Setting4,  // J uniform on {2..5}
    FixedJ5,
    J2to5,
    FixedJ2,
};

struct SparsitySpec {
    SparsityProtocol protocol = SparsityProtocol::Setting4;
    std::uint64_t seed = 0;
};

struct GeneratedSample {
    DenseCurveMatrix true_curves;   // Y, noiseless
    DenseCurveMatrix noisy_curves;  // Y + measurement error
};

double true_mean(double s);
double true_eigenfunction(int k, double s);  // k = 1..4
double true_eigenvalue(int model_id, int k);
double noise_variance(int model_id);

// True covariance surface, sum_k lambda_k phi_k(s) phi_k(t), on a grid.
Eigen::MatrixXd true_covariance_surface(int model_id, const EvaluationGrid& grid);

GeneratedSample generate(const ModelSpec& model);

// Keeps J_i grid points per subject, drawn uniformly without replacement and
// sorted; retained values are exact copies of the dense noisy values.
SparseFunctionalDataset sparsify(const DenseCurveMatrix& noisy_curves, const SparsitySpec& spec);

SparsityProtocol setting_protocol(int setting_id);  // 1..4

}  // namespace fdepth
