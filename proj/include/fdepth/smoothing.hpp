#pragma once

#include "fdepth/bspline.hpp"
#include "fdepth/types.hpp"

namespace fdepth {

struct MeanEstimate {
    EvaluationGrid grid;
    Eigen::VectorXd values;  // mean curve on the grid
    double smoother_dof = 0.0;

    Eigen::VectorXd at(const Eigen::VectorXd& queries) const {
        return interp_linear(grid.points(), values, queries);
    }
};

struct CovarianceEstimate {
    EvaluationGrid grid;
    Eigen::MatrixXd raw_surface;       // binned residual cross-products (diagnostic)
    Eigen::MatrixXd smoothed_surface;  // symmetric
    double sigma2_hat = 0.0;
};

// Scattered residual products feeding the covariance smoother. Off-diagonal
// points are ordered pairs (both (j,l) and (l,j)); diagonal products carry the
// measurement-error inflation and are kept apart for sigma^2 estimation.
struct RawCovariancePoints {
    std::vector<double> s1, s2, product;  // off-diagonal, j != l
    std::vector<double> diag_s, diag_product;
};

struct SmootherConfig {
    int mean_basis = 15;
    int cov_basis = 10;   // per axis of the tensor product
    int diag_basis = 10;  // raw-diagonal smoother for sigma^2
    SmoothingPolicy mean_policy;
    SmoothingPolicy cov_policy;
    SmoothingPolicy diag_policy;
};

// Penalized regression spline fit to the pooled observations under working
// independence, evaluated on the grid.
MeanEstimate estimate_mean(const SparseFunctionalDataset& dataset, const EvaluationGrid& grid,
                           int basis_size, const SmoothingPolicy& policy = {});

RawCovariancePoints estimate_raw_covariance(const SparseFunctionalDataset& dataset,
                                            const MeanEstimate& mean);

// Tensor-product penalized spline fit to the off-diagonal raw points, then
// symmetrized; sigma2_hat is filled in via estimate_sigma2.
CovarianceEstimate smooth_covariance(const RawCovariancePoints& raw, const EvaluationGrid& grid,
                                     const SmootherConfig& config = {});

// Average gap between the smoothed raw diagonal and the surface diagonal over
// the middle 60% of the domain, floored at zero.
double estimate_sigma2(const RawCovariancePoints& raw, const Eigen::MatrixXd& smoothed_surface,
                       const EvaluationGrid& grid, int diag_basis = 10,
                       const SmoothingPolicy& policy = {});

}  // namespace fdepth
