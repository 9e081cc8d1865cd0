#pragma once

#include "fdepth/smoothing.hpp"
#include "fdepth/types.hpp"

namespace fdepth {

// Estimated FPC decomposition: mean, eigenfunctions (rows), eigenvalues,
// measurement-error variance and the retained component count.
struct FpcModel {
    EvaluationGrid grid;
    Eigen::VectorXd mean;             // |grid|
    Eigen::MatrixXd eigenfunctions;   // K x |grid|, orthonormal under quadrature
    Eigen::VectorXd eigenvalues;      // K, strictly positive, non-increasing
    double sigma2 = 0.0;
    int K = 0;
    double variance_threshold = 0.99;

    // phi and mu evaluated (linear interpolation) at arbitrary points;
    // phi_at returns a |s| x K matrix.
    Eigen::MatrixXd phi_at(const Eigen::VectorXd& s) const;
    Eigen::VectorXd mean_at(const Eigen::VectorXd& s) const;
};

struct EigenDecomposition {
    Eigen::MatrixXd eigenfunctions;  // K x |grid|
    Eigen::VectorXd eigenvalues;     // K
    int K = 0;
};

// Discrete eigendecomposition of a symmetric surface under trapezoidal
// quadrature. Negative eigenvalues are dropped; K is the smallest count whose
// eigenvalue sum reaches variance_threshold of the positive total. Each
// eigenfunction is scaled to unit L2 norm and signed so its integral over the
// first half of the domain is non-negative.
EigenDecomposition eigendecompose(const Eigen::MatrixXd& surface, const EvaluationGrid& grid,
                                  double variance_threshold);

FpcModel make_fpc_model(const EvaluationGrid& grid, const MeanEstimate& mean,
                        const CovarianceEstimate& cov, double variance_threshold);

// Full single-sample pipeline: mean, raw covariance, surface smoothing,
// sigma^2 and eigendecomposition.
FpcModel fit_fpca(const SparseFunctionalDataset& dataset, const EvaluationGrid& grid,
                  const SmootherConfig& config = {}, double variance_threshold = 0.99);

// BLUP scores for one subject from its sparse noisy observations.
Eigen::VectorXd blup_scores(const FpcModel& model, const Eigen::VectorXd& obs_points,
                            const Eigen::VectorXd& obs_values,
                            const std::string& subject_id = "");

// mu + phi' scores on the model grid.
Eigen::VectorXd reconstruct(const FpcModel& model, const Eigen::VectorXd& scores);

// Pointwise conditional variance of the reconstruction on the model grid.
Eigen::VectorXd conditional_variance(const FpcModel& model, const Eigen::VectorXd& obs_points);

// Standard normal quantile (Acklam's rational approximation plus one Halley
// refinement; accurate to near machine precision).
double normal_quantile(double p);

// estimate -/+ z_{1-alpha/2} * sqrt(variance).
std::pair<Eigen::VectorXd, Eigen::VectorXd> pointwise_ci(const Eigen::VectorXd& estimate,
                                                         const Eigen::VectorXd& variance_diag,
                                                         double alpha);

struct CurveReconstruction {
    EvaluationGrid grid;
    Eigen::VectorXd estimate;
    Eigen::VectorXd variance_diag;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    double alpha = 0.05;
};

}  // namespace fdepth
