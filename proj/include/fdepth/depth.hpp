#pragma once

#include <optional>

#include "fdepth/types.hpp"

namespace fdepth {

enum class DepthMethod { MBD, MBD_U };

enum class GridWeighting { Uniform, Trapezoid };

struct DepthVector {
    Eigen::VectorXd values;
    DepthMethod method = DepthMethod::MBD;
    std::optional<double> alpha_used;
};

// Pair-enumeration modified band depth of curve i; O(n^2 G) reference path.
double mbd_brute(const DenseCurveMatrix& curves, Eigen::Index i,
                 GridWeighting weighting = GridWeighting::Uniform);

// Rank-counting modified band depth for all curves; O(n log n) per grid
// point and exactly equal to mbd_brute, ties included.
DepthVector mbd_fast(const DenseCurveMatrix& curves,
                     GridWeighting weighting = GridWeighting::Uniform);

// Depth under uncertainty: mean depth of {upper, estimate, lower} of each
// curve with respect to the 3n enlarged sample.
DepthVector mbd_u(const DenseCurveMatrix& estimates, const DenseCurveMatrix& lower,
                  const DenseCurveMatrix& upper,
                  GridWeighting weighting = GridWeighting::Uniform);

// Spearman rank correlation with midranks for ties. Throws on constant input.
double spearman(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct AlphaSelectionConfig {
    double alpha_min = 0.05;
    double alpha_max = 0.99;
    double alpha_step = 0.01;
    double rho_threshold = 0.95;
    bool clamp_nonnegative = false;
    GridWeighting weighting = GridWeighting::Uniform;
};

struct AlphaStarResult {
    double alpha_star = 0.0;
    double rho = 0.0;  // rho(alpha_star) against plain MBD
    DepthVector mbd_u;
};

// Largest alpha in the grid whose MBD_U ranking correlates with the plain
// MBD ranking at or below the threshold; absent when no alpha qualifies.
// CI bounds per alpha are estimate -/+ z_{1-alpha/2} sqrt(variance), clamped
// at zero when requested.
std::optional<AlphaStarResult> select_alpha_star(const DenseCurveMatrix& estimates,
                                                 const Eigen::MatrixXd& variances,
                                                 const AlphaSelectionConfig& config = {});

}  // namespace fdepth
