#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fdepth/fpca.hpp"
#include "fdepth/types.hpp"

namespace fdepth {

struct IevConfig {
    SmootherConfig smoother;
    double variance_threshold = 0.99;
    bool clamp_nonnegative = false;
    int max_retries = 3;  // per bootstrap replicate, fresh resample each time
    int threads = 1;
};

// Bootstrap-averaged reconstructions for every subject of the original
// dataset: estimate is the mean over bootstrap fits, variance is the mean
// within-fit variance plus the between-fit sample variance.
struct IevResult {
    EvaluationGrid grid;
    std::vector<std::string> subject_ids;
    std::vector<Eigen::Index> subject_obs_counts;
    Eigen::MatrixXd estimates;  // n x |grid|, unclamped bootstrap means
    Eigen::MatrixXd variances;  // n x |grid|, total variance
    Eigen::MatrixXd between_variances;  // n x |grid|, between-bootstrap component
    int B = 0;
    std::uint64_t seed = 0;
    bool clamp_nonnegative = false;

    DenseCurveMatrix estimate_matrix() const;  // clamped when configured

    // CI bounds at a given alpha; clamped at zero when configured.
    std::pair<DenseCurveMatrix, DenseCurveMatrix> bounds(double alpha) const;

    CurveReconstruction reconstruction(Eigen::Index subject, double alpha) const;
};

IevResult iev_fit(const SparseFunctionalDataset& dataset, const EvaluationGrid& grid, int B,
                  std::uint64_t seed, const IevConfig& config = {});

// Long CSV export: subject_id,s,estimate,variance,alpha,lower,upper with one
// block of rows per requested alpha.
void write_iev_csv(const IevResult& result, const std::vector<double>& alphas,
                   const std::string& path);

}  // namespace fdepth
