#include "fdepth/fpca.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace fdepth {

Eigen::MatrixXd FpcModel::phi_at(const Eigen::VectorXd& s) const {
    return interp_linear_rows(grid.points(), eigenfunctions.transpose(), s);
}

Eigen::VectorXd FpcModel::mean_at(const Eigen::VectorXd& s) const {
    return interp_linear(grid.points(), mean, s);
}

EigenDecomposition eigendecompose(const Eigen::MatrixXd& surface, const EvaluationGrid& grid,
                                  double variance_threshold) {
    if (surface.rows() != grid.size() || surface.cols() != grid.size())
        throw std::invalid_argument("eigendecompose: surface/grid size mismatch");
    if (!(variance_threshold > 0.0 && variance_threshold <= 1.0))
        throw std::invalid_argument("eigendecompose: variance_threshold must be in (0, 1]");

    const Eigen::Index g = grid.size();
    const Eigen::MatrixXd sym = 0.5 * (surface + surface.transpose());
    const Eigen::VectorXd w = grid.trapezoid_weights();
    const Eigen::VectorXd sw = w.array().sqrt();

    // Eigenproblem in the quadrature metric: A = W^{1/2} C W^{1/2}.
    Eigen::MatrixXd a = sw.asDiagonal() * sym * sw.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecompose: solver failed");

    // Ascending from Eigen; collect strictly positive eigenvalues, largest first.
    const Eigen::VectorXd evals = solver.eigenvalues();
    const Eigen::MatrixXd evecs = solver.eigenvectors();
    const double tol = 1e-12 * std::max(1.0, evals.cwiseAbs().maxCoeff());
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = g - 1; i >= 0; --i)
        if (evals(i) > tol) keep.push_back(i);
    if (keep.empty()) throw std::runtime_error("eigendecompose: no positive eigenvalues");

    double total = 0.0;
    for (Eigen::Index i : keep) total += evals(i);
    int k = 0;
    double acc = 0.0;
    for (Eigen::Index i : keep) {
        acc += evals(i);
        ++k;
        if (acc >= variance_threshold * total - 1e-12) break;
    }

    EigenDecomposition dec;
    dec.K = k;
    dec.eigenvalues.resize(k);
    dec.eigenfunctions.resize(k, g);
    const double mid = 0.5 * (grid.front() + grid.back());
    for (int r = 0; r < k; ++r) {
        const Eigen::Index i = keep[static_cast<std::size_t>(r)];
        dec.eigenvalues(r) = evals(i);
        Eigen::VectorXd phi = evecs.col(i).array() / sw.array();
        // Deterministic sign: non-negative integral over the first half-domain.
        double half_integral = 0.0;
        for (Eigen::Index p = 0; p < g; ++p)
            if (grid.points()(p) <= mid) half_integral += w(p) * phi(p);
        if (half_integral < 0.0) phi = -phi;
        dec.eigenfunctions.row(r) = phi.transpose();
    }
    return dec;
}

FpcModel make_fpc_model(const EvaluationGrid& grid, const MeanEstimate& mean,
                        const CovarianceEstimate& cov, double variance_threshold) {
    EigenDecomposition dec = eigendecompose(cov.smoothed_surface, grid, variance_threshold);
    FpcModel model;
    model.grid = grid;
    model.mean = mean.values;
    model.eigenfunctions = std::move(dec.eigenfunctions);
    model.eigenvalues = std::move(dec.eigenvalues);
    model.sigma2 = cov.sigma2_hat;
    model.K = dec.K;
    model.variance_threshold = variance_threshold;
    return model;
}

FpcModel fit_fpca(const SparseFunctionalDataset& dataset, const EvaluationGrid& grid,
                  const SmootherConfig& config, double variance_threshold) {
    MeanEstimate mean = estimate_mean(dataset, grid, config.mean_basis, config.mean_policy);
    RawCovariancePoints raw = estimate_raw_covariance(dataset, mean);
    CovarianceEstimate cov = smooth_covariance(raw, grid, config);
    return make_fpc_model(grid, mean, cov, variance_threshold);
}

Eigen::VectorXd blup_scores(const FpcModel& model, const Eigen::VectorXd& obs_points,
                            const Eigen::VectorXd& obs_values, const std::string& subject_id) {
    const Eigen::Index j_i = obs_points.size();
    if (model.sigma2 <= 0.0 && j_i < model.K)
        throw std::runtime_error("blup_scores: singular system (sigma2 = 0 and J < K) for subject " +
                                 (subject_id.empty() ? std::string("<unnamed>") : subject_id));

    const Eigen::MatrixXd phi = model.phi_at(obs_points);      // J x K
    const Eigen::VectorXd resid = obs_values - model.mean_at(obs_points);
    Eigen::MatrixXd m = phi.transpose() * phi;                 // K x K
    if (model.sigma2 > 0.0)
        m += model.sigma2 * model.eigenvalues.cwiseInverse().asDiagonal().toDenseMatrix();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("blup_scores: singular system for subject " +
                                 (subject_id.empty() ? std::string("<unnamed>") : subject_id));
    return ldlt.solve(phi.transpose() * resid);
}

Eigen::VectorXd reconstruct(const FpcModel& model, const Eigen::VectorXd& scores) {
    if (scores.size() != model.K)
        throw std::invalid_argument("reconstruct: score length must equal K");
    return model.mean + model.eigenfunctions.transpose() * scores;
}

Eigen::VectorXd conditional_variance(const FpcModel& model, const Eigen::VectorXd& obs_points) {
    if (model.sigma2 <= 0.0)
        throw std::runtime_error("conditional_variance: requires sigma2 > 0");
    if (obs_points.size() == 0)
        throw std::runtime_error("conditional_variance: subject has no observations");

    const Eigen::MatrixXd phi_obs = model.phi_at(obs_points);  // J x K
    Eigen::MatrixXd inner = (1.0 / model.sigma2) * (phi_obs.transpose() * phi_obs);
    inner += model.eigenvalues.cwiseInverse().asDiagonal().toDenseMatrix();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(inner);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw std::runtime_error("conditional_variance: singular inner matrix");

    const Eigen::MatrixXd phi_g = model.eigenfunctions.transpose();  // |grid| x K
    const Eigen::MatrixXd solved = ldlt.solve(phi_g.transpose());    // K x |grid|
    Eigen::VectorXd var(model.grid.size());
    for (Eigen::Index p = 0; p < model.grid.size(); ++p)
        var(p) = std::max(0.0, phi_g.row(p).dot(solved.col(p)));
    return var;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must be in (0,1)");
    // Acklam's rational approximation.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // One Halley step against the exact CDF.
    static const double sqrt2 = std::sqrt(2.0);
    static const double sqrt_2pi = std::sqrt(2.0 * M_PI);
    const double e = 0.5 * std::erfc(-x / sqrt2) - p;
    const double u = e * sqrt_2pi * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> pointwise_ci(const Eigen::VectorXd& estimate,
                                                         const Eigen::VectorXd& variance_diag,
                                                         double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("pointwise_ci: alpha must be in (0, 1)");
    if (estimate.size() != variance_diag.size())
        throw std::invalid_argument("pointwise_ci: size mismatch");
    if ((variance_diag.array() < 0.0).any())
        throw std::invalid_argument("pointwise_ci: negative variance");
    const double z = normal_quantile(1.0 - alpha / 2.0);
    const Eigen::VectorXd half = z * variance_diag.array().sqrt();
    return {estimate - half, estimate + half};
}

}  // namespace fdepth
