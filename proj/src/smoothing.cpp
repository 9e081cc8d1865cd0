#include "fdepth/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fdepth {

MeanEstimate estimate_mean(const SparseFunctionalDataset& dataset, const EvaluationGrid& grid,
                           int basis_size, const SmoothingPolicy& policy) {
    if (basis_size < 4) throw std::invalid_argument("estimate_mean: basis_size must be >= 4");
    long total = 0;
    for (const auto& subj : dataset.subjects) total += subj.obs_points.size();
    if (total < basis_size)
        throw std::runtime_error("estimate_mean: fewer pooled observations than basis functions");

    BSplineBasis basis(dataset.domain.a, dataset.domain.b, basis_size);
    NormalEquations ne(basis.size());
    for (const auto& subj : dataset.subjects)
        for (Eigen::Index j = 0; j < subj.obs_points.size(); ++j)
            accumulate_1d(ne, basis, subj.obs_points(j), subj.obs_values(j));

    PenalizedFit fit = solve_penalized(ne, basis.difference_penalty(), policy);

    MeanEstimate mean;
    mean.grid = grid;
    mean.values = basis.design(grid.points()) * fit.coefs;
    mean.smoother_dof = fit.edf;
    return mean;
}

RawCovariancePoints estimate_raw_covariance(const SparseFunctionalDataset& dataset,
                                            const MeanEstimate& mean) {
    RawCovariancePoints raw;
    for (const auto& subj : dataset.subjects) {
        const Eigen::VectorXd mu = mean.at(subj.obs_points);
        const Eigen::VectorXd resid = subj.obs_values - mu;
        const Eigen::Index j_i = resid.size();
        for (Eigen::Index j = 0; j < j_i; ++j) {
            raw.diag_s.push_back(subj.obs_points(j));
            raw.diag_product.push_back(resid(j) * resid(j));
            for (Eigen::Index l = 0; l < j_i; ++l) {
                if (l == j) continue;
                raw.s1.push_back(subj.obs_points(j));
                raw.s2.push_back(subj.obs_points(l));
                raw.product.push_back(resid(j) * resid(l));
            }
        }
    }
    return raw;
}

namespace {

// Bin scattered products to nearest grid cells for the diagnostic raw
// surface; empty cells are filled from the smoothed surface.
Eigen::MatrixXd bin_raw_surface(const RawCovariancePoints& raw, const EvaluationGrid& grid,
                                const Eigen::MatrixXd& fallback) {
    const Eigen::Index g = grid.size();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(g, g);
    Eigen::MatrixXd count = Eigen::MatrixXd::Zero(g, g);
    auto nearest = [&](double s) {
        Eigen::Index best = 0;
        double best_d = std::abs(grid.points()(0) - s);
        for (Eigen::Index i = 1; i < g; ++i) {
            const double d = std::abs(grid.points()(i) - s);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    };
    for (std::size_t p = 0; p < raw.product.size(); ++p) {
        const Eigen::Index i = nearest(raw.s1[p]);
        const Eigen::Index j = nearest(raw.s2[p]);
        sum(i, j) += raw.product[p];
        count(i, j) += 1.0;
    }
    for (std::size_t p = 0; p < raw.diag_product.size(); ++p) {
        const Eigen::Index i = nearest(raw.diag_s[p]);
        sum(i, i) += raw.diag_product[p];
        count(i, i) += 1.0;
    }
    Eigen::MatrixXd out(g, g);
    for (Eigen::Index i = 0; i < g; ++i)
        for (Eigen::Index j = 0; j < g; ++j)
            out(i, j) = count(i, j) > 0.0 ? sum(i, j) / count(i, j) : fallback(i, j);
    return 0.5 * (out + out.transpose());
}

// Penalized spline fit to the raw diagonal products, evaluated on the grid.
Eigen::VectorXd smooth_diagonal(const RawCovariancePoints& raw, const EvaluationGrid& grid,
                                int diag_basis, const SmoothingPolicy& policy) {
    BSplineBasis basis(grid.front(), grid.back(), diag_basis);
    NormalEquations ne(basis.size());
    for (std::size_t p = 0; p < raw.diag_s.size(); ++p)
        accumulate_1d(ne, basis, raw.diag_s[p], raw.diag_product[p]);
    PenalizedFit fit = solve_penalized(ne, basis.difference_penalty(), policy);
    return basis.design(grid.points()) * fit.coefs;
}

// Indices of the grid points in the middle 60% of the domain by length.
std::vector<Eigen::Index> middle_indices(const EvaluationGrid& grid) {
    const double a = grid.front();
    const double b = grid.back();
    const double lo = a + 0.2 * (b - a);
    const double hi = b - 0.2 * (b - a);
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const double s = grid.points()(i);
        if (s >= lo && s <= hi) idx.push_back(i);
    }
    return idx;
}

}  // namespace

CovarianceEstimate smooth_covariance(const RawCovariancePoints& raw, const EvaluationGrid& grid,
                                     const SmootherConfig& config) {
    if (raw.product.size() < 10)
        throw std::runtime_error(
            "smooth_covariance: fewer than 10 off-diagonal raw points; need denser data "
            "(more observations per subject)");

    const double a = grid.front();
    const double b = grid.back();
    BSplineBasis basis(a, b, config.cov_basis);
    const int k = basis.size();
    NormalEquations ne(k * k);
    for (std::size_t p = 0; p < raw.product.size(); ++p)
        accumulate_2d(ne, basis, basis, raw.s1[p], raw.s2[p], raw.product[p]);

    // Isotropic tensor penalty: P ⊗ I + I ⊗ P.
    const Eigen::MatrixXd p1 = basis.difference_penalty();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(k, k);
    Eigen::MatrixXd penalty(k * k, k * k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
            penalty.block(i * k, j * k, k, k) = p1(i, j) * eye + (i == j ? p1 : Eigen::MatrixXd::Zero(k, k));

    const Eigen::MatrixXd bg = basis.design(grid.points());  // |grid| x k
    PenalizedFit fit;
    if (config.cov_policy.fixed || raw.diag_s.empty()) {
        fit = solve_penalized(ne, penalty, config.cov_policy);
    } else {
        // GCV grid search with a tie-break on the implied measurement-error
        // variance. The raw products are strongly dependent within a subject,
        // which leaves the GCV profile nearly flat over a wide range of
        // smoothing levels; an undersmoothed surface can then ride through the
        // error-inflated diagonal and collapse the variance estimate to zero,
        // which cripples the downstream score prediction. Among candidates
        // within 25% of the best GCV, prefer the best one whose implied
        // variance is positive; fall back to the plain GCV choice otherwise.
        const Eigen::VectorXd diag_smooth =
            smooth_diagonal(raw, grid, config.diag_basis, config.diag_policy);
        const std::vector<Eigen::Index> mid = middle_indices(grid);

        auto implied_sigma2 = [&](const Eigen::VectorXd& coefs) {
            Eigen::Map<const Eigen::MatrixXd> c(coefs.data(), k, k);
            double acc = 0.0;
            for (const Eigen::Index i : mid) {
                const double surf_ii = bg.row(i) * c.transpose() * bg.row(i).transpose();
                acc += diag_smooth(i) - surf_ii;
            }
            return acc / static_cast<double>(mid.size());
        };

        const SmoothingPolicy& pol = config.cov_policy;
        bool any = false, any_feasible = false;
        double best_gcv = 0.0, best_feasible_gcv = 0.0;
        PenalizedFit best, best_feasible;
        for (int i = 0; i < pol.grid_size; ++i) {
            const double t = pol.grid_size == 1
                                 ? pol.log10_min
                                 : pol.log10_min + (pol.log10_max - pol.log10_min) * i /
                                                       (pol.grid_size - 1);
            SmoothingPolicy one;
            one.fixed = true;
            one.lambda = std::pow(10.0, t);
            PenalizedFit cand;
            try {
                cand = solve_penalized(ne, penalty, one);
            } catch (const std::runtime_error&) {
                continue;
            }
            // Every unordered pair enters the cloud as both (j,l) and (l,j),
            // so the distinct-pair count is the honest GCV sample size; with
            // very few observations per subject the doubled count would let
            // GCV chase an interpolating fit.
            const double n_pairs = 0.5 * static_cast<double>(ne.n);
            const double denom = n_pairs - cand.edf;
            if (denom <= 0.0) continue;
            const double rss = std::max(
                0.0, ne.yty - 2.0 * cand.coefs.dot(ne.xty) + cand.coefs.dot(ne.xtx * cand.coefs));
            const double gcv = n_pairs * rss / (denom * denom);
            if (!any || gcv < best_gcv) {
                any = true;
                best_gcv = gcv;
                best = cand;
            }
            if (implied_sigma2(cand.coefs) > 0.0 && (!any_feasible || gcv < best_feasible_gcv)) {
                any_feasible = true;
                best_feasible_gcv = gcv;
                best_feasible = cand;
            }
        }
        if (!any) throw std::runtime_error("GCV search failed: no admissible smoothing parameter");
        if (any_feasible && best_feasible_gcv <= 1.25 * best_gcv)
            fit = best_feasible;
        else
            fit = best;
    }

    Eigen::Map<const Eigen::MatrixXd> coef(fit.coefs.data(), k, k);
    // coefficient layout: index = ix * k + iy, so surface = Bg C' Bg' with
    // C(ix, iy) stored row-major in the flat vector; Map above is col-major,
    // giving coef(iy, ix). Surface(s, t) = sum_ix,iy c[ix*k+iy] Bx(s) By(t).
    Eigen::MatrixXd surface = bg * coef.transpose() * bg.transpose();
    surface = 0.5 * (surface + surface.transpose()).eval();

    CovarianceEstimate cov;
    cov.grid = grid;
    cov.smoothed_surface = surface;
    cov.raw_surface = bin_raw_surface(raw, grid, surface);
    cov.sigma2_hat = estimate_sigma2(raw, surface, grid, config.diag_basis, config.diag_policy);
    return cov;
}

double estimate_sigma2(const RawCovariancePoints& raw, const Eigen::MatrixXd& smoothed_surface,
                       const EvaluationGrid& grid, int diag_basis, const SmoothingPolicy& policy) {
    if (raw.diag_s.empty()) throw std::runtime_error("estimate_sigma2: no diagonal points");

    const Eigen::VectorXd diag_smooth = smooth_diagonal(raw, grid, diag_basis, policy);

    // Middle 60% measured in domain length.
    const std::vector<Eigen::Index> mid = middle_indices(grid);
    if (mid.empty()) throw std::runtime_error("estimate_sigma2: no grid points in middle 60%");
    double acc = 0.0;
    for (const Eigen::Index i : mid) acc += diag_smooth(i) - smoothed_surface(i, i);
    return std::max(0.0, acc / static_cast<double>(mid.size()));
}

}  // namespace fdepth
