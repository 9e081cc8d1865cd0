#include "fdepth/depth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fdepth/fpca.hpp"

namespace fdepth {

namespace {

Eigen::VectorXd grid_weights(const EvaluationGrid& grid, GridWeighting weighting) {
    if (weighting == GridWeighting::Uniform)
        return Eigen::VectorXd::Constant(grid.size(), 1.0 / static_cast<double>(grid.size()));
    Eigen::VectorXd w = grid.trapezoid_weights();
    return w / w.sum();
}

inline double choose2(double m) { return 0.5 * m * (m - 1.0); }

}  // namespace

double mbd_brute(const DenseCurveMatrix& curves, Eigen::Index i, GridWeighting weighting) {
    const Eigen::Index n = curves.num_curves();
    if (n < 2) throw std::invalid_argument("mbd_brute: need at least 2 curves");
    if (i < 0 || i >= n) throw std::invalid_argument("mbd_brute: curve index out of range");

    const Eigen::VectorXd w = grid_weights(curves.grid, weighting);
    const Eigen::Index g = curves.grid.size();
    double acc = 0.0;
    for (Eigen::Index i1 = 0; i1 < n; ++i1) {
        for (Eigen::Index i2 = i1 + 1; i2 < n; ++i2) {
            double frac = 0.0;
            for (Eigen::Index p = 0; p < g; ++p) {
                const double lo = std::min(curves.values(i1, p), curves.values(i2, p));
                const double hi = std::max(curves.values(i1, p), curves.values(i2, p));
                const double y = curves.values(i, p);
                if (lo <= y && y <= hi) frac += w(p);
            }
            acc += frac;
        }
    }
    return acc / choose2(static_cast<double>(n));
}

DepthVector mbd_fast(const DenseCurveMatrix& curves, GridWeighting weighting) {
    const Eigen::Index n = curves.num_curves();
    if (n < 2) throw std::invalid_argument("mbd_fast: need at least 2 curves");

    const Eigen::VectorXd w = grid_weights(curves.grid, weighting);
    const Eigen::Index g = curves.grid.size();
    const double pairs = choose2(static_cast<double>(n));

    Eigen::VectorXd depth = Eigen::VectorXd::Zero(n);
    std::vector<double> column(static_cast<std::size_t>(n));
    for (Eigen::Index p = 0; p < g; ++p) {
        for (Eigen::Index i = 0; i < n; ++i) column[static_cast<std::size_t>(i)] = curves.values(i, p);
        std::vector<double> sorted = column;
        std::sort(sorted.begin(), sorted.end());
        for (Eigen::Index i = 0; i < n; ++i) {
            const double y = column[static_cast<std::size_t>(i)];
            const auto lb = std::lower_bound(sorted.begin(), sorted.end(), y);
            const auto ub = std::upper_bound(sorted.begin(), sorted.end(), y);
            const double below = static_cast<double>(lb - sorted.begin());
            const double above = static_cast<double>(sorted.end() - ub);
            const double count = pairs - choose2(above) - choose2(below);
            depth(i) += w(p) * count / pairs;
        }
    }
    return DepthVector{std::move(depth), DepthMethod::MBD, std::nullopt};
}

DepthVector mbd_u(const DenseCurveMatrix& estimates, const DenseCurveMatrix& lower,
                  const DenseCurveMatrix& upper, GridWeighting weighting) {
    const Eigen::Index n = estimates.num_curves();
    const Eigen::Index g = estimates.grid.size();
    if (lower.num_curves() != n || upper.num_curves() != n || lower.grid.size() != g ||
        upper.grid.size() != g)
        throw std::invalid_argument("mbd_u: estimates/lower/upper shape mismatch");

    DenseCurveMatrix enlarged;
    enlarged.grid = estimates.grid;
    enlarged.values.resize(3 * n, g);
    enlarged.values.topRows(n) = upper.values;
    enlarged.values.middleRows(n, n) = estimates.values;
    enlarged.values.bottomRows(n) = lower.values;

    const DepthVector all = mbd_fast(enlarged, weighting);
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i)
        out(i) = (all.values(i) + all.values(n + i) + all.values(2 * n + i)) / 3.0;
    return DepthVector{std::move(out), DepthMethod::MBD_U, std::nullopt};
}

namespace {

Eigen::VectorXd midranks(const Eigen::VectorXd& x) {
    const Eigen::Index n = x.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return x(a) < x(b); });
    Eigen::VectorXd ranks(n);
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i;
        while (j + 1 < n && x(order[static_cast<std::size_t>(j + 1)]) ==
                                x(order[static_cast<std::size_t>(i)]))
            ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;  // average 1-based rank
        for (Eigen::Index t = i; t <= j; ++t) ranks(order[static_cast<std::size_t>(t)]) = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
    if (x.size() < 2) throw std::invalid_argument("spearman: need at least 2 observations");
    if (x.maxCoeff() == x.minCoeff() || y.maxCoeff() == y.minCoeff())
        throw std::invalid_argument("spearman: correlation undefined for constant input");

    const Eigen::VectorXd rx = midranks(x);
    const Eigen::VectorXd ry = midranks(y);
    const double mx = rx.mean();
    const double my = ry.mean();
    const Eigen::ArrayXd dx = rx.array() - mx;
    const Eigen::ArrayXd dy = ry.array() - my;
    const double sx = std::sqrt((dx * dx).sum());
    const double sy = std::sqrt((dy * dy).sum());
    if (sx == 0.0 || sy == 0.0)
        throw std::invalid_argument("spearman: correlation undefined for constant ranks");
    return (dx * dy).sum() / (sx * sy);
}

std::optional<AlphaStarResult> select_alpha_star(const DenseCurveMatrix& estimates,
                                                 const Eigen::MatrixXd& variances,
                                                 const AlphaSelectionConfig& config) {
    if (variances.rows() != estimates.num_curves() || variances.cols() != estimates.grid.size())
        throw std::invalid_argument("select_alpha_star: variance shape mismatch");

    DenseCurveMatrix est = estimates;
    if (config.clamp_nonnegative) est.values = est.values.cwiseMax(0.0);
    const DepthVector base = mbd_fast(est, config.weighting);
    const Eigen::MatrixXd sd = variances.cwiseMax(0.0).cwiseSqrt();

    std::optional<AlphaStarResult> best;
    const int steps =
        static_cast<int>(std::lround((config.alpha_max - config.alpha_min) / config.alpha_step));
    // Walk from the largest alpha down; the first qualifying alpha wins.
    for (int k = steps; k >= 0; --k) {
        const double alpha = config.alpha_min + k * config.alpha_step;
        const double z = normal_quantile(1.0 - alpha / 2.0);
        DenseCurveMatrix lower{est.grid, estimates.values - z * sd};
        DenseCurveMatrix upper{est.grid, estimates.values + z * sd};
        if (config.clamp_nonnegative) {
            lower.values = lower.values.cwiseMax(0.0);
            upper.values = upper.values.cwiseMax(0.0);
        }
        DepthVector du = mbd_u(est, lower, upper, config.weighting);
        double rho;
        try {
            rho = spearman(base.values, du.values);
        } catch (const std::invalid_argument&) {
            continue;  // alpha skipped
        }
        if (rho <= config.rho_threshold) {
            du.alpha_used = alpha;
            return AlphaStarResult{alpha, rho, std::move(du)};
        }
    }
    return std::nullopt;
}

}  // namespace fdepth
