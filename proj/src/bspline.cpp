#include "fdepth/bspline.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <stdexcept>

namespace fdepth {

BSplineBasis::BSplineBasis(double a, double b, int num_basis) : a_(a), b_(b), num_basis_(num_basis) {
    if (!(b > a)) throw std::invalid_argument("BSplineBasis: empty domain");
    if (num_basis < kDegree + 1)
        throw std::invalid_argument("BSplineBasis: need at least degree+1 basis functions");
    const int segments = num_basis - kDegree;
    h_ = (b - a) / segments;
    // Knots run from a - degree*h to b + degree*h.
    knots_.resize(static_cast<std::size_t>(segments + 2 * kDegree + 1));
    for (std::size_t i = 0; i < knots_.size(); ++i)
        knots_[i] = a + (static_cast<double>(i) - kDegree) * h_;
}

int BSplineBasis::evaluate_nonzero(double x, std::array<double, kDegree + 1>& values) const {
    x = std::clamp(x, a_, b_);
    const int segments = num_basis_ - kDegree;
    int seg = static_cast<int>(std::floor((x - a_) / h_));
    seg = std::clamp(seg, 0, segments - 1);
    const int span = seg + kDegree;  // knot span index with knots_[span] <= x < knots_[span+1]

    // Cox-de Boor triangular scheme for the kDegree+1 non-vanishing functions.
    std::array<double, kDegree + 1> left{}, right{};
    values[0] = 1.0;
    for (int j = 1; j <= kDegree; ++j) {
        left[j] = x - knots_[static_cast<std::size_t>(span + 1 - j)];
        right[j] = knots_[static_cast<std::size_t>(span + j)] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = values[r] / (right[r + 1] + left[j - r]);
            values[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        values[j] = saved;
    }
    return seg;  // first non-zero basis index equals the segment index
}

Eigen::MatrixXd BSplineBasis::design(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(x.size(), num_basis_);
    std::array<double, kDegree + 1> vals{};
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const int first = evaluate_nonzero(x(i), vals);
        for (int j = 0; j <= kDegree; ++j) m(i, first + j) = vals[static_cast<std::size_t>(j)];
    }
    return m;
}

Eigen::MatrixXd BSplineBasis::difference_penalty() const {
    const int k = num_basis_;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(k - 2, k);
    for (int r = 0; r < k - 2; ++r) {
        d(r, r) = 1.0;
        d(r, r + 1) = -2.0;
        d(r, r + 2) = 1.0;
    }
    return d.transpose() * d;
}

void accumulate_1d(NormalEquations& ne, const BSplineBasis& basis, double x, double y) {
    std::array<double, BSplineBasis::kDegree + 1> vals{};
    const int first = basis.evaluate_nonzero(x, vals);
    constexpr int m = BSplineBasis::kDegree + 1;
    for (int i = 0; i < m; ++i) {
        ne.xty(first + i) += vals[static_cast<std::size_t>(i)] * y;
        for (int j = 0; j < m; ++j)
            ne.xtx(first + i, first + j) +=
                vals[static_cast<std::size_t>(i)] * vals[static_cast<std::size_t>(j)];
    }
    ne.yty += y * y;
    ++ne.n;
}

void accumulate_2d(NormalEquations& ne, const BSplineBasis& basis_x, const BSplineBasis& basis_y,
                   double x, double y, double z) {
    constexpr int m = BSplineBasis::kDegree + 1;
    std::array<double, m> vx{}, vy{};
    const int fx = basis_x.evaluate_nonzero(x, vx);
    const int fy = basis_y.evaluate_nonzero(y, vy);
    const int ky = basis_y.size();

    std::array<double, m * m> row{};
    std::array<int, m * m> idx{};
    int t = 0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j, ++t) {
            row[static_cast<std::size_t>(t)] =
                vx[static_cast<std::size_t>(i)] * vy[static_cast<std::size_t>(j)];
            idx[static_cast<std::size_t>(t)] = (fx + i) * ky + (fy + j);
        }
    for (int p = 0; p < m * m; ++p) {
        ne.xty(idx[static_cast<std::size_t>(p)]) += row[static_cast<std::size_t>(p)] * z;
        for (int q = 0; q < m * m; ++q)
            ne.xtx(idx[static_cast<std::size_t>(p)], idx[static_cast<std::size_t>(q)]) +=
                row[static_cast<std::size_t>(p)] * row[static_cast<std::size_t>(q)];
    }
    ne.yty += z * z;
    ++ne.n;
}

namespace {

struct SolveOut {
    Eigen::VectorXd coefs;
    double edf;
    double rss;
};

SolveOut solve_at(const NormalEquations& ne, const Eigen::MatrixXd& penalty, double lambda) {
    Eigen::MatrixXd m = ne.xtx + lambda * penalty;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw std::runtime_error("penalized spline system is rank deficient");
    const Eigen::VectorXd d = ldlt.vectorD();
    if (d.minCoeff() <= 1e-10 * std::max(1.0, d.maxCoeff()))
        throw std::runtime_error("penalized spline system is rank deficient");
    SolveOut out;
    out.coefs = ldlt.solve(ne.xty);
    // tr(H) = tr((XᵀX + λP)⁻¹ XᵀX)
    out.edf = ldlt.solve(ne.xtx).trace();
    out.rss = std::max(0.0, ne.yty - 2.0 * out.coefs.dot(ne.xty) +
                                out.coefs.dot(ne.xtx * out.coefs));
    return out;
}

}  // namespace

PenalizedFit solve_penalized(const NormalEquations& ne, const Eigen::MatrixXd& penalty,
                             const SmoothingPolicy& policy) {
    if (ne.n <= 0) throw std::runtime_error("solve_penalized: no data points");
    if (policy.fixed) {
        SolveOut out = solve_at(ne, penalty, policy.lambda);
        return PenalizedFit{out.coefs, policy.lambda, out.edf};
    }
    double best_gcv = std::numeric_limits<double>::infinity();
    double best_lambda = 0.0;
    SolveOut best;
    bool found = false;
    for (int i = 0; i < policy.grid_size; ++i) {
        const double t = policy.grid_size == 1
                             ? policy.log10_min
                             : policy.log10_min + (policy.log10_max - policy.log10_min) * i /
                                                      (policy.grid_size - 1);
        const double lambda = std::pow(10.0, t);
        SolveOut out;
        try {
            out = solve_at(ne, penalty, lambda);
        } catch (const std::runtime_error&) {
            continue;
        }
        const double denom = static_cast<double>(ne.n) - out.edf;
        if (denom <= 0.0) continue;
        const double gcv = static_cast<double>(ne.n) * out.rss / (denom * denom);
        if (gcv < best_gcv) {
            best_gcv = gcv;
            best_lambda = lambda;
            best = out;
            found = true;
        }
    }
    if (!found) throw std::runtime_error("GCV search failed: no admissible smoothing parameter");
    return PenalizedFit{best.coefs, best_lambda, best.edf};
}

}  // namespace fdepth
