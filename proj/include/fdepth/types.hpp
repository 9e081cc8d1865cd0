#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdepth {

struct Interval {
    double a = 0.0;
    double b = 1.0;
};

// Common dense grid the curves are evaluated on.
class EvaluationGrid {
  public:
    EvaluationGrid() = default;
    explicit EvaluationGrid(Eigen::VectorXd points) : points_(std::move(points)) {
        validate();
    }

    static EvaluationGrid equidistant(double a, double b, int num_points) {
        if (num_points < 2) throw std::invalid_argument("grid needs at least 2 points");
        return EvaluationGrid(Eigen::VectorXd::LinSpaced(num_points, a, b));
    }

    const Eigen::VectorXd& points() const { return points_; }
    Eigen::Index size() const { return points_.size(); }
    double front() const { return points_(0); }
    double back() const { return points_(points_.size() - 1); }

    // Trapezoidal quadrature weights for the (possibly non-uniform) grid.
    Eigen::VectorXd trapezoid_weights() const {
        const Eigen::Index g = points_.size();
        Eigen::VectorXd w = Eigen::VectorXd::Zero(g);
        for (Eigen::Index i = 0; i + 1 < g; ++i) {
            const double h = points_(i + 1) - points_(i);
            w(i) += 0.5 * h;
            w(i + 1) += 0.5 * h;
        }
        return w;
    }

    bool operator==(const EvaluationGrid& other) const {
        return points_.size() == other.points_.size() && points_ == other.points_;
    }

  private:
    void validate() const {
        if (points_.size() < 2) throw std::invalid_argument("grid needs at least 2 points");
        for (Eigen::Index i = 0; i < points_.size(); ++i) {
            if (!std::isfinite(points_(i))) throw std::invalid_argument("grid point not finite");
            if (i > 0 && points_(i) <= points_(i - 1))
                throw std::invalid_argument("grid points must be strictly increasing");
        }
    }

    Eigen::VectorXd points_;
};

// One subject's sparse observations.
struct SparseSubject {
    std::string id;
    Eigen::VectorXd obs_points;  // strictly increasing
    Eigen::VectorXd obs_values;
};

// Sparse, subject-specific observation grids over a common domain.
struct SparseFunctionalDataset {
    std::vector<SparseSubject> subjects;
    Interval domain;

    std::size_t num_subjects() const { return subjects.size(); }

    void validate() const;
};

// Curves sampled on a common grid, one row per curve.
struct DenseCurveMatrix {
    EvaluationGrid grid;
    Eigen::MatrixXd values;  // n x |grid|

    Eigen::Index num_curves() const { return values.rows(); }

    void validate() const {
        if (values.cols() != grid.size())
            throw std::invalid_argument("curve matrix columns must match grid size");
        if (!values.allFinite())
            throw std::invalid_argument("curve matrix contains non-finite values");
    }
};

// Piecewise-linear interpolation of (grid, values) at query points.
// Queries outside the grid range are clamped to the endpoints.
Eigen::VectorXd interp_linear(const Eigen::VectorXd& grid, const Eigen::VectorXd& values,
                              const Eigen::VectorXd& queries);

// Same, column-wise over a matrix whose rows are indexed by the grid.
Eigen::MatrixXd interp_linear_rows(const Eigen::VectorXd& grid, const Eigen::MatrixXd& values,
                                   const Eigen::VectorXd& queries);

// Sorted deduplicated union of all observation points; if it exceeds
// max_points the union is replaced by max_points equidistant points on the
// domain.
EvaluationGrid union_grid(const SparseFunctionalDataset& dataset, int max_points = 101);

}  // namespace fdepth
