#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

namespace fdepth {

// Cubic B-spline basis on uniformly spaced knots extending past the domain,
// paired with a second-order difference penalty on the coefficients.
// With uniform knots the penalty null space contains exactly the constant and
// linear functions, so those are reproduced without bias.
class BSplineBasis {
  public:
    static constexpr int kDegree = 3;

    BSplineBasis(double a, double b, int num_basis);

    int size() const { return num_basis_; }
    double domain_a() const { return a_; }
    double domain_b() const { return b_; }

    // Values of the kDegree+1 basis functions that are non-zero at x.
    // Returns the index of the first non-zero basis function; x is clamped
    // to [a, b].
    int evaluate_nonzero(double x, std::array<double, kDegree + 1>& values) const;

    // Dense design matrix, |x| rows by size() columns.
    Eigen::MatrixXd design(const Eigen::VectorXd& x) const;

    // DᵀD with D the (size-2) x size second-difference matrix.
    Eigen::MatrixXd difference_penalty() const;

  private:
    double a_, b_, h_;
    int num_basis_;
    std::vector<double> knots_;
};

// Smoothing-parameter policy: GCV over a log-spaced grid unless fixed.
struct SmoothingPolicy {
    bool fixed = false;
    double lambda = 1.0;          // used when fixed
    double log10_min = -6.0;      // GCV search range
    double log10_max = 6.0;
    int grid_size = 25;
};

// Sufficient statistics of a least-squares problem, accumulated point by
// point so large scatter clouds never materialize a design matrix.
struct NormalEquations {
    Eigen::MatrixXd xtx;
    Eigen::VectorXd xty;
    double yty = 0.0;
    long n = 0;

    explicit NormalEquations(int k)
        : xtx(Eigen::MatrixXd::Zero(k, k)), xty(Eigen::VectorXd::Zero(k)) {}
};

void accumulate_1d(NormalEquations& ne, const BSplineBasis& basis, double x, double y);

// Tensor-product row: kron(basis_x(x), basis_y(y)) with coefficient layout
// index = ix * basis_y.size() + iy.
void accumulate_2d(NormalEquations& ne, const BSplineBasis& basis_x, const BSplineBasis& basis_y,
                   double x, double y, double z);

struct PenalizedFit {
    Eigen::VectorXd coefs;
    double lambda = 0.0;
    double edf = 0.0;  // effective degrees of freedom, tr(H)
};

// Minimizes ||y - Xc||^2 + lambda * cᵀPc given the normal equations.
// Throws if the penalized system is not positive definite.
PenalizedFit solve_penalized(const NormalEquations& ne, const Eigen::MatrixXd& penalty,
                             const SmoothingPolicy& policy);

}  // namespace fdepth
