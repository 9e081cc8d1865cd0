#include "fdepth/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

namespace fdepth {

void SparseFunctionalDataset::validate() const {
    std::unordered_set<std::string> seen;
    for (const auto& subj : subjects) {
        if (!seen.insert(subj.id).second)
            throw std::invalid_argument("duplicate subject id: " + subj.id);
        if (subj.obs_points.size() != subj.obs_values.size())
            throw std::invalid_argument("subject " + subj.id + ": points/values length mismatch");
        if (subj.obs_points.size() < 1)
            throw std::invalid_argument("subject " + subj.id + ": needs at least one observation");
        for (Eigen::Index j = 0; j < subj.obs_points.size(); ++j) {
            const double s = subj.obs_points(j);
            if (!std::isfinite(s) || !std::isfinite(subj.obs_values(j)))
                throw std::invalid_argument("subject " + subj.id + ": non-finite observation");
            if (j > 0 && s <= subj.obs_points(j - 1))
                throw std::invalid_argument("subject " + subj.id +
                                            ": observation points must be strictly increasing");
            if (s < domain.a - 1e-12 || s > domain.b + 1e-12)
                throw std::invalid_argument("subject " + subj.id + ": observation outside domain");
        }
    }
}

Eigen::VectorXd interp_linear(const Eigen::VectorXd& grid, const Eigen::VectorXd& values,
                              const Eigen::VectorXd& queries) {
    Eigen::VectorXd out(queries.size());
    const Eigen::Index g = grid.size();
    for (Eigen::Index q = 0; q < queries.size(); ++q) {
        const double x = queries(q);
        if (x <= grid(0)) {
            out(q) = values(0);
            continue;
        }
        if (x >= grid(g - 1)) {
            out(q) = values(g - 1);
            continue;
        }
        const double* begin = grid.data();
        const Eigen::Index hi = std::upper_bound(begin, begin + g, x) - begin;
        const Eigen::Index lo = hi - 1;
        const double t = (x - grid(lo)) / (grid(hi) - grid(lo));
        out(q) = (1.0 - t) * values(lo) + t * values(hi);
    }
    return out;
}

Eigen::MatrixXd interp_linear_rows(const Eigen::VectorXd& grid, const Eigen::MatrixXd& values,
                                   const Eigen::VectorXd& queries) {
    Eigen::MatrixXd out(queries.size(), values.cols());
    for (Eigen::Index c = 0; c < values.cols(); ++c)
        out.col(c) = interp_linear(grid, values.col(c), queries);
    return out;
}

EvaluationGrid union_grid(const SparseFunctionalDataset& dataset, int max_points) {
    if (dataset.subjects.empty()) throw std::invalid_argument("union_grid: empty dataset");
    if (max_points < 2) throw std::invalid_argument("union_grid: max_points must be >= 2");
    std::set<double> pts;
    for (const auto& subj : dataset.subjects)
        for (Eigen::Index j = 0; j < subj.obs_points.size(); ++j) pts.insert(subj.obs_points(j));
    if (static_cast<int>(pts.size()) > max_points)
        return EvaluationGrid::equidistant(dataset.domain.a, dataset.domain.b, max_points);
    if (pts.size() < 2) {
        // Degenerate union; fall back to the domain endpoints plus the point.
        pts.insert(dataset.domain.a);
        pts.insert(dataset.domain.b);
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(pts.size()));
    Eigen::Index i = 0;
    for (double p : pts) v(i++) = p;
    return EvaluationGrid(v);
}

}  // namespace fdepth
