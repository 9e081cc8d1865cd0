#include "fdepth/iev.hpp"

#include <atomic>
#include <mutex>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "fdepth/rng.hpp"

namespace fdepth {

namespace {

struct BootstrapFit {
    Eigen::MatrixXd estimates;  // n x |grid|
    Eigen::MatrixXd within;     // n x |grid|
};

SparseFunctionalDataset resample_with_replacement(const SparseFunctionalDataset& dataset,
                                                  Rng& rng) {
    SparseFunctionalDataset out;
    out.domain = dataset.domain;
    std::uniform_int_distribution<std::size_t> pick(0, dataset.subjects.size() - 1);
    out.subjects.reserve(dataset.subjects.size());
    for (std::size_t i = 0; i < dataset.subjects.size(); ++i) {
        SparseSubject subj = dataset.subjects[pick(rng)];
        subj.id = "b" + std::to_string(i + 1);  // resample ids need not be unique
        out.subjects.push_back(std::move(subj));
    }
    return out;
}

// Refit the pipeline on one (re)sample and evaluate every original subject.
BootstrapFit fit_and_predict(const SparseFunctionalDataset& fit_data,
                             const SparseFunctionalDataset& original, const EvaluationGrid& grid,
                             const IevConfig& config) {
    const FpcModel model = fit_fpca(fit_data, grid, config.smoother, config.variance_threshold);
    const Eigen::Index n = static_cast<Eigen::Index>(original.subjects.size());
    BootstrapFit out;
    out.estimates.resize(n, grid.size());
    out.within.resize(n, grid.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& subj = original.subjects[static_cast<std::size_t>(i)];
        const Eigen::VectorXd scores =
            blup_scores(model, subj.obs_points, subj.obs_values, subj.id);
        out.estimates.row(i) = reconstruct(model, scores).transpose();
        out.within.row(i) = conditional_variance(model, subj.obs_points).transpose();
    }
    return out;
}

}  // namespace

DenseCurveMatrix IevResult::estimate_matrix() const {
    DenseCurveMatrix m{grid, estimates};
    if (clamp_nonnegative) m.values = m.values.cwiseMax(0.0);
    return m;
}

std::pair<DenseCurveMatrix, DenseCurveMatrix> IevResult::bounds(double alpha) const {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("IevResult::bounds: alpha must be in (0, 1)");
    const double z = normal_quantile(1.0 - alpha / 2.0);
    const Eigen::MatrixXd half = z * variances.cwiseMax(0.0).cwiseSqrt();
    DenseCurveMatrix lower{grid, estimates - half};
    DenseCurveMatrix upper{grid, estimates + half};
    if (clamp_nonnegative) {
        lower.values = lower.values.cwiseMax(0.0);
        upper.values = upper.values.cwiseMax(0.0);
    }
    return {std::move(lower), std::move(upper)};
}

CurveReconstruction IevResult::reconstruction(Eigen::Index subject, double alpha) const {
    auto [lower, upper] = bounds(alpha);
    CurveReconstruction rec;
    rec.grid = grid;
    rec.estimate = estimate_matrix().values.row(subject).transpose();
    rec.variance_diag = variances.row(subject).transpose();
    rec.lower = lower.values.row(subject).transpose();
    rec.upper = upper.values.row(subject).transpose();
    rec.alpha = alpha;
    return rec;
}

IevResult iev_fit(const SparseFunctionalDataset& dataset, const EvaluationGrid& grid, int B,
                  std::uint64_t seed, const IevConfig& config) {
    if (B < 1) throw std::invalid_argument("iev_fit: B must be >= 1");
    if (dataset.subjects.size() < 2) throw std::invalid_argument("iev_fit: need >= 2 subjects");

    const Eigen::Index n = static_cast<Eigen::Index>(dataset.subjects.size());
    std::vector<BootstrapFit> fits(static_cast<std::size_t>(B));
    std::atomic<bool> failed{false};
    std::string failure_message;
    std::mutex failure_mutex;

    auto run_one = [&](int b) {
        try {
            if (B == 1) {
                // Degenerate bootstrap: the single fit uses the original data.
                fits[0] = fit_and_predict(dataset, dataset, grid, config);
                return;
            }
            std::string last_error;
            for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
                Rng rng = make_rng(derive_seed(seed, 0xb007, static_cast<std::uint64_t>(b),
                                               static_cast<std::uint64_t>(attempt)));
                SparseFunctionalDataset resample = resample_with_replacement(dataset, rng);
                try {
                    fits[static_cast<std::size_t>(b)] =
                        fit_and_predict(resample, dataset, grid, config);
                    return;
                } catch (const std::exception& e) {
                    last_error = e.what();
                }
            }
            throw std::runtime_error("bootstrap replicate " + std::to_string(b + 1) +
                                     " failed after " + std::to_string(config.max_retries + 1) +
                                     " attempts: " + last_error);
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failed.exchange(true)) failure_message = e.what();
        }
    };

    const int threads = std::max(1, config.threads);
    if (threads == 1 || B == 1) {
        for (int b = 0; b < B; ++b) run_one(b);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&]() {
                for (int b = next.fetch_add(1); b < B; b = next.fetch_add(1)) run_one(b);
            });
        for (auto& th : pool) th.join();
    }
    if (failed.load()) throw std::runtime_error("iev_fit: " + failure_message);

    IevResult result;
    result.grid = grid;
    result.B = B;
    result.seed = seed;
    result.clamp_nonnegative = config.clamp_nonnegative;
    for (const auto& subj : dataset.subjects) {
        result.subject_ids.push_back(subj.id);
        result.subject_obs_counts.push_back(subj.obs_points.size());
    }

    // Deterministic reduction ordered by b.
    const Eigen::Index g = grid.size();
    Eigen::MatrixXd mean_est = Eigen::MatrixXd::Zero(n, g);
    Eigen::MatrixXd mean_within = Eigen::MatrixXd::Zero(n, g);
    for (int b = 0; b < B; ++b) {
        mean_est += fits[static_cast<std::size_t>(b)].estimates;
        mean_within += fits[static_cast<std::size_t>(b)].within;
    }
    mean_est /= static_cast<double>(B);
    mean_within /= static_cast<double>(B);

    // Between-bootstrap sample variance (B-1 denominator); zero when B = 1.
    Eigen::MatrixXd between = Eigen::MatrixXd::Zero(n, g);
    if (B > 1) {
        for (int b = 0; b < B; ++b) {
            const Eigen::MatrixXd dev = fits[static_cast<std::size_t>(b)].estimates - mean_est;
            between += dev.cwiseProduct(dev);
        }
        between /= static_cast<double>(B - 1);
    }

    result.estimates = std::move(mean_est);
    result.between_variances = between;
    result.variances = mean_within + between;
    return result;
}

void write_iev_csv(const IevResult& result, const std::vector<double>& alphas,
                   const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out.precision(17);
    out << "subject_id,s,estimate,variance,alpha,lower,upper\n";
    const DenseCurveMatrix est = result.estimate_matrix();
    for (double alpha : alphas) {
        auto [lower, upper] = result.bounds(alpha);
        for (std::size_t i = 0; i < result.subject_ids.size(); ++i) {
            const Eigen::Index r = static_cast<Eigen::Index>(i);
            for (Eigen::Index p = 0; p < result.grid.size(); ++p)
                out << result.subject_ids[i] << ',' << result.grid.points()(p) << ','
                    << est.values(r, p) << ',' << result.variances(r, p) << ',' << alpha << ','
                    << lower.values(r, p) << ',' << upper.values(r, p) << '\n';
        }
    }
}

}  // namespace fdepth
