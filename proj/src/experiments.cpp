#include "fdepth/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "fdepth/rng.hpp"

namespace fdepth {

using nlohmann::json;

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty input");
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    if (values.size() % 2 == 1) return values[m];
    return 0.5 * (values[m - 1] + values[m]);
}

DenseCurveMatrix to_dense(const SparseFunctionalDataset& dataset) {
    if (dataset.subjects.empty()) throw std::invalid_argument("to_dense: empty dataset");
    const Eigen::VectorXd& ref = dataset.subjects.front().obs_points;
    for (const auto& subj : dataset.subjects)
        if (subj.obs_points.size() != ref.size() || subj.obs_points != ref)
            throw std::runtime_error(
                "to_dense: subjects observed on unequal grids; regularize the data first");
    DenseCurveMatrix m;
    m.grid = EvaluationGrid(ref);
    m.values.resize(static_cast<Eigen::Index>(dataset.subjects.size()), ref.size());
    for (std::size_t i = 0; i < dataset.subjects.size(); ++i)
        m.values.row(static_cast<Eigen::Index>(i)) = dataset.subjects[i].obs_values.transpose();
    return m;
}

namespace {

// One replicate body shared by the simulation and induced-sparsity runners:
// compare MBD and MBD_U(alpha*) rankings of the reconstructions against a
// benchmark depth vector.
ReplicateRecord evaluate_replicate(const std::string& cell, int replicate,
                                   const Eigen::VectorXd& benchmark_depth,
                                   const SparseFunctionalDataset& sparse,
                                   const EvaluationGrid& grid, int bootstrap, std::uint64_t seed,
                                   const IevConfig& iev_cfg, const AlphaSelectionConfig& alpha_cfg) {
    ReplicateRecord rec;
    rec.cell = cell;
    rec.replicate = replicate;
    try {
        const IevResult iev = iev_fit(sparse, grid, bootstrap, seed, iev_cfg);
        const DenseCurveMatrix est = iev.estimate_matrix();
        const DepthVector mbd_est = mbd_fast(est, alpha_cfg.weighting);
        rec.rho0 = spearman(benchmark_depth, mbd_est.values);

        AlphaSelectionConfig cfg = alpha_cfg;
        cfg.clamp_nonnegative = iev_cfg.clamp_nonnegative;
        DenseCurveMatrix raw_est{iev.grid, iev.estimates};
        const auto star = select_alpha_star(raw_est, iev.variances, cfg);
        if (star) {
            rec.alpha_star = star->alpha_star;
            rec.rho_u = spearman(benchmark_depth, star->mbd_u.values);
            rec.delta_rho_pct = (*rec.rho_u - rec.rho0) / rec.rho0 * 100.0;
        }
        rec.ok = true;
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
    }
    return rec;
}

ExperimentReport aggregate(const std::string& cell, const std::vector<ReplicateRecord>& records,
                           std::uint64_t seed, std::string config_echo,
                           double max_failure_fraction) {
    ExperimentReport report;
    report.cell = cell;
    report.replicates = static_cast<int>(records.size());
    report.seed = seed;
    report.config_echo = std::move(config_echo);

    std::vector<double> rho0s, rho_us, deltas, alphas;
    for (const auto& rec : records) {
        if (!rec.ok) {
            ++report.failures;
            continue;
        }
        rho0s.push_back(rec.rho0);
        if (rec.alpha_star) {
            ++report.alpha_star_count;
            rho_us.push_back(*rec.rho_u);
            deltas.push_back(*rec.delta_rho_pct);
            alphas.push_back(*rec.alpha_star);
        }
    }
    if (report.failures > max_failure_fraction * report.replicates)
        throw std::runtime_error(cell + ": " + std::to_string(report.failures) + " of " +
                                 std::to_string(report.replicates) +
                                 " replicates failed; aborting cell");
    if (rho0s.empty()) throw std::runtime_error(cell + ": no successful replicates");
    report.median_rho0 = median(rho0s);
    if (!rho_us.empty()) {
        report.median_rho_u = median(rho_us);
        report.median_delta_rho_pct = median(deltas);
        report.median_alpha_star = median(alphas);
    }
    return report;
}

template <typename Fn>
void parallel_replicates(int replicates, int threads, Fn&& body) {
    threads = std::max(1, threads);
    if (threads == 1) {
        for (int r = 0; r < replicates; ++r) body(r);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&]() {
            for (int r = next.fetch_add(1); r < replicates; r = next.fetch_add(1)) body(r);
        });
    for (auto& th : pool) th.join();
}

}  // namespace

CellOutcome run_simulation_cell(const SimCellConfig& config) {
    if (config.model_id < 1 || config.model_id > 4)
        throw std::invalid_argument("run_simulation_cell: invalid model_id");
    setting_protocol(config.setting_id);  // validates
    if (config.replicates < 1) throw std::invalid_argument("run_simulation_cell: replicates >= 1");

    const std::string cell =
        "model" + std::to_string(config.model_id) + "-setting" + std::to_string(config.setting_id);

    json echo = {{"model", config.model_id},     {"setting", config.setting_id},
                 {"replicates", config.replicates}, {"n", config.n},
                 {"bootstrap", config.bootstrap},   {"seed", config.seed},
                 {"grid_points", config.grid_points}};

    IevConfig iev_cfg = config.iev;
    iev_cfg.threads = 1;  // replicate level owns the parallelism

    std::vector<ReplicateRecord> records(static_cast<std::size_t>(config.replicates));
    parallel_replicates(config.replicates, config.threads, [&](int r) {
        // Generation seed excludes the setting so all settings of a replicate
        // sparsify the same generated sample.
        ModelSpec model;
        model.model_id = config.model_id;
        model.n = config.n;
        model.grid_points = config.grid_points;
        model.seed = derive_seed(config.seed, 0x6e4, static_cast<std::uint64_t>(config.model_id),
                                 static_cast<std::uint64_t>(r));
        const GeneratedSample sample = generate(model);
        const DepthVector benchmark = mbd_fast(sample.true_curves);

        SparsitySpec sparsity;
        sparsity.protocol = setting_protocol(config.setting_id);
        sparsity.seed = derive_seed(config.seed, 0x5b, static_cast<std::uint64_t>(config.setting_id),
                                    static_cast<std::uint64_t>(r));
        const SparseFunctionalDataset sparse = sparsify(sample.noisy_curves, sparsity);
        const EvaluationGrid grid = union_grid(sparse, config.grid_max_points);

        const std::uint64_t iev_seed =
            derive_seed(config.seed, 0x1e7, static_cast<std::uint64_t>(config.setting_id),
                        static_cast<std::uint64_t>(r));
        records[static_cast<std::size_t>(r)] =
            evaluate_replicate(cell, r + 1, benchmark.values, sparse, grid, config.bootstrap,
                               iev_seed, iev_cfg, config.alpha);
    });

    CellOutcome out;
    out.records = std::move(records);
    out.report =
        aggregate(cell, out.records, config.seed, echo.dump(), config.max_failure_fraction);
    return out;
}

CellOutcome run_induced_sparsity(const SparseFunctionalDataset& dataset,
                                 const InducedSparsityConfig& config) {
    const DenseCurveMatrix dense = to_dense(dataset);
    const DepthVector benchmark = mbd_fast(dense, config.alpha.weighting);

    std::string protocol_name;
    switch (config.protocol) {
        case SparsityProtocol::FixedJ5: protocol_name = "j5"; break;
        case SparsityProtocol::J2to5: protocol_name = "j2to5"; break;
        case SparsityProtocol::FixedJ2: protocol_name = "j2"; break;
        default: throw std::invalid_argument("run_induced_sparsity: protocol must be j5/j2to5/j2");
    }
    const std::string cell = "induced-" + protocol_name;

    json echo = {{"protocol", protocol_name},
                 {"replicates", config.replicates},
                 {"n", dense.num_curves()},
                 {"bootstrap", config.bootstrap},
                 {"seed", config.seed},
                 {"clamp_nonnegative", config.iev.clamp_nonnegative}};

    IevConfig iev_cfg = config.iev;
    iev_cfg.threads = 1;

    std::vector<ReplicateRecord> records(static_cast<std::size_t>(config.replicates));
    parallel_replicates(config.replicates, config.threads, [&](int r) {
        SparsitySpec sparsity;
        sparsity.protocol = config.protocol;
        sparsity.seed = derive_seed(config.seed, 0x1d5b, static_cast<std::uint64_t>(r));
        SparseFunctionalDataset sparse = sparsify(dense, sparsity);
        for (std::size_t i = 0; i < sparse.subjects.size(); ++i)
            sparse.subjects[i].id = dataset.subjects[i].id;
        const EvaluationGrid grid = union_grid(sparse, config.grid_max_points);
        const std::uint64_t iev_seed = derive_seed(config.seed, 0x1d17, static_cast<std::uint64_t>(r));
        records[static_cast<std::size_t>(r)] =
            evaluate_replicate(cell, r + 1, benchmark.values, sparse, grid, config.bootstrap,
                               iev_seed, iev_cfg, config.alpha);
    });

    CellOutcome out;
    out.records = std::move(records);
    out.report =
        aggregate(cell, out.records, config.seed, echo.dump(), config.max_failure_fraction);
    return out;
}

void emit_outputs(const std::vector<ReplicateRecord>& records, const ExperimentReport& report,
                  const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir))
        throw std::runtime_error("emit_outputs: cannot create directory " + out_dir);

    {
        std::ofstream out(fs::path(out_dir) / "records.csv");
        if (!out) throw std::runtime_error("emit_outputs: cannot write records.csv");
        out.precision(17);
        out << "cell,replicate,status,rho0,rho_u,delta_rho_pct,alpha_star\n";
        for (const auto& rec : records) {
            out << rec.cell << ',' << rec.replicate << ',' << (rec.ok ? "ok" : "failed") << ',';
            if (rec.ok) out << rec.rho0;
            out << ',';
            if (rec.rho_u) out << *rec.rho_u;
            out << ',';
            if (rec.delta_rho_pct) out << *rec.delta_rho_pct;
            out << ',';
            if (rec.alpha_star) out << *rec.alpha_star;
            out << '\n';
        }
    }
    {
        std::ofstream out(fs::path(out_dir) / "scatter.csv");
        if (!out) throw std::runtime_error("emit_outputs: cannot write scatter.csv");
        out.precision(17);
        out << "cell,replicate,rho0,rho_u\n";
        for (const auto& rec : records)
            if (rec.ok && rec.rho_u)
                out << rec.cell << ',' << rec.replicate << ',' << rec.rho0 << ',' << *rec.rho_u
                    << '\n';
    }
    {
        json j;
        j["cell"] = report.cell;
        j["replicates"] = report.replicates;
        j["failures"] = report.failures;
        j["alpha_star_count"] = report.alpha_star_count;
        j["median_rho0"] = report.median_rho0;
        if (report.median_rho_u) j["median_rho_u"] = *report.median_rho_u;
        if (report.median_delta_rho_pct) j["median_delta_rho_pct"] = *report.median_delta_rho_pct;
        if (report.median_alpha_star) j["median_alpha_star"] = *report.median_alpha_star;
        j["seed"] = report.seed;
        j["config"] = json::parse(report.config_echo);
        std::ofstream out(fs::path(out_dir) / "report.json");
        if (!out) throw std::runtime_error("emit_outputs: cannot write report.json");
        out << j.dump(2) << '\n';
    }
}

}  // namespace fdepth
