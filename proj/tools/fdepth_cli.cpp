#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include "fdepth/experiments.hpp"
#include "fdepth/io.hpp"

namespace {

void print_report(const fdepth::ExperimentReport& report) {
    auto opt = [](const std::optional<double>& v) {
        return v ? std::to_string(*v) : std::string("-");
    };
    std::cout << report.cell << ": replicates=" << report.replicates
              << " failures=" << report.failures << " median_rho0=" << report.median_rho0
              << " median_rho_u=" << opt(report.median_rho_u)
              << " median_delta_rho_pct=" << opt(report.median_delta_rho_pct)
              << " median_alpha_star=" << opt(report.median_alpha_star) << "\n";
}

fdepth::SparsityProtocol parse_protocol(const std::string& name) {
    if (name == "j5") return fdepth::SparsityProtocol::FixedJ5;
    if (name == "j2to5") return fdepth::SparsityProtocol::J2to5;
    if (name == "j2") return fdepth::SparsityProtocol::FixedJ2;
    throw CLI::ValidationError("--protocol must be one of j5, j2to5, j2");
}

void write_depth_csv(const std::string& path, const std::vector<std::string>& ids,
                     const fdepth::DepthVector& depth) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out.precision(17);
    out << "subject_id,method,alpha,depth,rank\n";
    // rank 1 = deepest
    std::vector<Eigen::Index> order(ids.size());
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return depth.values(a) > depth.values(b);
    });
    std::vector<int> rank(ids.size());
    for (std::size_t r = 0; r < order.size(); ++r)
        rank[static_cast<std::size_t>(order[r])] = static_cast<int>(r) + 1;
    const char* method = depth.method == fdepth::DepthMethod::MBD ? "mbd" : "mbdu";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << ids[i] << ',' << method << ',';
        if (depth.alpha_used) out << *depth.alpha_used;
        out << ',' << depth.values(static_cast<Eigen::Index>(i)) << ',' << rank[i] << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Depth analysis for sparsely observed functional data"};
    app.require_subcommand(1);

    // simulate
    int model = 1, setting = 4, replicates = 50, n = 100, bootstrap = 50, threads = 1;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    bool full_scale = false;
    auto* sim = app.add_subcommand("simulate", "Run one model/setting simulation cell");
    sim->add_option("--model", model, "Generator model id (1-4)")->check(CLI::Range(1, 4));
    sim->add_option("--setting", setting, "Sparsity setting id (1-4)")->check(CLI::Range(1, 4));
    sim->add_option("--replicates", replicates, "Replicates per cell");
    sim->add_option("--n", n, "Subjects per replicate");
    sim->add_option("--bootstrap", bootstrap, "Bootstrap iterations");
    sim->add_option("--seed", seed, "Base RNG seed");
    sim->add_option("--threads", threads, "Parallel replicate workers");
    sim->add_option("--out", out_dir, "Output directory");
    sim->add_flag("--full-scale", full_scale, "Use 100 replicates, B=100, n=200");

    // induce
    std::string input_file, protocol_name = "j2";
    bool clamp = false;
    auto* induce = app.add_subcommand("induce", "Induce sparsity on a densely observed dataset");
    induce->add_option("--input", input_file, "Long CSV (subject_id,s,value)")->required();
    induce->add_option("--protocol", protocol_name, "Sparsity protocol: j5, j2to5 or j2");
    induce->add_option("--replicates", replicates, "Replicates");
    induce->add_option("--bootstrap", bootstrap, "Bootstrap iterations");
    induce->add_option("--seed", seed, "Base RNG seed");
    induce->add_option("--threads", threads, "Parallel replicate workers");
    induce->add_option("--out", out_dir, "Output directory");
    induce->add_flag("--clamp-nonnegative", clamp,
                     "Clamp estimates and confidence bounds at zero");

    // depth
    std::string depth_input, depth_out = "depth.csv", method = "mbd";
    double alpha = 0.05;
    bool auto_alpha = false;
    auto* depth_cmd = app.add_subcommand("depth", "Compute depth values for a dataset");
    depth_cmd->add_option("--input", depth_input, "Long CSV (subject_id,s,value)")->required();
    depth_cmd->add_option("--method", method, "mbd or mbdu")
        ->check(CLI::IsMember({"mbd", "mbdu"}));
    depth_cmd->add_option("--alpha", alpha, "Confidence-level parameter for mbdu");
    depth_cmd->add_flag("--auto-alpha", auto_alpha, "Select alpha by the data-driven rule");
    depth_cmd->add_option("--bootstrap", bootstrap, "Bootstrap iterations for mbdu");
    depth_cmd->add_option("--seed", seed, "RNG seed for mbdu");
    depth_cmd->add_option("--threads", threads, "Bootstrap workers for mbdu");
    depth_cmd->add_flag("--clamp-nonnegative", clamp,
                        "Clamp estimates and confidence bounds at zero");
    depth_cmd->add_option("--out", depth_out, "Output CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            fdepth::SimCellConfig cfg;
            cfg.model_id = model;
            cfg.setting_id = setting;
            cfg.replicates = full_scale ? 100 : replicates;
            cfg.n = full_scale ? 200 : n;
            cfg.bootstrap = full_scale ? 100 : bootstrap;
            cfg.seed = seed;
            cfg.threads = threads;
            const fdepth::CellOutcome outcome = fdepth::run_simulation_cell(cfg);
            fdepth::emit_outputs(outcome.records, outcome.report, out_dir);
            print_report(outcome.report);
        } else if (induce->parsed()) {
            const auto dataset = fdepth::load_long_csv(input_file);
            fdepth::InducedSparsityConfig cfg;
            cfg.protocol = parse_protocol(protocol_name);
            cfg.replicates = replicates;
            cfg.bootstrap = bootstrap;
            cfg.seed = seed;
            cfg.threads = threads;
            cfg.iev.clamp_nonnegative = clamp;
            const fdepth::CellOutcome outcome = fdepth::run_induced_sparsity(dataset, cfg);
            fdepth::emit_outputs(outcome.records, outcome.report, out_dir);
            print_report(outcome.report);
        } else if (depth_cmd->parsed()) {
            const auto dataset = fdepth::load_long_csv(depth_input);
            std::vector<std::string> ids;
            for (const auto& subj : dataset.subjects) ids.push_back(subj.id);
            if (method == "mbd") {
                const auto dense = fdepth::to_dense(dataset);
                write_depth_csv(depth_out, ids, fdepth::mbd_fast(dense));
            } else {
                const auto grid = fdepth::union_grid(dataset);
                fdepth::IevConfig iev_cfg;
                iev_cfg.clamp_nonnegative = clamp;
                iev_cfg.threads = threads;
                const auto iev = fdepth::iev_fit(dataset, grid, bootstrap, seed, iev_cfg);
                fdepth::DepthVector depth;
                if (auto_alpha) {
                    fdepth::AlphaSelectionConfig acfg;
                    acfg.clamp_nonnegative = clamp;
                    fdepth::DenseCurveMatrix raw{iev.grid, iev.estimates};
                    const auto star = fdepth::select_alpha_star(raw, iev.variances, acfg);
                    if (!star) {
                        std::cout << "no alpha qualifies; falling back to MBD of the estimates\n";
                        depth = fdepth::mbd_fast(iev.estimate_matrix());
                    } else {
                        depth = star->mbd_u;
                    }
                } else {
                    auto [lower, upper] = iev.bounds(alpha);
                    depth = fdepth::mbd_u(iev.estimate_matrix(), lower, upper);
                    depth.alpha_used = alpha;
                }
                write_depth_csv(depth_out, ids, depth);
            }
            std::cout << "wrote " << depth_out << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
