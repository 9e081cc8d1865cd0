#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fdepth/depth.hpp"
#include "fdepth/iev.hpp"
#include "fdepth/sim.hpp"

namespace fdepth {

struct ReplicateRecord {
    std::string cell;  // "model1-setting2", "induced-j2", ...
    int replicate = 0;
    bool ok = false;
    std::string error;
    double rho0 = 0.0;
    std::optional<double> rho_u;
    std::optional<double> delta_rho_pct;  // (rho_u - rho0) / rho0 * 100
    std::optional<double> alpha_star;
};

struct ExperimentReport {
    std::string cell;
    int replicates = 0;
    int failures = 0;
    int alpha_star_count = 0;  // replicates where alpha* exists
    double median_rho0 = 0.0;
    std::optional<double> median_rho_u;
    std::optional<double> median_delta_rho_pct;
    std::optional<double> median_alpha_star;
    std::uint64_t seed = 0;
    std::string config_echo;  // JSON text of the run configuration
};

struct SimCellConfig {
    int model_id = 1;
    int setting_id = 4;
    int replicates = 50;
    int n = 100;
    int bootstrap = 50;
    std::uint64_t seed = 1;
    int threads = 1;           // parallel replicates with derived seeds
    int grid_points = 75;
    int grid_max_points = 101;
    IevConfig iev;
    AlphaSelectionConfig alpha;
    double max_failure_fraction = 0.10;
};

struct CellOutcome {
    ExperimentReport report;
    std::vector<ReplicateRecord> records;
};

CellOutcome run_simulation_cell(const SimCellConfig& config);

struct InducedSparsityConfig {
    SparsityProtocol protocol = SparsityProtocol::FixedJ2;
    int replicates = 50;
    int bootstrap = 50;
    std::uint64_t seed = 1;
    int threads = 1;
    int grid_max_points = 101;
    IevConfig iev;  // clamp_nonnegative set by caller
    AlphaSelectionConfig alpha;
    double max_failure_fraction = 0.10;
};

// Benchmark depth is MBD of the densely observed data; sparsity is induced
// per replicate. All subjects must share one common grid.
CellOutcome run_induced_sparsity(const SparseFunctionalDataset& dataset,
                                 const InducedSparsityConfig& config);

// records.csv, report.json and scatter.csv under out_dir.
void emit_outputs(const std::vector<ReplicateRecord>& records, const ExperimentReport& report,
                  const std::string& out_dir);

double median(std::vector<double> values);  // midpoint average for even counts

// Common-grid view of a sparse dataset; throws when subjects' grids differ.
DenseCurveMatrix to_dense(const SparseFunctionalDataset& dataset);

}  // namespace fdepth
