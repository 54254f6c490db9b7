#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "cellfree/channel.hpp"
#include "cellfree/circuit.hpp"
#include "cellfree/config_file.hpp"
#include "cellfree/consensus.hpp"
#include "cellfree/model.hpp"
#include "cellfree/orchestrator.hpp"

namespace cellfree::experiment {

enum class Mode {
    proposed,
    no_coop,
    no_coop_no_consensus,
    random_caps,
    midpoint_caps,
    ff_calibrated,
};

Mode mode_from_string(const std::string& name);
std::string mode_to_string(Mode mode);

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Full experiment description. Defaults reproduce the reference scenario:
// B=4 BSs with N=2 antennas, U=4 UEs in two discs, R=2 surfaces with M=144
// elements, K=16 subcarriers at 3.5 GHz / 100 MHz, -90 dBm noise.
struct ExperimentConfig {
    model::SystemConfig sys;  // p_max_w is overwritten per sweep point
    channel::GeometrySpec geometry;
    channel::PathlossModel pathloss;
    channel::FadingModel fading;
    channel::CsiErrorModel csi;
    circuit::CircuitParams circuit;
    orchestrator::AlgoParams algo;
    std::string graph_topology = "complete";
    Mode mode = Mode::proposed;
    std::vector<double> pmax_dbm = {-10.0, 0.0, 10.0, 20.0, 30.0};
    int realizations = 100;
    std::uint64_t master_seed = 1;
    int threads = 1;
    bool measure_wall_ms = false;
    std::string csv_path = "results.csv";
    std::string trace_path;

    void validate() const;  // throws ConfigError naming the offending key
    config::Table to_table() const;
    orchestrator::Problem problem(double p_max_w) const;
    consensus::Graph graph() const;
};

// Missing keys fall back to the defaults above; geometry defaults scale with
// the configured node counts. Unknown keys are rejected.
ExperimentConfig config_from_table(const config::Table& table);
ExperimentConfig load_config(const std::string& path);
ExperimentConfig load_config_string(std::string_view text);

double dbm_to_watt(double dbm);

struct ResultRow {
    std::string mode;
    double p_max_dbm = 0.0;
    std::uint64_t seed = 0;
    int iterations = 0;
    double final_sum_rate = 0.0;
    double sum_rate_per_sc = 0.0;
    Eigen::VectorXd per_user_rates;
    double final_disagreement = 0.0;   // picofarad
    Eigen::VectorXd per_bs_power;
    double wall_ms = 0.0;
    double initial_sum_rate = 0.0;     // in-memory only, not part of the CSV
};

struct SweepOutcome {
    std::vector<ResultRow> rows;
    std::vector<orchestrator::TraceRow> first_trace;  // trace of the first sweep cell
    orchestrator::RunAudit worst_audit;               // merged across all runs
    int bs_count = 0;
};

// Ordered (p_max, realization) grid; each cell derives its own seed from
// (master_seed, sweep index, realization index) so cells are independent
// jobs. `threads` > 1 distributes cells without changing any output.
SweepOutcome run_sweep(const ExperimentConfig& cfg);

// One realization of a non-proposed mode on the given channels.
ResultRow run_baseline(Mode mode, std::uint64_t seed, const ExperimentConfig& cfg,
                       double p_max_w, const channel::ChannelRealization& channels);

// Dispatch helper used by the sweep (any mode).
ResultRow run_single(Mode mode, std::uint64_t seed, const ExperimentConfig& cfg,
                     double p_max_w, const channel::ChannelRealization& channels,
                     orchestrator::RunResult* detail = nullptr);

// Header: mode,p_max_dbm,seed,iterations,sum_rate_bpshz,sum_rate_per_sc,
//         disagreement,power_b0..power_b{B-1},wall_ms
// 12 significant digits, '.' decimal separator, byte-deterministic.
void write_csv(const std::vector<ResultRow>& rows, int bs_count, const std::string& path);
std::string render_csv(const std::vector<ResultRow>& rows, int bs_count);

void write_trace_csv(const std::vector<orchestrator::TraceRow>& trace,
                     const std::string& path);

}  // namespace cellfree::experiment
