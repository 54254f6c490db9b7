#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <vector>

#include "cellfree/channel.hpp"
#include "cellfree/circuit.hpp"
#include "cellfree/consensus.hpp"
#include "cellfree/model.hpp"
#include "cellfree/precoder.hpp"

namespace cellfree::orchestrator {

struct AlgoParams {
    double tau = 1e-2;
    double epsilon = 1e-3;
    int t_max = 2000;
    bool cooperation = true;        // pricing vectors active
    bool consensus_enabled = true;  // capacitor averaging active
    bool optimize_caps = true;      // capacitor block active at all
    double rho_exponent = 0.99;
    bool printed_q_scaling = false;

    void validate() const;
};

struct StepSizes {
    double rho;
    double alpha;
};

// rho_0 = 1, rho_t = (t+2)^(-rho_exponent) for t >= 1, alpha_t = 1/(t+2).
StepSizes step_sizes(int t, const AlgoParams& params);

struct Problem {
    model::SystemConfig sys;
    circuit::CircuitParams circuit;
    channel::CsiErrorModel csi;
    consensus::Graph graph;

    void validate() const;
};

struct RoundMessage {
    int from = -1;
    Eigen::VectorXd tracker;
    Eigen::VectorXd caps_pf;
};

// One BS agent: its iterate slice, optimizer memory, the round's local noisy
// sample, and the neighbor mailbox. Updates read only this state plus the
// network scalar feedback, never other agents' channels.
struct AgentState {
    int b = 0;
    precoder::Slice w;
    precoder::Slice d_w;
    consensus::RisLocalState ris;
    channel::LocalSample sample;
    precoder::Slice f_hat;  // effective channels of the local sample at own caps
    std::vector<RoundMessage> inbox;
};

struct TraceRow {
    int t = 0;
    double rho = 0.0;
    double alpha = 0.0;
    double sum_rate_true = 0.0;
    double disagreement_pf = 0.0;
    double iterate_delta_rel = 0.0;
    Eigen::VectorXd per_bs_power;
    Eigen::VectorXd per_bs_surrogate;
    double wall_ms = 0.0;
};

// Worst-case constraint and identity slack observed over a whole run.
struct RunAudit {
    double max_power_rel_excess = 0.0;
    double max_box_violation_pf = 0.0;
    double max_tracker_gap = 0.0;
    double max_compl_slack_rel = 0.0;
    double min_surrogate_gain = std::numeric_limits<double>::infinity();
    double max_pricing_norm = 0.0;
};

struct RunResult {
    model::PrecoderSet w;
    Eigen::VectorXd caps_pf;  // BS 0 copy, canonical
    std::vector<TraceRow> trace;
    RunAudit audit;
    double initial_sum_rate = 0.0;
    double final_sum_rate = 0.0;
    Eigen::VectorXd per_user_rates;
    double final_disagreement_pf = 0.0;
    int iterations = 0;
};

// Midpoint capacitors (or a caller-provided vector, in picofarad),
// matched-filter precoders at exactly full power, empty optimizer memory
// (the rho_0 = 1 round overwrites it).
std::vector<AgentState> initialize(std::uint64_t seed, const Problem& problem,
                                   const channel::ChannelRealization& channels,
                                   const Eigen::VectorXd& f_grid,
                                   const Eigen::VectorXd& init_caps_pf = {});

struct AgentOutcome {
    Eigen::VectorXd caps_smoothed_pf;
    Eigen::VectorXd tracker;
    Eigen::VectorXd grad_total;
    double surrogate_gain = 0.0;
    double surrogate_after = 0.0;
    double pricing_norm = 0.0;
};

// The whole per-BS computation of one round: capacitor gradient + tracking +
// pricing + closed-form solve, precoder pricing + accumulation + multiplier
// search, then smoothing of both blocks. Everything the agent may read is in
// this argument list - its own state, the scalar network feedback and the
// step sizes - which is what keeps the updates local.
AgentOutcome update_agent(AgentState& agent, const model::LinkStats& stats,
                          const precoder::SurrogateCoeffs& coeffs, int t, double rho,
                          double alpha, const Problem& problem, const AlgoParams& params,
                          const Eigen::MatrixXd& V, const Eigen::VectorXd& f_grid,
                          RunAudit& audit);

// Effective channels of one BS's local sample at its own capacitor copy.
precoder::Slice local_effective(const channel::LocalSample& sample,
                                const Eigen::VectorXd& caps_pf, const Eigen::VectorXd& f_grid,
                                const circuit::CircuitParams& cp);

// One bulk-synchronous round: fresh noisy samples, scalar feedback, per-BS
// best responses, smoothing, message exchange, consensus, true-channel trace.
TraceRow run_round(int t, std::vector<AgentState>& agents,
                   const channel::ChannelRealization& true_channels,
                   const Eigen::MatrixXd& V, const Problem& problem,
                   const AlgoParams& params, const Eigen::VectorXd& f_grid,
                   std::uint64_t run_seed, RunAudit& audit);

// Iterate-change rule on the stacked (precoder, capacitor-in-pF) blocks.
bool converged(const std::vector<TraceRow>& trace, const AlgoParams& params);

RunResult run(std::uint64_t seed, const Problem& problem,
              const channel::ChannelRealization& channels, const AlgoParams& params,
              const Eigen::VectorXd& init_caps_pf = {});

}  // namespace cellfree::orchestrator
