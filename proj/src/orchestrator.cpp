#include "cellfree/orchestrator.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "cellfree/rng.hpp"

namespace cellfree::orchestrator {

using precoder::Slice;

namespace {
Eigen::VectorXcd phi_for_surface(const Eigen::VectorXcd& stacked, int r, int M) {
    return stacked.segment(r * M, M);
}
}  // namespace

Slice local_effective(const channel::LocalSample& sample, const Eigen::VectorXd& caps_pf,
                      const Eigen::VectorXd& f_grid, const circuit::CircuitParams& cp) {
    const int R = static_cast<int>(sample.H.size());
    const int U = static_cast<int>(sample.h.size());
    const int K = static_cast<int>(f_grid.size());
    const int M = static_cast<int>(sample.H[0][0].rows());

    circuit::CapacitorVector caps{caps_pf * 1e-12};
    Slice f(U, std::vector<Eigen::VectorXcd>(K));
    for (int k = 0; k < K; ++k) {
        const Eigen::VectorXcd stacked = circuit::build_phi(f_grid[k], caps, cp);
        std::vector<Eigen::VectorXcd> phi_r(R);
        for (int r = 0; r < R; ++r) phi_r[r] = phi_for_surface(stacked, r, M);
        for (int u = 0; u < U; ++u) {
            std::vector<Eigen::MatrixXcd> H_r(R);
            std::vector<Eigen::VectorXcd> g_r(R);
            for (int r = 0; r < R; ++r) {
                H_r[r] = sample.H[r][k];
                g_r[r] = sample.g[r][u][k];
            }
            f[u][k] = model::effective_channel_entry(sample.h[u][k], H_r, g_r, phi_r);
        }
    }
    return f;
}

namespace {

double slice_sq_norm(const Slice& s) {
    double acc = 0.0;
    for (const auto& row : s)
        for (const auto& v : row) acc += v.squaredNorm();
    return acc;
}

double slice_sq_dist(const Slice& a, const Slice& b) {
    double acc = 0.0;
    for (std::size_t u = 0; u < a.size(); ++u)
        for (std::size_t k = 0; k < a[u].size(); ++k) acc += (a[u][k] - b[u][k]).squaredNorm();
    return acc;
}

}  // namespace

AgentOutcome update_agent(AgentState& agent, const model::LinkStats& stats,
                          const precoder::SurrogateCoeffs& coeffs, int t, double rho,
                          double alpha, const Problem& problem, const AlgoParams& params,
                          const Eigen::MatrixXd& V, const Eigen::VectorXd& f_grid,
                          RunAudit& audit) {
    const auto& dims = problem.sys.dims;
    const int U = dims.U, K = dims.K, B = dims.B;
    const int b = agent.b;
    AgentOutcome out;

    // Capacitor block: local gradient, tracking, pricing, closed-form solve.
    if (params.optimize_caps) {
        consensus::CrossFeedback cross(static_cast<std::size_t>(U) * U * K);
        for (int u = 0; u < U; ++u)
            for (int q = 0; q < U; ++q)
                for (int k = 0; k < K; ++k)
                    cross[(static_cast<std::size_t>(u) * U + q) * K + k] =
                        stats.r_cross(b, u, q, k);
        const auto ws = consensus::build_workspace(
            agent.sample.H, agent.sample.g, agent.sample.h, agent.w, agent.ris.caps_pf,
            f_grid, problem.circuit, problem.sys.noise_var_w, cross);
        out.grad_total = consensus::grad_caps_total(ws);

        if (t == 0) {
            agent.ris.q_c = out.grad_total;
        } else {
            std::vector<Eigen::VectorXd> trackers(B);
            trackers[b] = agent.ris.q_c;
            for (const auto& msg : agent.inbox) trackers[msg.from] = msg.tracker;
            agent.ris.q_c =
                consensus::tracker_update(trackers, V.row(b), out.grad_total, agent.ris.grad_prev);
        }
        const auto priced = consensus::price_and_accumulate_c(
            agent.ris.q_c, out.grad_total, agent.ris.d_c, rho, B, params.cooperation);
        agent.ris.pi_c = priced.pi_c;
        agent.ris.d_c = priced.d_c;
        agent.ris.gamma = priced.gamma;
        agent.ris.grad_prev = out.grad_total;
        out.pricing_norm += priced.pi_c.norm();

        const Eigen::VectorXd caps_hat = consensus::solve_caps(
            agent.ris.caps_pf, agent.ris.pi_c, agent.ris.d_c, agent.ris.gamma, rho,
            params.tau, problem.circuit.c_min * 1e12, problem.circuit.c_max * 1e12);
        out.caps_smoothed_pf = (1.0 - alpha) * agent.ris.caps_pf + alpha * caps_hat;
        out.tracker = agent.ris.q_c;
    } else {
        out.grad_total = Eigen::VectorXd::Zero(agent.ris.caps_pf.size());
        out.caps_smoothed_pf = agent.ris.caps_pf;
        out.tracker = agent.ris.q_c;
    }

    // Precoder block: pricing, accumulation, quadratic assembly, multiplier
    // search, smoothing.
    std::vector<precoder::Subproblem> subproblems;
    std::vector<precoder::SurrogateTerms> terms;
    subproblems.reserve(static_cast<std::size_t>(U) * K);
    terms.reserve(static_cast<std::size_t>(U) * K);
    for (int u = 0; u < U; ++u)
        for (int k = 0; k < K; ++k) {
            Eigen::VectorXcd pi = params.cooperation
                                      ? precoder::pricing_w(stats, agent.f_hat, agent.w, b, u, k)
                                      : Eigen::VectorXcd::Zero(dims.N).eval();
            const Eigen::VectorXcd own =
                precoder::own_grad_w(stats, agent.f_hat, agent.w, b, u, k);
            agent.d_w[u][k] = precoder::accum_w_update(agent.d_w[u][k], pi, own, rho);
            out.pricing_norm += pi.norm();

            const std::complex<double> r_own = stats.r_cross(b, u, u, k);
            subproblems.push_back(precoder::assemble_subproblem(
                coeffs.c_coef(u, k), coeffs.e_coef(u, k), r_own, pi, agent.d_w[u][k],
                agent.w[u][k], agent.f_hat[u][k], rho, params.tau, params.printed_q_scaling));
            terms.push_back({coeffs.c_coef(u, k), coeffs.e_coef(u, k), r_own, std::move(pi),
                             agent.d_w[u][k], agent.w[u][k], agent.f_hat[u][k]});
        }

    const auto sol = precoder::bisect_power(subproblems, problem.sys.p_max_w);
    if (sol.lambda > 0.0) {
        const double slack = std::abs(sol.power - problem.sys.p_max_w) / problem.sys.p_max_w;
        audit.max_compl_slack_rel = std::max(audit.max_compl_slack_rel, slack);
    }

    std::vector<Eigen::VectorXcd> w_flat_prev;
    w_flat_prev.reserve(terms.size());
    for (int u = 0; u < U; ++u)
        for (int k = 0; k < K; ++k) w_flat_prev.push_back(agent.w[u][k]);

    std::vector<Eigen::VectorXcd> w_flat_smoothed(terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i)
        w_flat_smoothed[i] = (1.0 - alpha) * w_flat_prev[i] + alpha * sol.w[i];

    const double f_before = precoder::surrogate_value(terms, w_flat_prev, rho, params.tau);
    const double f_after = precoder::surrogate_value(terms, w_flat_smoothed, rho, params.tau);
    out.surrogate_gain = f_after - f_before;
    out.surrogate_after = f_after;

    std::size_t i = 0;
    for (int u = 0; u < U; ++u)
        for (int k = 0; k < K; ++k) agent.w[u][k] = w_flat_smoothed[i++];

    return out;
}

namespace {

double max_pairwise_disagreement(const std::vector<AgentState>& agents) {
    double d = 0.0;
    for (std::size_t a = 0; a < agents.size(); ++a)
        for (std::size_t b = a + 1; b < agents.size(); ++b)
            d = std::max(d, (agents[a].ris.caps_pf - agents[b].ris.caps_pf)
                                .cwiseAbs()
                                .maxCoeff());
    return d;
}

model::PrecoderSet collect_precoders(const std::vector<AgentState>& agents,
                                     const channel::Dims& dims) {
    model::PrecoderSet w = model::PrecoderSet::zeros(dims);
    for (const auto& agent : agents) w.w[agent.b] = agent.w;
    return w;
}

double true_sum_rate(const std::vector<AgentState>& agents,
                     const channel::ChannelRealization& channels, const Problem& problem,
                     const Eigen::VectorXd& f_grid, Eigen::VectorXd* per_user = nullptr) {
    circuit::CapacitorVector caps{agents[0].ris.caps_pf * 1e-12};
    const auto eff = model::effective_channels(channels, caps, f_grid, problem.circuit);
    const auto stats = model::link_stats(eff, collect_precoders(agents, problem.sys.dims),
                                         problem.sys.noise_var_w);
    const auto sr = model::sum_rate(stats);
    if (per_user) *per_user = sr.per_user;
    return sr.total;
}

}  // namespace

void AlgoParams::validate() const {
    if (!(tau > 0.0) || !(epsilon > 0.0))
        throw std::invalid_argument("algo: tau and epsilon must be positive");
    if (t_max < 1) throw std::invalid_argument("algo: t_max must be at least 1");
    if (!(rho_exponent > 0.5 && rho_exponent <= 1.0))
        throw std::invalid_argument("algo: rho exponent must lie in (0.5, 1]");
}

void Problem::validate() const {
    sys.validate();
    circuit.validate();
    csi.validate();
    if (graph.B != sys.dims.B)
        throw std::invalid_argument("problem: graph size does not match BS count");
    if (!graph.connected()) throw std::invalid_argument("problem: graph must be connected");
}

StepSizes step_sizes(int t, const AlgoParams& params) {
    if (t < 0) throw std::invalid_argument("orchestrator: negative iteration index");
    StepSizes s;
    s.rho = (t == 0) ? 1.0 : std::pow(t + 2.0, -params.rho_exponent);
    s.alpha = 1.0 / (t + 2.0);
    return s;
}

std::vector<AgentState> initialize(std::uint64_t seed, const Problem& problem,
                                   const channel::ChannelRealization& channels,
                                   const Eigen::VectorXd& f_grid,
                                   const Eigen::VectorXd& init_caps_pf) {
    problem.validate();
    const auto& dims = problem.sys.dims;
    const double per_stream = problem.sys.p_max_w / (dims.U * dims.K);
    Eigen::VectorXd caps0 = init_caps_pf.size() > 0
                                ? init_caps_pf
                                : Eigen::VectorXd::Constant(dims.rm(), problem.circuit.c_mid() * 1e12);
    if (caps0.size() != dims.rm())
        throw std::invalid_argument("orchestrator: initial capacitor vector has wrong length");

    std::vector<AgentState> agents(dims.B);
    for (int b = 0; b < dims.B; ++b) {
        AgentState& agent = agents[b];
        agent.b = b;
        agent.ris = consensus::RisLocalState::zeros(dims.rm());
        agent.ris.caps_pf = caps0;
        agent.sample =
            channel::perturb_local(seed_chain(seed, "init-csi"), channels, b, problem.csi);
        agent.f_hat = local_effective(agent.sample, agent.ris.caps_pf, f_grid, problem.circuit);
        agent.w = precoder::zero_slice(dims.U, dims.K, dims.N);
        agent.d_w = precoder::zero_slice(dims.U, dims.K, dims.N);
        for (int u = 0; u < dims.U; ++u)
            for (int k = 0; k < dims.K; ++k) {
                const double nrm = agent.f_hat[u][k].norm();
                if (nrm > 0.0)
                    agent.w[u][k] = std::sqrt(per_stream) / nrm * agent.f_hat[u][k];
                else
                    agent.w[u][k] =
                        std::sqrt(per_stream) * Eigen::VectorXcd::Unit(dims.N, 0);
            }
    }
    return agents;
}

TraceRow run_round(int t, std::vector<AgentState>& agents,
                   const channel::ChannelRealization& true_channels,
                   const Eigen::MatrixXd& V, const Problem& problem,
                   const AlgoParams& params, const Eigen::VectorXd& f_grid,
                   std::uint64_t run_seed, RunAudit& audit) {
    const auto start = std::chrono::steady_clock::now();
    const auto& dims = problem.sys.dims;
    const auto [rho, alpha] = step_sizes(t, params);

    // (1) fresh noisy samples and their effective channels
    for (auto& agent : agents) {
        agent.sample = channel::perturb_local(
            seed_chain(run_seed, "round-csi", {static_cast<std::uint64_t>(t)}), true_channels,
            agent.b, problem.csi);
        agent.f_hat = local_effective(agent.sample, agent.ris.caps_pf, f_grid, problem.circuit);
    }

    // (2) network scalar feedback at the current iterate
    model::EffectiveChannel eff;
    eff.f.resize(dims.B);
    for (const auto& agent : agents) eff.f[agent.b] = agent.f_hat;
    const auto w_now = collect_precoders(agents, dims);
    const auto stats = model::link_stats(eff, w_now, problem.sys.noise_var_w);
    const auto coeffs = precoder::surrogate_coeffs(stats, problem.sys.noise_var_w);

    // snapshot for the convergence measure
    std::vector<precoder::Slice> w_prev(dims.B);
    std::vector<Eigen::VectorXd> caps_prev(dims.B);
    for (int b = 0; b < dims.B; ++b) {
        w_prev[b] = agents[b].w;
        caps_prev[b] = agents[b].ris.caps_pf;
    }

    // (3)-(4) local best responses and smoothing
    std::vector<AgentOutcome> outcomes(dims.B);
    for (auto& agent : agents)
        outcomes[agent.b] = update_agent(agent, stats, coeffs, t, rho, alpha, problem, params,
                                         V, f_grid, audit);

    // (5) message exchange: consensus on smoothed capacitor copies, trackers
    // delivered for the next round's mixing step
    std::vector<Eigen::VectorXd> smoothed(dims.B);
    for (int b = 0; b < dims.B; ++b) smoothed[b] = outcomes[b].caps_smoothed_pf;
    if (params.optimize_caps && params.consensus_enabled) {
        const auto mixed = consensus::consensus_average(smoothed, V);
        for (int b = 0; b < dims.B; ++b) agents[b].ris.caps_pf = mixed[b];
    } else {
        for (int b = 0; b < dims.B; ++b) agents[b].ris.caps_pf = smoothed[b];
    }
    const auto adj = problem.graph.adjacency();
    for (auto& agent : agents) agent.inbox.clear();
    for (int b = 0; b < dims.B; ++b)
        for (int nb : adj[b])
            agents[nb].inbox.push_back({b, outcomes[b].tracker, smoothed[b]});

    // audits
    if (params.optimize_caps) {
        Eigen::VectorXd q_avg = Eigen::VectorXd::Zero(dims.rm());
        Eigen::VectorXd g_avg = Eigen::VectorXd::Zero(dims.rm());
        for (int b = 0; b < dims.B; ++b) {
            q_avg += outcomes[b].tracker;
            g_avg += outcomes[b].grad_total;
        }
        const double gap = ((q_avg - g_avg) / dims.B).cwiseAbs().maxCoeff();
        audit.max_tracker_gap = std::max(audit.max_tracker_gap, gap);
    }
    const double c_min_pf = problem.circuit.c_min * 1e12;
    const double c_max_pf = problem.circuit.c_max * 1e12;
    for (const auto& agent : agents) {
        const double lo = agent.ris.caps_pf.minCoeff();
        const double hi = agent.ris.caps_pf.maxCoeff();
        audit.max_box_violation_pf = std::max(
            {audit.max_box_violation_pf, c_min_pf - lo, hi - c_max_pf});
    }

    TraceRow row;
    row.t = t;
    row.rho = rho;
    row.alpha = alpha;
    row.per_bs_power.resize(dims.B);
    row.per_bs_surrogate.resize(dims.B);
    const auto w_new = collect_precoders(agents, dims);
    for (int b = 0; b < dims.B; ++b) {
        row.per_bs_power[b] = model::tx_power(w_new, b);
        row.per_bs_surrogate[b] = outcomes[b].surrogate_after;
        audit.max_power_rel_excess =
            std::max(audit.max_power_rel_excess,
                     (row.per_bs_power[b] - problem.sys.p_max_w) / problem.sys.p_max_w);
        audit.min_surrogate_gain = std::min(audit.min_surrogate_gain, outcomes[b].surrogate_gain);
        audit.max_pricing_norm = std::max(audit.max_pricing_norm, outcomes[b].pricing_norm);
    }

    double delta = 0.0;
    for (int b = 0; b < dims.B; ++b) {
        const double num = std::sqrt(slice_sq_dist(agents[b].w, w_prev[b]) +
                                     (agents[b].ris.caps_pf - caps_prev[b]).squaredNorm());
        const double den = std::max(
            1.0, std::sqrt(slice_sq_norm(w_prev[b]) + caps_prev[b].squaredNorm()));
        delta = std::max(delta, num / den);
    }
    row.iterate_delta_rel = delta;
    row.disagreement_pf = max_pairwise_disagreement(agents);
    row.sum_rate_true = true_sum_rate(agents, true_channels, problem, f_grid);
    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    return row;
}

bool converged(const std::vector<TraceRow>& trace, const AlgoParams& params) {
    if (static_cast<int>(trace.size()) >= params.t_max) return true;
    if (trace.size() < 2) return false;
    return trace.back().iterate_delta_rel <= params.epsilon;
}

RunResult run(std::uint64_t seed, const Problem& problem,
              const channel::ChannelRealization& channels, const AlgoParams& params,
              const Eigen::VectorXd& init_caps_pf) {
    params.validate();
    problem.validate();
    const Eigen::VectorXd f_grid =
        model::subcarrier_grid(problem.sys.f_c, problem.sys.bandwidth, problem.sys.dims.K);
    const Eigen::MatrixXd V = consensus::metropolis_weights(problem.graph);

    RunResult result;
    auto agents = initialize(seed, problem, channels, f_grid, init_caps_pf);
    result.initial_sum_rate = true_sum_rate(agents, channels, problem, f_grid);

    result.trace.reserve(std::min(params.t_max, 4096));
    for (int t = 0; t < params.t_max; ++t) {
        result.trace.push_back(run_round(t, agents, channels, V, problem, params, f_grid,
                                         seed, result.audit));
        if (converged(result.trace, params)) break;
    }

    result.iterations = static_cast<int>(result.trace.size());
    result.w = collect_precoders(agents, problem.sys.dims);
    result.caps_pf = agents[0].ris.caps_pf;
    result.final_disagreement_pf = result.trace.back().disagreement_pf;
    result.final_sum_rate =
        true_sum_rate(agents, channels, problem, f_grid, &result.per_user_rates);
    return result;
}

}  // namespace cellfree::orchestrator
