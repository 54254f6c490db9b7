#include "cellfree/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "cellfree/rng.hpp"

namespace cellfree::experiment {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;

std::string fmt(double v, int precision = 12) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, precision);
    return std::string(buf, r.ptr);
}

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
    throw ConfigError("config key " + key + ": " + why);
}

double get_double(const config::Table& t, const std::string& key, double fallback) {
    const auto it = t.find(key);
    if (it == t.end()) return fallback;
    try {
        return it->second.as_double();
    } catch (const std::exception& e) {
        bad_key(key, e.what());
    }
}

int get_int(const config::Table& t, const std::string& key, int fallback) {
    const auto it = t.find(key);
    if (it == t.end()) return fallback;
    try {
        return static_cast<int>(it->second.as_int());
    } catch (const std::exception& e) {
        bad_key(key, e.what());
    }
}

bool get_bool(const config::Table& t, const std::string& key, bool fallback) {
    const auto it = t.find(key);
    if (it == t.end()) return fallback;
    try {
        return it->second.as_bool();
    } catch (const std::exception& e) {
        bad_key(key, e.what());
    }
}

std::string get_string(const config::Table& t, const std::string& key, std::string fallback) {
    const auto it = t.find(key);
    if (it == t.end()) return fallback;
    try {
        return it->second.as_string();
    } catch (const std::exception& e) {
        bad_key(key, e.what());
    }
}

std::vector<Eigen::Vector3d> get_points3(const config::Table& t, const std::string& key) {
    std::vector<Eigen::Vector3d> out;
    const auto it = t.find(key);
    if (it == t.end()) return out;
    try {
        for (const auto& row : it->second.as_array()) {
            const auto& xyz = row.as_array();
            if (xyz.size() != 3) throw ConfigError("expected [x, y, z]");
            out.emplace_back(xyz[0].as_double(), xyz[1].as_double(), xyz[2].as_double());
        }
    } catch (const std::exception& e) {
        bad_key(key, e.what());
    }
    return out;
}

std::vector<Eigen::Vector2d> get_points2(const config::Table& t, const std::string& key) {
    std::vector<Eigen::Vector2d> out;
    const auto it = t.find(key);
    if (it == t.end()) return out;
    try {
        for (const auto& row : it->second.as_array()) {
            const auto& xy = row.as_array();
            if (xy.size() != 2) throw ConfigError("expected [x, y]");
            out.emplace_back(xy[0].as_double(), xy[1].as_double());
        }
    } catch (const std::exception& e) {
        bad_key(key, e.what());
    }
    return out;
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "system.bs", "system.antennas", "system.users", "system.ris", "system.elements",
        "system.subcarriers", "system.carrier_hz", "system.bandwidth_hz", "system.noise_dbm",
        "geometry.bs_positions", "geometry.ris_positions", "geometry.cluster_centers",
        "geometry.cluster_radius_m", "geometry.ue_height_m",
        "pathloss.pl0_db", "pathloss.d0_m", "pathloss.exp_bs_ue", "pathloss.exp_bs_ris",
        "pathloss.exp_ris_ue",
        "channel.taps", "channel.iid_per_subcarrier", "channel.csi_delta",
        "circuit.l1_h", "circuit.l2_h", "circuit.r0_ohm", "circuit.zeta0_ohm",
        "circuit.c_min_f", "circuit.c_max_f",
        "algo.tau", "algo.epsilon", "algo.t_max", "algo.rho_exponent",
        "algo.eq16_printed_scaling",
        "graph.topology",
        "run.mode", "run.pmax_dbm", "run.realizations", "run.master_seed", "run.threads",
        "run.measure_wall_ms",
        "output.csv", "output.trace",
    };
    return keys;
}

// Default layout: BSs along the x-axis, surfaces on the y=60 line, users in
// two discs near the surfaces.
channel::GeometrySpec default_geometry(const channel::Dims& dims) {
    channel::GeometrySpec spec;
    for (int b = 0; b < dims.B; ++b) spec.bs_positions.emplace_back(50.0 * b, 0.0, 5.0);
    for (int r = 0; r < dims.R; ++r) spec.ris_positions.emplace_back(65.0 + 20.0 * r, 60.0, 6.0);
    spec.clusters = {{Eigen::Vector2d(67.5, 57.5), 2.0, 0}, {Eigen::Vector2d(82.5, 57.5), 2.0, 0}};
    spec.ue_height = 1.5;
    return spec;
}

void assign_cluster_counts(std::vector<channel::ClusterSpec>& clusters, int users) {
    const int c = static_cast<int>(clusters.size());
    for (int i = 0; i < c; ++i)
        clusters[i].count = users / c + (i < users % c ? 1 : 0);
}

struct Cell {
    int p_idx;
    int realization;
};

}  // namespace

Mode mode_from_string(const std::string& name) {
    if (name == "proposed") return Mode::proposed;
    if (name == "no-coop") return Mode::no_coop;
    if (name == "no-coop-no-consensus") return Mode::no_coop_no_consensus;
    if (name == "random-caps") return Mode::random_caps;
    if (name == "midpoint-caps") return Mode::midpoint_caps;
    if (name == "ff-calibrated") return Mode::ff_calibrated;
    throw ConfigError("config key run.mode: unknown mode '" + name +
                      "' (expected proposed, no-coop, no-coop-no-consensus, random-caps, "
                      "midpoint-caps or ff-calibrated)");
}

std::string mode_to_string(Mode mode) {
    switch (mode) {
        case Mode::proposed: return "proposed";
        case Mode::no_coop: return "no-coop";
        case Mode::no_coop_no_consensus: return "no-coop-no-consensus";
        case Mode::random_caps: return "random-caps";
        case Mode::midpoint_caps: return "midpoint-caps";
        case Mode::ff_calibrated: return "ff-calibrated";
    }
    return "?";
}

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

void ExperimentConfig::validate() const {
    const auto& d = sys.dims;
    if (d.B < 1) bad_key("system.bs", "must be at least 1");
    if (d.N < 1) bad_key("system.antennas", "must be at least 1");
    if (d.U < 1) bad_key("system.users", "must be at least 1");
    if (d.R < 1) bad_key("system.ris", "must be at least 1");
    if (d.M < 1) bad_key("system.elements", "must be at least 1");
    if (d.K < 1) bad_key("system.subcarriers", "must be at least 1");
    if (!(sys.f_c > 0.0)) bad_key("system.carrier_hz", "must be positive");
    if (!(sys.bandwidth > 0.0)) bad_key("system.bandwidth_hz", "must be positive");
    if (!(sys.noise_var_w > 0.0)) bad_key("system.noise_dbm", "must be finite");

    if (static_cast<int>(geometry.bs_positions.size()) != d.B)
        bad_key("geometry.bs_positions", "needs exactly system.bs entries");
    if (static_cast<int>(geometry.ris_positions.size()) != d.R)
        bad_key("geometry.ris_positions", "needs exactly system.ris entries");
    if (geometry.clusters.empty()) bad_key("geometry.cluster_centers", "needs at least one entry");
    int total = 0;
    for (const auto& c : geometry.clusters) {
        if (!(c.radius >= 0.0)) bad_key("geometry.cluster_radius_m", "must be nonnegative");
        total += c.count;
    }
    if (total != d.U) bad_key("geometry.cluster_centers", "cluster counts must sum to system.users");

    if (!(pathloss.d0_m > 0.0)) bad_key("pathloss.d0_m", "must be positive");
    if (!(pathloss.exp_bs_ue > 0.0)) bad_key("pathloss.exp_bs_ue", "must be positive");
    if (!(pathloss.exp_bs_ris > 0.0)) bad_key("pathloss.exp_bs_ris", "must be positive");
    if (!(pathloss.exp_ris_ue > 0.0)) bad_key("pathloss.exp_ris_ue", "must be positive");

    if (fading.taps < 1) bad_key("channel.taps", "must be at least 1");
    if (!(csi.delta >= 0.0)) bad_key("channel.csi_delta", "must be nonnegative");

    if (!(circuit.l1 > 0.0)) bad_key("circuit.l1_h", "must be positive");
    if (!(circuit.l2 >= 0.0)) bad_key("circuit.l2_h", "must be nonnegative");
    if (!(circuit.r0 >= 0.0)) bad_key("circuit.r0_ohm", "must be nonnegative");
    if (!(circuit.zeta0 > 0.0)) bad_key("circuit.zeta0_ohm", "must be positive");
    if (!(circuit.c_min > 0.0) || !(circuit.c_min < circuit.c_max))
        bad_key("circuit.c_min_f", "requires 0 < circuit.c_min_f < circuit.c_max_f");

    if (!(algo.tau > 0.0)) bad_key("algo.tau", "must be positive");
    if (!(algo.epsilon > 0.0)) bad_key("algo.epsilon", "must be positive");
    if (algo.t_max < 1) bad_key("algo.t_max", "must be at least 1");
    if (!(algo.rho_exponent > 0.5 && algo.rho_exponent <= 1.0))
        bad_key("algo.rho_exponent", "must lie in (0.5, 1]");

    if (graph_topology != "complete" && graph_topology != "ring" && graph_topology != "path")
        bad_key("graph.topology", "expected complete, ring or path");

    if (pmax_dbm.empty()) bad_key("run.pmax_dbm", "sweep must not be empty");
    if (realizations < 1) bad_key("run.realizations", "must be at least 1");
    if (threads < 1) bad_key("run.threads", "must be at least 1");
    if (csv_path.empty()) bad_key("output.csv", "must not be empty");
}

consensus::Graph ExperimentConfig::graph() const {
    if (graph_topology == "ring") return consensus::Graph::ring(sys.dims.B);
    if (graph_topology == "path") return consensus::Graph::path(sys.dims.B);
    return consensus::Graph::complete(sys.dims.B);
}

orchestrator::Problem ExperimentConfig::problem(double p_max_w) const {
    orchestrator::Problem p;
    p.sys = sys;
    p.sys.p_max_w = p_max_w;
    p.circuit = circuit;
    p.csi = csi;
    p.graph = graph();
    return p;
}

ExperimentConfig config_from_table(const config::Table& table) {
    for (const auto& [key, value] : table)
        if (!known_keys().count(key)) bad_key(key, "unknown key");

    ExperimentConfig cfg;
    auto& d = cfg.sys.dims;
    d.B = get_int(table, "system.bs", 4);
    d.N = get_int(table, "system.antennas", 2);
    d.U = get_int(table, "system.users", 4);
    d.R = get_int(table, "system.ris", 2);
    d.M = get_int(table, "system.elements", 144);
    d.K = get_int(table, "system.subcarriers", 16);
    cfg.sys.f_c = get_double(table, "system.carrier_hz", 3.5e9);
    cfg.sys.bandwidth = get_double(table, "system.bandwidth_hz", 100e6);
    cfg.sys.noise_var_w = dbm_to_watt(get_double(table, "system.noise_dbm", -90.0));

    cfg.geometry = default_geometry(d);
    if (auto bs = get_points3(table, "geometry.bs_positions"); !bs.empty())
        cfg.geometry.bs_positions = std::move(bs);
    if (auto ris = get_points3(table, "geometry.ris_positions"); !ris.empty())
        cfg.geometry.ris_positions = std::move(ris);
    if (auto centers = get_points2(table, "geometry.cluster_centers"); !centers.empty()) {
        cfg.geometry.clusters.clear();
        for (const auto& c : centers) cfg.geometry.clusters.push_back({c, 2.0, 0});
    }
    const double radius = get_double(table, "geometry.cluster_radius_m", 2.0);
    for (auto& c : cfg.geometry.clusters) c.radius = radius;
    cfg.geometry.ue_height = get_double(table, "geometry.ue_height_m", 1.5);
    assign_cluster_counts(cfg.geometry.clusters, d.U);

    cfg.pathloss.pl0_db = get_double(table, "pathloss.pl0_db", -30.0);
    cfg.pathloss.d0_m = get_double(table, "pathloss.d0_m", 1.0);
    cfg.pathloss.exp_bs_ue = get_double(table, "pathloss.exp_bs_ue", 3.8);
    cfg.pathloss.exp_bs_ris = get_double(table, "pathloss.exp_bs_ris", 2.4);
    cfg.pathloss.exp_ris_ue = get_double(table, "pathloss.exp_ris_ue", 2.2);

    cfg.fading.taps = get_int(table, "channel.taps", 4);
    cfg.fading.iid_per_subcarrier = get_bool(table, "channel.iid_per_subcarrier", false);
    cfg.csi.delta = get_double(table, "channel.csi_delta", 0.2);

    cfg.circuit.l1 = get_double(table, "circuit.l1_h", 1.7143e-9);
    cfg.circuit.l2 = get_double(table, "circuit.l2_h", 0.48e-9);
    cfg.circuit.r0 = get_double(table, "circuit.r0_ohm", 1.0);
    cfg.circuit.zeta0 = get_double(table, "circuit.zeta0_ohm", 50.0);
    cfg.circuit.c_min = get_double(table, "circuit.c_min_f", 0.01e-12);
    cfg.circuit.c_max = get_double(table, "circuit.c_max_f", 3.0e-12);

    cfg.algo.tau = get_double(table, "algo.tau", 1e-2);
    cfg.algo.epsilon = get_double(table, "algo.epsilon", 1e-3);
    cfg.algo.t_max = get_int(table, "algo.t_max", 2000);
    cfg.algo.rho_exponent = get_double(table, "algo.rho_exponent", 0.99);
    cfg.algo.printed_q_scaling = get_bool(table, "algo.eq16_printed_scaling", false);

    cfg.graph_topology = get_string(table, "graph.topology", "complete");
    cfg.mode = mode_from_string(get_string(table, "run.mode", "proposed"));

    if (const auto it = table.find("run.pmax_dbm"); it != table.end()) {
        cfg.pmax_dbm.clear();
        try {
            for (const auto& v : it->second.as_array()) cfg.pmax_dbm.push_back(v.as_double());
        } catch (const std::exception& e) {
            bad_key("run.pmax_dbm", e.what());
        }
    }
    cfg.realizations = get_int(table, "run.realizations", 100);
    if (const auto it = table.find("run.master_seed"); it != table.end()) {
        try {
            cfg.master_seed = it->second.as_uint();
        } catch (const std::exception& e) {
            bad_key("run.master_seed", e.what());
        }
    }
    cfg.threads = get_int(table, "run.threads", 1);
    cfg.measure_wall_ms = get_bool(table, "run.measure_wall_ms", false);
    cfg.csv_path = get_string(table, "output.csv", "results.csv");
    cfg.trace_path = get_string(table, "output.trace", "");

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    return config_from_table(config::parse_file(path));
}

ExperimentConfig load_config_string(std::string_view text) {
    return config_from_table(config::parse(text));
}

config::Table ExperimentConfig::to_table() const {
    config::Table t;
    using config::Value;
    const auto& d = sys.dims;
    t["system.bs"] = Value::of(static_cast<std::int64_t>(d.B));
    t["system.antennas"] = Value::of(static_cast<std::int64_t>(d.N));
    t["system.users"] = Value::of(static_cast<std::int64_t>(d.U));
    t["system.ris"] = Value::of(static_cast<std::int64_t>(d.R));
    t["system.elements"] = Value::of(static_cast<std::int64_t>(d.M));
    t["system.subcarriers"] = Value::of(static_cast<std::int64_t>(d.K));
    t["system.carrier_hz"] = Value::of(sys.f_c);
    t["system.bandwidth_hz"] = Value::of(sys.bandwidth);
    t["system.noise_dbm"] = Value::of(10.0 * std::log10(sys.noise_var_w) + 30.0);

    const auto points3 = [](const std::vector<Eigen::Vector3d>& pts) {
        std::vector<Value> rows;
        for (const auto& p : pts)
            rows.push_back(Value::of(std::vector<Value>{Value::of(p.x()), Value::of(p.y()),
                                                        Value::of(p.z())}));
        return Value::of(std::move(rows));
    };
    t["geometry.bs_positions"] = points3(geometry.bs_positions);
    t["geometry.ris_positions"] = points3(geometry.ris_positions);
    std::vector<Value> centers;
    for (const auto& c : geometry.clusters)
        centers.push_back(Value::of(
            std::vector<Value>{Value::of(c.center.x()), Value::of(c.center.y())}));
    t["geometry.cluster_centers"] = Value::of(std::move(centers));
    t["geometry.cluster_radius_m"] = Value::of(geometry.clusters[0].radius);
    t["geometry.ue_height_m"] = Value::of(geometry.ue_height);

    t["pathloss.pl0_db"] = Value::of(pathloss.pl0_db);
    t["pathloss.d0_m"] = Value::of(pathloss.d0_m);
    t["pathloss.exp_bs_ue"] = Value::of(pathloss.exp_bs_ue);
    t["pathloss.exp_bs_ris"] = Value::of(pathloss.exp_bs_ris);
    t["pathloss.exp_ris_ue"] = Value::of(pathloss.exp_ris_ue);

    t["channel.taps"] = Value::of(static_cast<std::int64_t>(fading.taps));
    t["channel.iid_per_subcarrier"] = Value::of(fading.iid_per_subcarrier);
    t["channel.csi_delta"] = Value::of(csi.delta);

    t["circuit.l1_h"] = Value::of(circuit.l1);
    t["circuit.l2_h"] = Value::of(circuit.l2);
    t["circuit.r0_ohm"] = Value::of(circuit.r0);
    t["circuit.zeta0_ohm"] = Value::of(circuit.zeta0);
    t["circuit.c_min_f"] = Value::of(circuit.c_min);
    t["circuit.c_max_f"] = Value::of(circuit.c_max);

    t["algo.tau"] = Value::of(algo.tau);
    t["algo.epsilon"] = Value::of(algo.epsilon);
    t["algo.t_max"] = Value::of(static_cast<std::int64_t>(algo.t_max));
    t["algo.rho_exponent"] = Value::of(algo.rho_exponent);
    t["algo.eq16_printed_scaling"] = Value::of(algo.printed_q_scaling);

    t["graph.topology"] = Value::of(graph_topology);
    t["run.mode"] = Value::of(mode_to_string(mode));
    std::vector<Value> sweep;
    for (double p : pmax_dbm) sweep.push_back(Value::of(p));
    t["run.pmax_dbm"] = Value::of(std::move(sweep));
    t["run.realizations"] = Value::of(static_cast<std::int64_t>(realizations));
    t["run.master_seed"] = Value::of(static_cast<std::int64_t>(master_seed));
    t["run.threads"] = Value::of(static_cast<std::int64_t>(threads));
    t["run.measure_wall_ms"] = Value::of(measure_wall_ms);
    t["output.csv"] = Value::of(csv_path);
    t["output.trace"] = Value::of(trace_path);
    return t;
}

ResultRow run_single(Mode mode, std::uint64_t seed, const ExperimentConfig& cfg,
                     double p_max_w, const channel::ChannelRealization& channels,
                     orchestrator::RunResult* detail) {
    orchestrator::Problem problem = cfg.problem(p_max_w);
    orchestrator::AlgoParams params = cfg.algo;

    Eigen::VectorXd init_caps_pf;  // empty means midpoint
    switch (mode) {
        case Mode::proposed:
            break;
        case Mode::no_coop:
            params.cooperation = false;
            break;
        case Mode::no_coop_no_consensus:
            params.cooperation = false;
            params.consensus_enabled = false;
            break;
        case Mode::random_caps: {
            params.cooperation = false;
            params.consensus_enabled = false;
            params.optimize_caps = false;
            Rng rng(seed_chain(seed, "random-caps"));
            init_caps_pf.resize(cfg.sys.dims.rm());
            for (Eigen::Index n = 0; n < init_caps_pf.size(); ++n)
                init_caps_pf[n] =
                    rng.uniform(cfg.circuit.c_min * 1e12, cfg.circuit.c_max * 1e12);
            break;
        }
        case Mode::midpoint_caps:
            params.cooperation = false;
            params.consensus_enabled = false;
            params.optimize_caps = false;
            break;
        case Mode::ff_calibrated: {
            params.cooperation = false;
            params.consensus_enabled = false;
            params.optimize_caps = false;
            Rng rng(seed_chain(seed, "ff-phases"));
            init_caps_pf.resize(cfg.sys.dims.rm());
            for (Eigen::Index n = 0; n < init_caps_pf.size(); ++n) {
                const double theta = kTwoPi * rng.uniform();
                const auto cal = circuit::calibrate_capacitor(
                    std::complex<double>(std::cos(theta), std::sin(theta)), cfg.sys.f_c,
                    cfg.circuit);
                init_caps_pf[n] = cal.c_farad * 1e12;
            }
            break;
        }
    }

    const auto start = std::chrono::steady_clock::now();
    const auto result = orchestrator::run(seed, problem, channels, params, init_caps_pf);
    const double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();

    ResultRow row;
    row.mode = mode_to_string(mode);
    row.seed = seed;
    row.iterations = result.iterations;
    row.final_sum_rate = result.final_sum_rate;
    row.sum_rate_per_sc = result.final_sum_rate / cfg.sys.dims.K;
    row.per_user_rates = result.per_user_rates;
    row.final_disagreement = result.final_disagreement_pf;
    row.per_bs_power.resize(cfg.sys.dims.B);
    for (int b = 0; b < cfg.sys.dims.B; ++b) row.per_bs_power[b] = model::tx_power(result.w, b);
    row.wall_ms = cfg.measure_wall_ms ? wall : 0.0;
    row.initial_sum_rate = result.initial_sum_rate;
    if (detail) *detail = result;
    return row;
}

ResultRow run_baseline(Mode mode, std::uint64_t seed, const ExperimentConfig& cfg,
                       double p_max_w, const channel::ChannelRealization& channels) {
    if (mode == Mode::proposed)
        throw std::invalid_argument("experiment: run_baseline expects a non-proposed mode");
    return run_single(mode, seed, cfg, p_max_w, channels);
}

SweepOutcome run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const int P = static_cast<int>(cfg.pmax_dbm.size());
    const int Rn = cfg.realizations;

    std::vector<Cell> cells;
    cells.reserve(static_cast<std::size_t>(P) * Rn);
    for (int p = 0; p < P; ++p)
        for (int i = 0; i < Rn; ++i) cells.push_back({p, i});

    SweepOutcome out;
    out.bs_count = cfg.sys.dims.B;
    out.rows.resize(cells.size());
    std::vector<orchestrator::RunAudit> audits(cells.size());
    std::vector<std::exception_ptr> errors(cells.size());
    std::vector<orchestrator::TraceRow> first_trace;

    const auto work = [&](std::size_t c) {
        const auto [p_idx, i] = cells[c];
        try {
            const std::uint64_t child = seed_chain(
                cfg.master_seed, "sweep",
                {static_cast<std::uint64_t>(p_idx), static_cast<std::uint64_t>(i)});
            const auto geometry = channel::build_geometry(seed_chain(child, "geom"),
                                                          cfg.geometry, cfg.sys.dims.U);
            const auto channels = channel::draw_channels(seed_chain(child, "chan"), geometry,
                                                         cfg.pathloss, cfg.fading, cfg.sys.dims);
            orchestrator::RunResult detail;
            out.rows[c] = run_single(cfg.mode, child, cfg, dbm_to_watt(cfg.pmax_dbm[p_idx]),
                                     channels, &detail);
            out.rows[c].p_max_dbm = cfg.pmax_dbm[p_idx];
            audits[c] = detail.audit;
            if (c == 0) first_trace = detail.trace;
        } catch (...) {
            errors[c] = std::current_exception();
        }
    };

    const int threads = std::min<int>(cfg.threads, static_cast<int>(cells.size()));
    if (threads <= 1) {
        for (std::size_t c = 0; c < cells.size(); ++c) work(c);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                while (true) {
                    const std::size_t c = next.fetch_add(1);
                    if (c >= cells.size()) break;
                    work(c);
                }
            });
        for (auto& th : pool) th.join();
    }

    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (!errors[c]) continue;
        try {
            std::rethrow_exception(errors[c]);
        } catch (const std::exception& e) {
            throw std::runtime_error("sweep cell (p_max=" + fmt(cfg.pmax_dbm[cells[c].p_idx], 6) +
                                     " dBm, realization=" + std::to_string(cells[c].realization) +
                                     "): " + e.what());
        }
    }

    auto& worst = out.worst_audit;
    worst.min_surrogate_gain = std::numeric_limits<double>::infinity();
    for (const auto& a : audits) {
        worst.max_power_rel_excess = std::max(worst.max_power_rel_excess, a.max_power_rel_excess);
        worst.max_box_violation_pf = std::max(worst.max_box_violation_pf, a.max_box_violation_pf);
        worst.max_tracker_gap = std::max(worst.max_tracker_gap, a.max_tracker_gap);
        worst.max_compl_slack_rel = std::max(worst.max_compl_slack_rel, a.max_compl_slack_rel);
        worst.min_surrogate_gain = std::min(worst.min_surrogate_gain, a.min_surrogate_gain);
        worst.max_pricing_norm = std::max(worst.max_pricing_norm, a.max_pricing_norm);
    }
    out.first_trace = std::move(first_trace);
    return out;
}

std::string render_csv(const std::vector<ResultRow>& rows, int bs_count) {
    std::ostringstream os;
    os << "mode,p_max_dbm,seed,iterations,sum_rate_bpshz,sum_rate_per_sc,disagreement";
    for (int b = 0; b < bs_count; ++b) os << ",power_b" << b;
    os << ",wall_ms\n";
    for (const auto& r : rows) {
        os << r.mode << ',' << fmt(r.p_max_dbm) << ',' << r.seed << ',' << r.iterations << ','
           << fmt(r.final_sum_rate) << ',' << fmt(r.sum_rate_per_sc) << ','
           << fmt(r.final_disagreement);
        for (int b = 0; b < bs_count; ++b) os << ',' << fmt(r.per_bs_power[b]);
        os << ',' << fmt(r.wall_ms) << '\n';
    }
    return os.str();
}

void write_csv(const std::vector<ResultRow>& rows, int bs_count, const std::string& path) {
    if (rows.empty()) throw std::invalid_argument("experiment: no rows to write");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("experiment: cannot open output file: " + path);
    out << render_csv(rows, bs_count);
    if (!out) throw std::runtime_error("experiment: failed writing CSV: " + path);
}

void write_trace_csv(const std::vector<orchestrator::TraceRow>& trace,
                     const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("experiment: cannot open trace file: " + path);
    out << "t,rho,alpha,sum_rate,disagreement\n";
    for (const auto& row : trace)
        out << row.t << ',' << fmt(row.rho) << ',' << fmt(row.alpha) << ','
            << fmt(row.sum_rate_true) << ',' << fmt(row.disagreement_pf) << '\n';
    if (!out) throw std::runtime_error("experiment: failed writing trace CSV: " + path);
}

}  // namespace cellfree::experiment
