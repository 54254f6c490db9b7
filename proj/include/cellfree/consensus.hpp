#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "cellfree/channel.hpp"
#include "cellfree/circuit.hpp"

namespace cellfree::consensus {

// Undirected connected communication graph over the B base stations.
struct Graph {
    int B = 1;
    std::vector<std::pair<int, int>> edges;

    static Graph complete(int B);
    static Graph ring(int B);
    static Graph path(int B);

    std::vector<std::vector<int>> adjacency() const;
    bool connected() const;
};

// Metropolis-Hastings weights: V_{b,i} = 1 / (1 + max(deg_b, deg_i)) on
// edges, diagonal absorbs the remainder. Doubly stochastic by construction.
Eigen::MatrixXd metropolis_weights(const Graph& graph);

// Everything BS b needs to evaluate its share of the capacitor gradient at
// the current iterate, assembled from its local noisy sample and the scalar
// feedback terms. Capacitances are handled in picofarad throughout.
struct GradientWorkspace {
    int U = 0, K = 0, RM = 0;
    double noise_var = 0.0;
    std::vector<Eigen::VectorXcd> phi;      // [k] : RM reflection diagonal
    std::vector<Eigen::VectorXcd> dphi_pf;  // [k] : RM d(reflection)/dc, per pF
    std::vector<Eigen::VectorXcd> g;        // [u*K + k] : RM stacked RIS-UE channel
    std::vector<Eigen::VectorXcd> v;        // [q*K + k] : RM, H_{b,k} w_{b,q,k}
    // z(u, q, k) = f_{b,u,k}^H w_{b,q,k} + r_cross(b, u, q, k): total signal of
    // precoder q at user u, local term plus frozen feedback.
    std::vector<std::complex<double>> z;
    std::vector<std::complex<double>> z_const;  // capacitor-independent part of z
    Eigen::MatrixXd f1;  // U x K, |z(u,u,k)|^2
    Eigen::MatrixXd f2;  // U x K, noise + sum_{q != u} |z(u,q,k)|^2

    std::complex<double> z_at(int u, int q, int k) const {
        return z[(static_cast<std::size_t>(u) * U + q) * K + k];
    }
};

// cross(u, q, k) = sum over other BSs of f^H w, reported as scalars.
using CrossFeedback = std::vector<std::complex<double>>;

GradientWorkspace build_workspace(
    const std::vector<std::vector<Eigen::MatrixXcd>>& H_rk,               // [r][k] M x N
    const std::vector<std::vector<std::vector<Eigen::VectorXcd>>>& g_ruk, // [r][u][k] M
    const std::vector<std::vector<Eigen::VectorXcd>>& h_uk,               // [u][k] N
    const std::vector<std::vector<Eigen::VectorXcd>>& w_uk,               // [u][k] N
    const Eigen::VectorXd& caps_pf, const Eigen::VectorXd& f_grid,
    const circuit::CircuitParams& params, double noise_var,
    const CrossFeedback& cross);

// BS b's share of the gradient of user u's rate with respect to the shared
// capacitor vector (picofarad units). The complex two-branch assembly must
// cancel to a real vector; a residue above tolerance signals inconsistency.
Eigen::VectorXd grad_caps_user(const GradientWorkspace& ws, int u);

// Sum over users; summed across BSs this is the exact sum-rate gradient.
Eigen::VectorXd grad_caps_total(const GradientWorkspace& ws);

// q_new = sum_i V_row[i] * q_i + grad_new - grad_prev
Eigen::VectorXd tracker_update(const std::vector<Eigen::VectorXd>& neighbor_trackers,
                               const Eigen::VectorXd& V_row, const Eigen::VectorXd& grad_new,
                               const Eigen::VectorXd& grad_prev);

struct PricingResult {
    Eigen::VectorXd pi_c;
    Eigen::VectorXd d_c;
    Eigen::VectorXd gamma;
};

// pi = B q - grad, d <- (1-rho) d + rho (pi + gamma), gamma = local gradient.
// When cooperation is off the pricing vector is forced to zero before the
// accumulation update.
PricingResult price_and_accumulate_c(const Eigen::VectorXd& q_new,
                                     const Eigen::VectorXd& grad_local,
                                     const Eigen::VectorXd& d_prev, double rho, int B,
                                     bool cooperation);

// Exact maximizer of <a, c - c_t> - (tau/2)||c - c_t||^2 over the box, with
// a = rho (gamma + pi) + (1 - rho) d: entrywise clamp(c_t + a / tau).
Eigen::VectorXd solve_caps(const Eigen::VectorXd& caps_pf, const Eigen::VectorXd& pi_c,
                           const Eigen::VectorXd& d_c, const Eigen::VectorXd& gamma,
                           double rho, double tau, double c_min_pf, double c_max_pf);

// One averaging round: copy b becomes the V-weighted mix of all copies.
std::vector<Eigen::VectorXd> consensus_average(const std::vector<Eigen::VectorXd>& copies,
                                               const Eigen::MatrixXd& V);

// Per-BS optimizer memory for the capacitor block.
struct RisLocalState {
    Eigen::VectorXd caps_pf;
    Eigen::VectorXd q_c;
    Eigen::VectorXd d_c;
    Eigen::VectorXd pi_c;
    Eigen::VectorXd gamma;
    Eigen::VectorXd grad_prev;

    static RisLocalState zeros(int rm);
};

}  // namespace cellfree::consensus
