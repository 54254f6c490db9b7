#include "cellfree/consensus.hpp"

#include <cmath>
#include <stdexcept>

namespace cellfree::consensus {

namespace {
constexpr double kLn2 = 0.6931471805599453094172321;
using cplx = std::complex<double>;
}  // namespace

Graph Graph::complete(int B) {
    Graph g;
    g.B = B;
    for (int a = 0; a < B; ++a)
        for (int b = a + 1; b < B; ++b) g.edges.emplace_back(a, b);
    return g;
}

Graph Graph::ring(int B) {
    Graph g;
    g.B = B;
    if (B == 2) {
        g.edges.emplace_back(0, 1);
        return g;
    }
    for (int a = 0; a < B && B > 1; ++a) g.edges.emplace_back(a, (a + 1) % B);
    return g;
}

Graph Graph::path(int B) {
    Graph g;
    g.B = B;
    for (int a = 0; a + 1 < B; ++a) g.edges.emplace_back(a, a + 1);
    return g;
}

std::vector<std::vector<int>> Graph::adjacency() const {
    std::vector<std::vector<int>> adj(B);
    for (const auto& [a, b] : edges) {
        if (a < 0 || b < 0 || a >= B || b >= B || a == b)
            throw std::invalid_argument("graph: bad edge");
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    return adj;
}

bool Graph::connected() const {
    if (B <= 1) return true;
    const auto adj = adjacency();
    std::vector<bool> seen(B, false);
    std::vector<int> stack{0};
    seen[0] = true;
    int count = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w : adj[v])
            if (!seen[w]) {
                seen[w] = true;
                ++count;
                stack.push_back(w);
            }
    }
    return count == B;
}

Eigen::MatrixXd metropolis_weights(const Graph& graph) {
    if (!graph.connected())
        throw std::invalid_argument("consensus: graph must be connected");
    const auto adj = graph.adjacency();
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(graph.B, graph.B);
    for (const auto& [a, b] : graph.edges) {
        const double w = 1.0 / (1.0 + std::max(adj[a].size(), adj[b].size()));
        V(a, b) = w;
        V(b, a) = w;
    }
    for (int b = 0; b < graph.B; ++b) V(b, b) = 1.0 - V.row(b).sum();
    return V;
}

GradientWorkspace build_workspace(
    const std::vector<std::vector<Eigen::MatrixXcd>>& H_rk,
    const std::vector<std::vector<std::vector<Eigen::VectorXcd>>>& g_ruk,
    const std::vector<std::vector<Eigen::VectorXcd>>& h_uk,
    const std::vector<std::vector<Eigen::VectorXcd>>& w_uk,
    const Eigen::VectorXd& caps_pf, const Eigen::VectorXd& f_grid,
    const circuit::CircuitParams& params, double noise_var,
    const CrossFeedback& cross) {
    const int R = static_cast<int>(H_rk.size());
    const int K = static_cast<int>(f_grid.size());
    const int U = static_cast<int>(h_uk.size());
    const int M = static_cast<int>(H_rk[0][0].rows());
    const int RM = R * M;

    GradientWorkspace ws;
    ws.U = U;
    ws.K = K;
    ws.RM = RM;
    ws.noise_var = noise_var;
    ws.phi.assign(K, Eigen::VectorXcd(RM));
    ws.dphi_pf.assign(K, Eigen::VectorXcd(RM));
    ws.g.assign(static_cast<std::size_t>(U) * K, Eigen::VectorXcd(RM));
    ws.v.assign(static_cast<std::size_t>(U) * K, Eigen::VectorXcd(RM));
    ws.z.assign(static_cast<std::size_t>(U) * U * K, cplx(0.0));
    ws.z_const.assign(static_cast<std::size_t>(U) * U * K, cplx(0.0));
    ws.f1.resize(U, K);
    ws.f2.resize(U, K);

    circuit::CapacitorVector caps{caps_pf * 1e-12};
    for (int k = 0; k < K; ++k) {
        ws.phi[k] = circuit::build_phi(f_grid[k], caps, params);
        for (int n = 0; n < RM; ++n)
            ws.dphi_pf[k][n] =
                1e-12 * circuit::reflection_derivative(f_grid[k], caps.values[n], params);
    }

    for (int u = 0; u < U; ++u)
        for (int k = 0; k < K; ++k) {
            Eigen::VectorXcd& gu = ws.g[static_cast<std::size_t>(u) * K + k];
            for (int r = 0; r < R; ++r) gu.segment(r * M, M) = g_ruk[r][u][k];
        }
    for (int q = 0; q < U; ++q)
        for (int k = 0; k < K; ++k) {
            Eigen::VectorXcd& vq = ws.v[static_cast<std::size_t>(q) * K + k];
            for (int r = 0; r < R; ++r) vq.segment(r * M, M) = H_rk[r][k] * w_uk[q][k];
        }

    for (int u = 0; u < U; ++u)
        for (int k = 0; k < K; ++k) {
            const Eigen::VectorXcd& gu = ws.g[static_cast<std::size_t>(u) * K + k];
            for (int q = 0; q < U; ++q) {
                const Eigen::VectorXcd& vq = ws.v[static_cast<std::size_t>(q) * K + k];
                const std::size_t zi = (static_cast<std::size_t>(u) * U + q) * K + k;
                cplx refl = 0.0;
                for (int n = 0; n < RM; ++n)
                    refl += std::conj(gu[n]) * ws.phi[k][n] * vq[n];
                ws.z_const[zi] = h_uk[u][k].dot(w_uk[q][k]) + cross[zi];
                ws.z[zi] = ws.z_const[zi] + refl;
            }
            double interf = 0.0;
            for (int q = 0; q < U; ++q)
                if (q != u) interf += std::norm(ws.z_at(u, q, k));
            ws.f1(u, k) = std::norm(ws.z_at(u, u, k));
            ws.f2(u, k) = noise_var + interf;
        }
    return ws;
}

namespace {

// Gradient of |z(u,q,k)|^2, assembled as the paper-style two-branch sum
// t*conj + conj*t. One branch recomputes the coupling scalar from the g /
// Phi / v contraction, the other conjugates the stored workspace scalar, so
// the imaginary parts only cancel when the workspace is self-consistent.
void add_grad_z2(const GradientWorkspace& ws, int u, int q, int k, Eigen::VectorXcd& acc) {
    const Eigen::VectorXcd& gu = ws.g[static_cast<std::size_t>(u) * ws.K + k];
    const Eigen::VectorXcd& vq = ws.v[static_cast<std::size_t>(q) * ws.K + k];
    const std::size_t zi = (static_cast<std::size_t>(u) * ws.U + q) * ws.K + k;

    cplx refl = 0.0;
    for (int n = 0; n < ws.RM; ++n) refl += std::conj(gu[n]) * ws.phi[k][n] * vq[n];
    const cplx z_fresh = ws.z_const[zi] + refl;
    const cplx z_stored_conj = std::conj(ws.z[zi]);

    for (int n = 0; n < ws.RM; ++n) {
        const cplx t = ws.dphi_pf[k][n] * std::conj(gu[n]) * vq[n];
        acc[n] += z_fresh * std::conj(t) + z_stored_conj * t;
    }
}

}  // namespace

Eigen::VectorXd grad_caps_user(const GradientWorkspace& ws, int u) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(ws.RM);
    for (int k = 0; k < ws.K; ++k) {
        Eigen::VectorXcd g1 = Eigen::VectorXcd::Zero(ws.RM);
        Eigen::VectorXcd g2 = Eigen::VectorXcd::Zero(ws.RM);
        add_grad_z2(ws, u, u, k, g1);
        for (int q = 0; q < ws.U; ++q)
            if (q != u) add_grad_z2(ws, u, q, k, g2);

        const double f1 = ws.f1(u, k), f2 = ws.f2(u, k);
        const double scale = 1.0 / (kLn2 * (1.0 + f1 / f2) * f2 * f2);
        const Eigen::VectorXcd combo = scale * (f2 * g1 - f1 * g2);

        const double imag_norm = combo.imag().norm();
        const double real_norm = combo.real().norm();
        if (imag_norm > 1e-9 * std::max(real_norm, 1e-300))
            throw std::runtime_error(
                "consensus: capacitor gradient assembly left a complex residue");
        grad += combo.real();
    }
    return grad;
}

Eigen::VectorXd grad_caps_total(const GradientWorkspace& ws) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(ws.RM);
    for (int u = 0; u < ws.U; ++u) grad += grad_caps_user(ws, u);
    return grad;
}

Eigen::VectorXd tracker_update(const std::vector<Eigen::VectorXd>& neighbor_trackers,
                               const Eigen::VectorXd& V_row, const Eigen::VectorXd& grad_new,
                               const Eigen::VectorXd& grad_prev) {
    if (static_cast<Eigen::Index>(neighbor_trackers.size()) != V_row.size())
        throw std::invalid_argument("consensus: tracker count does not match weight row");
    Eigen::VectorXd q = Eigen::VectorXd::Zero(grad_new.size());
    for (std::size_t i = 0; i < neighbor_trackers.size(); ++i) {
        if (V_row[static_cast<Eigen::Index>(i)] == 0.0) continue;
        if (neighbor_trackers[i].size() != grad_new.size())
            throw std::invalid_argument("consensus: tracker length mismatch");
        q += V_row[static_cast<Eigen::Index>(i)] * neighbor_trackers[i];
    }
    return q + grad_new - grad_prev;
}

PricingResult price_and_accumulate_c(const Eigen::VectorXd& q_new,
                                     const Eigen::VectorXd& grad_local,
                                     const Eigen::VectorXd& d_prev, double rho, int B,
                                     bool cooperation) {
    PricingResult out;
    out.gamma = grad_local;
    out.pi_c = cooperation ? Eigen::VectorXd(B * q_new - grad_local)
                           : Eigen::VectorXd(Eigen::VectorXd::Zero(q_new.size()));
    out.d_c = (1.0 - rho) * d_prev + rho * (out.pi_c + out.gamma);
    return out;
}

Eigen::VectorXd solve_caps(const Eigen::VectorXd& caps_pf, const Eigen::VectorXd& pi_c,
                           const Eigen::VectorXd& d_c, const Eigen::VectorXd& gamma,
                           double rho, double tau, double c_min_pf, double c_max_pf) {
    if (!(tau > 0.0)) throw std::invalid_argument("consensus: tau must be positive");
    const Eigen::VectorXd a = rho * (gamma + pi_c) + (1.0 - rho) * d_c;
    return (caps_pf + a / tau).cwiseMax(c_min_pf).cwiseMin(c_max_pf);
}

std::vector<Eigen::VectorXd> consensus_average(const std::vector<Eigen::VectorXd>& copies,
                                               const Eigen::MatrixXd& V) {
    const int B = static_cast<int>(copies.size());
    if (V.rows() != B || V.cols() != B)
        throw std::invalid_argument("consensus: weight matrix size mismatch");
    std::vector<Eigen::VectorXd> out(B);
    for (int b = 0; b < B; ++b) {
        Eigen::VectorXd mix = Eigen::VectorXd::Zero(copies[0].size());
        for (int i = 0; i < B; ++i)
            if (V(b, i) != 0.0) mix += V(b, i) * copies[i];
        out[b] = mix;
    }
    return out;
}

RisLocalState RisLocalState::zeros(int rm) {
    RisLocalState st;
    st.caps_pf = Eigen::VectorXd::Zero(rm);
    st.q_c = Eigen::VectorXd::Zero(rm);
    st.d_c = Eigen::VectorXd::Zero(rm);
    st.pi_c = Eigen::VectorXd::Zero(rm);
    st.gamma = Eigen::VectorXd::Zero(rm);
    st.grad_prev = Eigen::VectorXd::Zero(rm);
    return st;
}

}  // namespace cellfree::consensus
