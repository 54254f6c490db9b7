// Test-only oracles: finite differences, brute-force searches and a small
// random instance factory. Everything here evaluates the definitions
// directly and stays off the code paths under test.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "cellfree/channel.hpp"
#include "cellfree/circuit.hpp"
#include "cellfree/consensus.hpp"
#include "cellfree/model.hpp"
#include "cellfree/rng.hpp"

namespace oracles {

using cplx = std::complex<double>;
constexpr double kTwoPi = 6.283185307179586476925287;

// ---- raw circuit formulas (independent of cellfree::circuit) -------------

struct RawZ {
    cplx num;
    cplx den;
};

inline RawZ raw_impedance_parts(double f, double c, const cellfree::circuit::CircuitParams& p) {
    const cplx j(0.0, 1.0);
    const double kappa = kTwoPi;
    const cplx cap = 1.0 / (j * kappa * f * c);
    const cplx num = j * kappa * f * p.l1 * (j * kappa * f * p.l2 + p.r0 + cap);
    const cplx den = j * kappa * f * (p.l1 + p.l2) + p.r0 + cap;
    return {num, den};
}

inline cplx raw_impedance(double f, double c, const cellfree::circuit::CircuitParams& p) {
    const auto [num, den] = raw_impedance_parts(f, c, p);
    return num / den;
}

inline cplx reflect_from_z(cplx z, double zeta0) { return (z - zeta0) / (z + zeta0); }

inline cplx raw_reflection(double f, double c, const cellfree::circuit::CircuitParams& p) {
    return reflect_from_z(raw_impedance(f, c, p), p.zeta0);
}

// ---- finite differences ---------------------------------------------------

inline double central_diff(const std::function<double(double)>& fn, double x, double h) {
    return (fn(x + h) - fn(x - h)) / (2.0 * h);
}

// Real gradient [d/dRe; d/dIm] of a real function of a complex vector.
inline Eigen::VectorXd fd_complex_grad(const std::function<double(const Eigen::VectorXcd&)>& fn,
                                       const Eigen::VectorXcd& at, double h) {
    const Eigen::Index n = at.size();
    Eigen::VectorXd grad(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int part = 0; part < 2; ++part) {
            Eigen::VectorXcd p = at, m = at;
            const cplx dir = part == 0 ? cplx(h, 0.0) : cplx(0.0, h);
            p[i] += dir;
            m[i] -= dir;
            grad[part * n + i] = (fn(p) - fn(m)) / (2.0 * h);
        }
    }
    return grad;
}

// Embedding of a conjugate-convention complex gradient into the same real
// coordinates: dF/dRe(w_i) = 2 Re(g_i), dF/dIm(w_i) = 2 Im(g_i).
inline Eigen::VectorXd embed_complex_grad(const Eigen::VectorXcd& g) {
    Eigen::VectorXd out(2 * g.size());
    out.head(g.size()) = 2.0 * g.real();
    out.tail(g.size()) = 2.0 * g.imag();
    return out;
}

inline double rel_err(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
    return (got - want).norm() / std::max(want.norm(), 1e-300);
}

// ---- direct rate formulas -------------------------------------------------

// SINR and rate of user u at subcarrier k evaluated straight from the
// definition, with explicit sums over BSs and users.
inline double rate_uk(const cellfree::model::EffectiveChannel& eff,
                      const cellfree::model::PrecoderSet& w, double noise_var, int u, int k) {
    const int B = static_cast<int>(eff.f.size());
    const int U = static_cast<int>(eff.f[0].size());
    cplx desired = 0.0;
    for (int b = 0; b < B; ++b) desired += eff.f[b][u][k].dot(w.w[b][u][k]);
    double interf = 0.0;
    for (int q = 0; q < U; ++q) {
        if (q == u) continue;
        cplx z = 0.0;
        for (int b = 0; b < B; ++b) z += eff.f[b][u][k].dot(w.w[b][q][k]);
        interf += std::norm(z);
    }
    return std::log2(1.0 + std::norm(desired) / (noise_var + interf));
}

inline double rate_user(const cellfree::model::EffectiveChannel& eff,
                        const cellfree::model::PrecoderSet& w, double noise_var, int u) {
    double acc = 0.0;
    const int K = static_cast<int>(eff.f[0][0].size());
    for (int k = 0; k < K; ++k) acc += rate_uk(eff, w, noise_var, u, k);
    return acc;
}

// ---- small random instance ------------------------------------------------

struct SmallInstance {
    cellfree::channel::Dims dims;
    cellfree::model::SystemConfig sys;
    cellfree::circuit::CircuitParams circuit;
    cellfree::channel::ChannelRealization channels;
    Eigen::VectorXd f_grid;
    cellfree::model::PrecoderSet w;
    Eigen::VectorXd caps_pf;
    cellfree::model::EffectiveChannel eff;
    cellfree::model::LinkStats stats;
};

inline SmallInstance make_instance(std::uint64_t seed,
                                   cellfree::channel::Dims dims = {2, 2, 2, 1, 4, 2}) {
    using namespace cellfree;
    SmallInstance si;
    si.dims = dims;
    si.sys.dims = dims;
    si.sys.p_max_w = 1.0;
    si.sys.noise_var_w = 1e-12;

    channel::GeometrySpec spec;
    for (int b = 0; b < dims.B; ++b) spec.bs_positions.emplace_back(50.0 * b, 0.0, 5.0);
    for (int r = 0; r < dims.R; ++r) spec.ris_positions.emplace_back(65.0 + 20.0 * r, 60.0, 6.0);
    spec.clusters = {{Eigen::Vector2d(67.5, 57.5), 2.0, (dims.U + 1) / 2},
                     {Eigen::Vector2d(82.5, 57.5), 2.0, dims.U / 2}};
    const auto geo = channel::build_geometry(seed_chain(seed, "geo"), spec, dims.U);
    si.channels = channel::draw_channels(seed_chain(seed, "chan"), geo, channel::PathlossModel{},
                                         channel::FadingModel{}, dims);
    si.f_grid = model::subcarrier_grid(si.sys.f_c, si.sys.bandwidth, dims.K);

    Rng rng(seed_chain(seed, "w"));
    si.w = model::PrecoderSet::zeros(dims);
    for (int b = 0; b < dims.B; ++b) {
        for (int u = 0; u < dims.U; ++u)
            for (int k = 0; k < dims.K; ++k)
                for (int n = 0; n < dims.N; ++n) si.w.w[b][u][k][n] = rng.cgaussian(1.0);
        const double p = model::tx_power(si.w, b);
        for (int u = 0; u < dims.U; ++u)
            for (int k = 0; k < dims.K; ++k) si.w.w[b][u][k] *= std::sqrt(si.sys.p_max_w / p);
    }

    si.caps_pf.resize(dims.rm());
    const double lo = si.circuit.c_min * 1e12, hi = si.circuit.c_max * 1e12;
    for (int n = 0; n < dims.rm(); ++n)
        si.caps_pf[n] = lo + (hi - lo) * (0.2 + 0.6 * rng.uniform());

    si.eff = model::effective_channels(si.channels, {si.caps_pf * 1e-12}, si.f_grid, si.circuit);
    si.stats = model::link_stats(si.eff, si.w, si.sys.noise_var_w);
    return si;
}

// Local slices of BS b used by the capacitor-gradient workspace.
struct LocalSlices {
    std::vector<std::vector<Eigen::MatrixXcd>> H_rk;
    std::vector<std::vector<std::vector<Eigen::VectorXcd>>> g_ruk;
    std::vector<std::vector<Eigen::VectorXcd>> h_uk;
};

inline LocalSlices slices_of(const cellfree::channel::ChannelRealization& ch, int b) {
    const auto d = ch.dims;
    LocalSlices s;
    s.H_rk.assign(d.R, std::vector<Eigen::MatrixXcd>(d.K));
    s.g_ruk.assign(d.R, std::vector<std::vector<Eigen::VectorXcd>>(
                            d.U, std::vector<Eigen::VectorXcd>(d.K)));
    s.h_uk.assign(d.U, std::vector<Eigen::VectorXcd>(d.K));
    for (int r = 0; r < d.R; ++r)
        for (int k = 0; k < d.K; ++k) s.H_rk[r][k] = ch.H[b][r][k];
    for (int r = 0; r < d.R; ++r)
        for (int u = 0; u < d.U; ++u)
            for (int k = 0; k < d.K; ++k) s.g_ruk[r][u][k] = ch.g[r][u][k];
    for (int u = 0; u < d.U; ++u)
        for (int k = 0; k < d.K; ++k) s.h_uk[u][k] = ch.h[b][u][k];
    return s;
}

inline cellfree::consensus::CrossFeedback cross_of(const cellfree::model::LinkStats& st, int b) {
    cellfree::consensus::CrossFeedback cross(static_cast<std::size_t>(st.U) * st.U * st.K);
    for (int u = 0; u < st.U; ++u)
        for (int q = 0; q < st.U; ++q)
            for (int k = 0; k < st.K; ++k)
                cross[(static_cast<std::size_t>(u) * st.U + q) * st.K + k] =
                    st.r_cross(b, u, q, k);
    return cross;
}

// Rate of user u as BS b sees it: its own reflected path varies with the
// capacitor copy, everyone else's contribution is frozen scalar feedback.
// This is the function the per-BS analytic gradient must differentiate.
inline double local_rate(const SmallInstance& si, const LocalSlices& sl,
                         const cellfree::consensus::CrossFeedback& cross, int b, int u,
                         const Eigen::VectorXd& caps_pf) {
    using namespace cellfree;
    const auto& d = si.dims;
    circuit::CapacitorVector cv{caps_pf * 1e-12};
    double rate = 0.0;
    for (int k = 0; k < d.K; ++k) {
        const Eigen::VectorXcd phi = circuit::build_phi(si.f_grid[k], cv, si.circuit);
        std::vector<Eigen::VectorXcd> phi_r(d.R);
        std::vector<Eigen::MatrixXcd> Hr(d.R);
        for (int r = 0; r < d.R; ++r) {
            phi_r[r] = phi.segment(r * d.M, d.M);
            Hr[r] = sl.H_rk[r][k];
        }
        std::vector<Eigen::VectorXcd> gr(d.R);
        for (int r = 0; r < d.R; ++r) gr[r] = sl.g_ruk[r][u][k];
        const Eigen::VectorXcd f = model::effective_channel_entry(sl.h_uk[u][k], Hr, gr, phi_r);
        double sig = 0.0, interf = 0.0;
        for (int q = 0; q < d.U; ++q) {
            const cplx z = f.dot(si.w.w[b][q][k]) +
                           cross[(static_cast<std::size_t>(u) * d.U + q) * d.K + k];
            if (q == u)
                sig = std::norm(z);
            else
                interf += std::norm(z);
        }
        rate += std::log2(1.0 + sig / (si.sys.noise_var_w + interf));
    }
    return rate;
}

inline double local_rate_total(const SmallInstance& si, const LocalSlices& sl,
                               const cellfree::consensus::CrossFeedback& cross, int b,
                               const Eigen::VectorXd& caps_pf) {
    double acc = 0.0;
    for (int u = 0; u < si.dims.U; ++u) acc += local_rate(si, sl, cross, b, u, caps_pf);
    return acc;
}

inline Eigen::VectorXd fd_caps_grad(const std::function<double(const Eigen::VectorXd&)>& fn,
                                    const Eigen::VectorXd& caps_pf, double rel_step = 1e-6) {
    Eigen::VectorXd g(caps_pf.size());
    for (Eigen::Index n = 0; n < caps_pf.size(); ++n) {
        const double h = rel_step * std::abs(caps_pf[n]);
        Eigen::VectorXd p = caps_pf, m = caps_pf;
        p[n] += h;
        m[n] -= h;
        g[n] = (fn(p) - fn(m)) / (2.0 * h);
    }
    return g;
}

}  // namespace oracles
