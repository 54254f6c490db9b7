#include "cellfree/model.hpp"

#include <cmath>
#include <stdexcept>

namespace cellfree::model {

void SystemConfig::validate() const {
    dims.validate();
    if (!(f_c > 0.0) || !(bandwidth > 0.0))
        throw std::invalid_argument("system: carrier and bandwidth must be positive");
    if (!(p_max_w > 0.0)) throw std::invalid_argument("system: p_max must be positive");
    if (!(noise_var_w > 0.0)) throw std::invalid_argument("system: noise variance must be positive");
}

Eigen::VectorXd subcarrier_grid(double f_c, double bandwidth, int K) {
    Eigen::VectorXd grid(K);
    for (int k = 1; k <= K; ++k)
        grid[k - 1] = f_c + (k - 0.5 * (K + 1)) * bandwidth / K;
    return grid;
}

PrecoderSet PrecoderSet::zeros(const channel::Dims& dims) {
    PrecoderSet p;
    p.w.assign(dims.B, std::vector<std::vector<Eigen::VectorXcd>>(
                           dims.U, std::vector<Eigen::VectorXcd>(
                                       dims.K, Eigen::VectorXcd::Zero(dims.N))));
    return p;
}

Eigen::VectorXcd effective_channel_entry(const Eigen::VectorXcd& h,
                                         const std::vector<Eigen::MatrixXcd>& H_r,
                                         const std::vector<Eigen::VectorXcd>& g_ru,
                                         const std::vector<Eigen::VectorXcd>& phi_r) {
    Eigen::VectorXcd f = h;
    for (std::size_t r = 0; r < H_r.size(); ++r)
        f += H_r[r].adjoint() * phi_r[r].conjugate().asDiagonal() * g_ru[r];
    return f;
}

EffectiveChannel effective_channels(const channel::ChannelRealization& channels,
                                    const circuit::CapacitorVector& caps,
                                    const Eigen::VectorXd& f_grid,
                                    const circuit::CircuitParams& params) {
    const auto [B, N, U, R, M, K] = channels.dims;
    if (caps.values.size() != static_cast<Eigen::Index>(R) * M)
        throw std::invalid_argument("model: capacitor vector has wrong length");
    if (f_grid.size() != K)
        throw std::invalid_argument("model: frequency grid has wrong length");

    // Per-subcarrier reflection diagonals, split back per surface.
    std::vector<std::vector<Eigen::VectorXcd>> phi(K, std::vector<Eigen::VectorXcd>(R));
    for (int k = 0; k < K; ++k) {
        const Eigen::VectorXcd stacked = circuit::build_phi(f_grid[k], caps, params);
        for (int r = 0; r < R; ++r) phi[k][r] = stacked.segment(r * M, M);
    }

    EffectiveChannel eff;
    eff.f.assign(B, std::vector<std::vector<Eigen::VectorXcd>>(
                        U, std::vector<Eigen::VectorXcd>(K)));
    for (int b = 0; b < B; ++b)
        for (int u = 0; u < U; ++u)
            for (int k = 0; k < K; ++k) {
                Eigen::VectorXcd f = channels.h[b][u][k];
                for (int r = 0; r < R; ++r)
                    f += channels.H[b][r][k].adjoint() *
                         phi[k][r].conjugate().asDiagonal() * channels.g[r][u][k];
                eff.f[b][u][k] = f;
            }
    return eff;
}

LinkStats link_stats(const EffectiveChannel& eff, const PrecoderSet& w, double noise_var) {
    if (!(noise_var > 0.0)) throw std::invalid_argument("model: noise variance must be positive");
    const int B = static_cast<int>(eff.f.size());
    const int U = static_cast<int>(eff.f[0].size());
    const int K = static_cast<int>(eff.f[0][0].size());

    LinkStats st;
    st.B = B;
    st.U = U;
    st.K = K;
    st.beta.resize(U, K);
    st.mui.resize(U, K);
    st.snr.resize(U, K);
    st.f1.resize(U, K);
    st.f2.resize(U, K);
    st.r_cross_flat.assign(static_cast<std::size_t>(B) * U * U * K, {0.0, 0.0});

    // inner(b, i, j, k) = f_{b,i,k}^H w_{b,j,k}
    std::vector<std::complex<double>> inner(static_cast<std::size_t>(B) * U * U * K);
    const auto idx = [U, K](int b, int i, int j, int k) {
        return ((static_cast<std::size_t>(b) * U + i) * U + j) * K + k;
    };
    for (int b = 0; b < B; ++b)
        for (int i = 0; i < U; ++i)
            for (int j = 0; j < U; ++j)
                for (int k = 0; k < K; ++k)
                    inner[idx(b, i, j, k)] = eff.f[b][i][k].dot(w.w[b][j][k]);

    for (int i = 0; i < U; ++i)
        for (int j = 0; j < U; ++j)
            for (int k = 0; k < K; ++k) {
                std::complex<double> total = 0.0;
                for (int b = 0; b < B; ++b) total += inner[idx(b, i, j, k)];
                for (int b = 0; b < B; ++b)
                    st.r_cross_flat[idx(b, i, j, k)] = total - inner[idx(b, i, j, k)];
                if (i == j)
                    st.beta(i, k) = total;
            }

    for (int u = 0; u < U; ++u)
        for (int k = 0; k < K; ++k) {
            double interf = 0.0;
            for (int q = 0; q < U; ++q) {
                if (q == u) continue;
                std::complex<double> z = 0.0;
                for (int b = 0; b < B; ++b) z += inner[idx(b, u, q, k)];
                interf += std::norm(z);
            }
            st.mui(u, k) = noise_var + interf;
            st.f1(u, k) = std::norm(st.beta(u, k));
            st.f2(u, k) = st.mui(u, k);
            st.snr(u, k) = st.f1(u, k) / st.mui(u, k);
        }
    return st;
}

SumRate sum_rate(const LinkStats& stats) {
    SumRate sr;
    sr.per_user = Eigen::VectorXd::Zero(stats.U);
    for (int u = 0; u < stats.U; ++u) {
        double acc = 0.0;
        for (int k = 0; k < stats.K; ++k) acc += std::log2(1.0 + stats.snr(u, k));
        sr.per_user[u] = acc;
        sr.total += acc;
    }
    return sr;
}

double tx_power(const PrecoderSet& w, int b) {
    double p = 0.0;
    for (const auto& per_user : w.w[b])
        for (const auto& wk : per_user) p += wk.squaredNorm();
    return p;
}

}  // namespace cellfree::model
