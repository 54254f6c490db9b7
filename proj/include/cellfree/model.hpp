#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "cellfree/channel.hpp"
#include "cellfree/circuit.hpp"

namespace cellfree::model {

struct SystemConfig {
    channel::Dims dims;
    double f_c = 3.5e9;
    double bandwidth = 100e6;
    double p_max_w = 1.0;        // per-BS transmit power budget
    double noise_var_w = 1e-12;  // sigma^2 per (u, k), -90 dBm

    void validate() const;
};

// Centered uniform grid: f_k = f_c + (k - (K+1)/2) * BW / K, k = 1..K.
Eigen::VectorXd subcarrier_grid(double f_c, double bandwidth, int K);

// w[b][u][k] : N, one precoding vector per (BS, user, subcarrier).
struct PrecoderSet {
    std::vector<std::vector<std::vector<Eigen::VectorXcd>>> w;

    static PrecoderSet zeros(const channel::Dims& dims);
};

// f[b][u][k] : N, direct channel plus all reflected cascades.
struct EffectiveChannel {
    std::vector<std::vector<std::vector<Eigen::VectorXcd>>> f;
};

// f_{b,u,k} = h_{b,u,k} + sum_r H_{b,r,k}^H Phi_{r,k}^H g_{r,u,k}
EffectiveChannel effective_channels(const channel::ChannelRealization& channels,
                                    const circuit::CapacitorVector& caps,
                                    const Eigen::VectorXd& f_grid,
                                    const circuit::CircuitParams& params);

// Same composition for a single (b, u, k) from one BS's local view.
Eigen::VectorXcd effective_channel_entry(const Eigen::VectorXcd& h,
                                         const std::vector<Eigen::MatrixXcd>& H_r,
                                         const std::vector<Eigen::VectorXcd>& g_ru,
                                         const std::vector<Eigen::VectorXcd>& phi_r);

// Scalar coupling state of the network at one precoder/channel iterate.
// beta(u,k)   = sum_b f_{b,u,k}^H w_{b,u,k}              (desired signal)
// mui(u,k)    = sigma^2 + sum_{q != u} |sum_b f^H w_q|^2 (interference + noise)
// snr(u,k)    = |beta|^2 / mui
// r_cross(b,i,j,k) = sum_{b' != b} f_{b',i,k}^H w_{b',j,k}, the feedback
//                    scalar BS b needs about everyone else's contribution.
struct LinkStats {
    int B = 0, U = 0, K = 0;
    Eigen::MatrixXcd beta;  // U x K
    Eigen::MatrixXd mui;    // U x K
    Eigen::MatrixXd snr;    // U x K
    Eigen::MatrixXd f1;     // |beta|^2
    Eigen::MatrixXd f2;     // alias of mui
    std::vector<std::complex<double>> r_cross_flat;

    std::complex<double> r_cross(int b, int i, int j, int k) const {
        return r_cross_flat[((static_cast<std::size_t>(b) * U + i) * U + j) * K + k];
    }
};

LinkStats link_stats(const EffectiveChannel& eff, const PrecoderSet& w, double noise_var);

struct SumRate {
    Eigen::VectorXd per_user;  // bits/s/Hz aggregated over subcarriers
    double total = 0.0;
};

SumRate sum_rate(const LinkStats& stats);

double tx_power(const PrecoderSet& w, int b);

}  // namespace cellfree::model
