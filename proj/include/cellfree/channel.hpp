#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace cellfree::channel {

struct Dims {
    int B = 4;   // base stations
    int N = 2;   // antennas per BS
    int U = 4;   // single-antenna users
    int R = 2;   // surfaces
    int M = 144; // elements per surface
    int K = 16;  // subcarriers

    void validate() const;
    int rm() const { return R * M; }
};

enum class LinkType { bs_ue, bs_ris, ris_ue };

struct PathlossModel {
    double pl0_db = -30.0;
    double d0_m = 1.0;
    double exp_bs_ue = 3.8;
    double exp_bs_ris = 2.4;
    double exp_ris_ue = 2.2;

    void validate() const;
};

// Linear power gain 10^(pl0/10) * (d/d0)^(-alpha).
double pathloss(double d_m, LinkType link, const PathlossModel& model);

struct ClusterSpec {
    Eigen::Vector2d center;  // x, y in meters
    double radius = 2.0;
    int count = 0;
};

struct GeometrySpec {
    std::vector<Eigen::Vector3d> bs_positions;
    std::vector<Eigen::Vector3d> ris_positions;
    std::vector<ClusterSpec> clusters;
    double ue_height = 1.5;
};

struct Geometry {
    std::vector<Eigen::Vector3d> bs;
    std::vector<Eigen::Vector3d> ris;
    std::vector<Eigen::Vector3d> ue;
    std::vector<ClusterSpec> clusters;
};

// UEs are placed area-uniformly inside their cluster disc at the configured
// height; BS/RIS positions are copied from the spec.
Geometry build_geometry(std::uint64_t seed, const GeometrySpec& spec, int num_users);

struct FadingModel {
    int taps = 4;                     // tapped-delay-line length, uniform power profile
    bool iid_per_subcarrier = false;  // comparison mode: independent entries per SC
};

// Frequency-domain channels per subcarrier for every link of the network.
//   h[b][u][k] : N      direct BS-UE
//   H[b][r][k] : M x N  BS-RIS
//   g[r][u][k] : M      RIS-UE
struct ChannelRealization {
    Dims dims;
    std::vector<std::vector<std::vector<Eigen::VectorXcd>>> h;
    std::vector<std::vector<std::vector<Eigen::MatrixXcd>>> H;
    std::vector<std::vector<std::vector<Eigen::VectorXcd>>> g;
};

// Rayleigh taps with total power equal to the link pathloss gain, mapped to
// the K subcarriers by a DFT of the zero-padded tap vector.
ChannelRealization draw_channels(std::uint64_t seed, const Geometry& geometry,
                                 const PathlossModel& pl, const FadingModel& fading,
                                 const Dims& dims);

struct CsiErrorModel {
    double delta = 0.2;  // relative error variance, sigma_e^2 = delta * |x|^2

    void validate() const;
};

// Adds independent CN(0, delta*|x|^2) noise to every scalar entry.
ChannelRealization perturb_csi(std::uint64_t seed, const ChannelRealization& channels,
                               const CsiErrorModel& err);

// One BS's noisy view of the network: its own direct and BS-RIS channels plus
// its own noisy estimate of the shared RIS-UE channels.
struct LocalSample {
    std::vector<std::vector<Eigen::VectorXcd>> h;               // [u][k] : N
    std::vector<std::vector<Eigen::MatrixXcd>> H;               // [r][k] : M x N
    std::vector<std::vector<std::vector<Eigen::VectorXcd>>> g;  // [r][u][k] : M
};

LocalSample perturb_local(std::uint64_t seed, const ChannelRealization& channels, int b,
                          const CsiErrorModel& err);

}  // namespace cellfree::channel
