#include "cellfree/channel.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "cellfree/rng.hpp"

namespace cellfree::channel {

namespace {

using cplx = std::complex<double>;
constexpr double kTwoPi = 6.283185307179586476925287;

// K-point DFT of an L-tap vector (L <= K), evaluated at bin k.
Eigen::VectorXcd taps_to_subcarriers(const Eigen::VectorXcd& taps, int K) {
    Eigen::VectorXcd out(K);
    const int L = static_cast<int>(taps.size());
    for (int k = 0; k < K; ++k) {
        cplx acc = 0.0;
        for (int l = 0; l < L; ++l) {
            const double ang = -kTwoPi * k * l / K;
            acc += taps[l] * cplx(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

// One scalar link entry across all K subcarriers with total power `gain`.
Eigen::VectorXcd draw_entry(Rng& rng, double gain, const FadingModel& fading, int K) {
    if (fading.iid_per_subcarrier) {
        Eigen::VectorXcd out(K);
        for (int k = 0; k < K; ++k) out[k] = rng.cgaussian(gain);
        return out;
    }
    const int L = std::min(fading.taps, K);
    Eigen::VectorXcd taps(L);
    const double tap_var = gain / L;
    for (int l = 0; l < L; ++l) taps[l] = rng.cgaussian(tap_var);
    return taps_to_subcarriers(taps, K);
}

double distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    return (a - b).norm();
}

cplx noisy(Rng& rng, cplx x, double delta) {
    return x + rng.cgaussian(delta * std::norm(x));
}

}  // namespace

void Dims::validate() const {
    if (B < 1 || N < 1 || U < 1 || R < 1 || M < 1 || K < 1)
        throw std::invalid_argument("channel: all dimensions must be positive");
}

void PathlossModel::validate() const {
    if (!(d0_m > 0.0)) throw std::invalid_argument("pathloss: d0 must be positive");
    if (!(exp_bs_ue > 0.0) || !(exp_bs_ris > 0.0) || !(exp_ris_ue > 0.0))
        throw std::invalid_argument("pathloss: exponents must be positive");
}

void CsiErrorModel::validate() const {
    if (!(delta >= 0.0)) throw std::invalid_argument("csi: delta must be nonnegative");
}

double pathloss(double d_m, LinkType link, const PathlossModel& model) {
    if (!(d_m > 0.0)) throw std::domain_error("pathloss: distance must be positive");
    double alpha = 0.0;
    switch (link) {
        case LinkType::bs_ue: alpha = model.exp_bs_ue; break;
        case LinkType::bs_ris: alpha = model.exp_bs_ris; break;
        case LinkType::ris_ue: alpha = model.exp_ris_ue; break;
    }
    return std::pow(10.0, model.pl0_db / 10.0) * std::pow(d_m / model.d0_m, -alpha);
}

Geometry build_geometry(std::uint64_t seed, const GeometrySpec& spec, int num_users) {
    int total = 0;
    for (const auto& c : spec.clusters) {
        if (!(c.radius >= 0.0))
            throw std::invalid_argument("geometry: cluster radius must be nonnegative");
        total += c.count;
    }
    if (total != num_users)
        throw std::invalid_argument("geometry: cluster counts do not sum to the user count");

    Geometry geo;
    geo.bs = spec.bs_positions;
    geo.ris = spec.ris_positions;
    geo.clusters = spec.clusters;
    geo.ue.reserve(num_users);

    Rng rng(seed_chain(seed, "geometry"));
    for (const auto& c : spec.clusters) {
        for (int i = 0; i < c.count; ++i) {
            const double r = c.radius * std::sqrt(rng.uniform());
            const double ang = kTwoPi * rng.uniform();
            geo.ue.emplace_back(c.center.x() + r * std::cos(ang),
                                c.center.y() + r * std::sin(ang), spec.ue_height);
        }
    }
    return geo;
}

ChannelRealization draw_channels(std::uint64_t seed, const Geometry& geometry,
                                 const PathlossModel& pl, const FadingModel& fading,
                                 const Dims& dims) {
    dims.validate();
    const auto [B, N, U, R, M, K] = dims;

    ChannelRealization ch;
    ch.dims = dims;
    ch.h.assign(B, std::vector<std::vector<Eigen::VectorXcd>>(
                       U, std::vector<Eigen::VectorXcd>(K, Eigen::VectorXcd(N))));
    ch.H.assign(B, std::vector<std::vector<Eigen::MatrixXcd>>(
                       R, std::vector<Eigen::MatrixXcd>(K, Eigen::MatrixXcd(M, N))));
    ch.g.assign(R, std::vector<std::vector<Eigen::VectorXcd>>(
                       U, std::vector<Eigen::VectorXcd>(K, Eigen::VectorXcd(M))));

    // Each link gets its own derived stream, so draw order is immaterial.
    for (int b = 0; b < B; ++b)
        for (int u = 0; u < U; ++u) {
            Rng rng(seed_chain(seed, "h", {std::uint64_t(b), std::uint64_t(u)}));
            const double gain = pathloss(distance(geometry.bs[b], geometry.ue[u]),
                                         LinkType::bs_ue, pl);
            for (int n = 0; n < N; ++n) {
                const Eigen::VectorXcd sc = draw_entry(rng, gain, fading, K);
                for (int k = 0; k < K; ++k) ch.h[b][u][k][n] = sc[k];
            }
        }

    for (int b = 0; b < B; ++b)
        for (int r = 0; r < R; ++r) {
            Rng rng(seed_chain(seed, "H", {std::uint64_t(b), std::uint64_t(r)}));
            const double gain = pathloss(distance(geometry.bs[b], geometry.ris[r]),
                                         LinkType::bs_ris, pl);
            for (int m = 0; m < M; ++m)
                for (int n = 0; n < N; ++n) {
                    const Eigen::VectorXcd sc = draw_entry(rng, gain, fading, K);
                    for (int k = 0; k < K; ++k) ch.H[b][r][k](m, n) = sc[k];
                }
        }

    for (int r = 0; r < R; ++r)
        for (int u = 0; u < U; ++u) {
            Rng rng(seed_chain(seed, "g", {std::uint64_t(r), std::uint64_t(u)}));
            const double gain = pathloss(distance(geometry.ris[r], geometry.ue[u]),
                                         LinkType::ris_ue, pl);
            for (int m = 0; m < M; ++m) {
                const Eigen::VectorXcd sc = draw_entry(rng, gain, fading, K);
                for (int k = 0; k < K; ++k) ch.g[r][u][k][m] = sc[k];
            }
        }

    return ch;
}

ChannelRealization perturb_csi(std::uint64_t seed, const ChannelRealization& channels,
                               const CsiErrorModel& err) {
    err.validate();
    ChannelRealization out = channels;
    if (err.delta == 0.0) return out;
    const auto [B, N, U, R, M, K] = channels.dims;

    Rng rng(seed_chain(seed, "csi"));
    for (int b = 0; b < B; ++b)
        for (int u = 0; u < U; ++u)
            for (int k = 0; k < K; ++k)
                for (int n = 0; n < N; ++n)
                    out.h[b][u][k][n] = noisy(rng, channels.h[b][u][k][n], err.delta);
    for (int b = 0; b < B; ++b)
        for (int r = 0; r < R; ++r)
            for (int k = 0; k < K; ++k)
                for (int m = 0; m < M; ++m)
                    for (int n = 0; n < N; ++n)
                        out.H[b][r][k](m, n) = noisy(rng, channels.H[b][r][k](m, n), err.delta);
    for (int r = 0; r < R; ++r)
        for (int u = 0; u < U; ++u)
            for (int k = 0; k < K; ++k)
                for (int m = 0; m < M; ++m)
                    out.g[r][u][k][m] = noisy(rng, channels.g[r][u][k][m], err.delta);
    return out;
}

LocalSample perturb_local(std::uint64_t seed, const ChannelRealization& channels, int b,
                          const CsiErrorModel& err) {
    err.validate();
    const auto [B, N, U, R, M, K] = channels.dims;
    if (b < 0 || b >= B) throw std::invalid_argument("channel: BS index out of range");

    LocalSample s;
    s.h.assign(U, std::vector<Eigen::VectorXcd>(K));
    s.H.assign(R, std::vector<Eigen::MatrixXcd>(K));
    s.g.assign(R, std::vector<std::vector<Eigen::VectorXcd>>(U, std::vector<Eigen::VectorXcd>(K)));

    Rng rng(seed_chain(seed, "csi-local", {std::uint64_t(b)}));
    const double delta = err.delta;
    for (int u = 0; u < U; ++u)
        for (int k = 0; k < K; ++k) {
            s.h[u][k] = channels.h[b][u][k];
            if (delta > 0.0)
                for (int n = 0; n < N; ++n) s.h[u][k][n] = noisy(rng, s.h[u][k][n], delta);
        }
    for (int r = 0; r < R; ++r)
        for (int k = 0; k < K; ++k) {
            s.H[r][k] = channels.H[b][r][k];
            if (delta > 0.0)
                for (int m = 0; m < M; ++m)
                    for (int n = 0; n < N; ++n) s.H[r][k](m, n) = noisy(rng, s.H[r][k](m, n), delta);
        }
    for (int r = 0; r < R; ++r)
        for (int u = 0; u < U; ++u)
            for (int k = 0; k < K; ++k) {
                s.g[r][u][k] = channels.g[r][u][k];
                if (delta > 0.0)
                    for (int m = 0; m < M; ++m) s.g[r][u][k][m] = noisy(rng, s.g[r][u][k][m], delta);
            }
    return s;
}

}  // namespace cellfree::channel
