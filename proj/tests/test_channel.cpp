#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "cellfree/channel.hpp"
#include "cellfree/rng.hpp"
#include "support/oracles.hpp"

using namespace cellfree;
using cplx = std::complex<double>;

namespace {

channel::GeometrySpec reference_spec(int B, int R) {
    channel::GeometrySpec spec;
    for (int b = 0; b < B; ++b) spec.bs_positions.emplace_back(50.0 * b, 0.0, 5.0);
    for (int r = 0; r < R; ++r) spec.ris_positions.emplace_back(65.0 + 20.0 * r, 60.0, 6.0);
    spec.clusters = {{Eigen::Vector2d(67.5, 57.5), 2.0, 2}, {Eigen::Vector2d(82.5, 57.5), 2.0, 2}};
    return spec;
}

}  // namespace

TEST_CASE("geometry uses the reference layout") {
    const auto spec = reference_spec(4, 2);
    const auto geo = channel::build_geometry(1, spec, 4);
    CHECK(geo.bs[1] == Eigen::Vector3d(50, 0, 5));
    CHECK(geo.bs[3] == Eigen::Vector3d(150, 0, 5));
    CHECK(geo.ris[0] == Eigen::Vector3d(65, 60, 6));
    CHECK(geo.ris[1] == Eigen::Vector3d(85, 60, 6));
    REQUIRE(geo.ue.size() == 4);
    for (int u = 0; u < 4; ++u) {
        const auto& c = spec.clusters[u / 2];
        CHECK(geo.ue[u].z() == 1.5);
        const double d = (geo.ue[u].head<2>() - c.center).norm();
        CHECK(d <= c.radius + 1e-12);
    }
}

TEST_CASE("zero-radius clusters collapse to the center") {
    auto spec = reference_spec(2, 1);
    spec.clusters[0].radius = 0.0;
    spec.clusters[1].radius = 0.0;
    const auto geo = channel::build_geometry(5, spec, 4);
    CHECK(geo.ue[0].head<2>() == spec.clusters[0].center);
    CHECK(geo.ue[3].head<2>() == spec.clusters[1].center);
}

TEST_CASE("geometry is deterministic per seed and validates counts") {
    const auto spec = reference_spec(2, 1);
    const auto a = channel::build_geometry(77, spec, 4);
    const auto b = channel::build_geometry(77, spec, 4);
    for (int u = 0; u < 4; ++u) CHECK(a.ue[u] == b.ue[u]);
    CHECK_THROWS_AS(channel::build_geometry(77, spec, 5), std::invalid_argument);
}

TEST_CASE("pathloss formula and monotonicity") {
    const channel::PathlossModel pl;
    CHECK(channel::pathloss(1.0, channel::LinkType::bs_ue, pl) == doctest::Approx(1e-3));
    CHECK(channel::pathloss(100.0, channel::LinkType::ris_ue, pl) ==
          doctest::Approx(std::pow(10.0, -7.4)).epsilon(1e-12));
    double prev = 1e9;
    for (double d : {1.0, 3.0, 10.0, 42.0, 150.0}) {
        const double g = channel::pathloss(d, channel::LinkType::bs_ris, pl);
        CHECK(g < prev);
        prev = g;
    }
    CHECK_THROWS_AS(channel::pathloss(0.0, channel::LinkType::bs_ue, pl), std::domain_error);
}

TEST_CASE("single tap gives flat fading across subcarriers") {
    const channel::Dims dims{1, 2, 1, 1, 3, 8};
    const auto spec = reference_spec(1, 1);
    auto geo = channel::build_geometry(3, spec, 4);
    geo.ue.resize(1);
    channel::FadingModel fading;
    fading.taps = 1;
    const auto ch = channel::draw_channels(9, geo, channel::PathlossModel{}, fading, dims);
    for (int k = 1; k < dims.K; ++k) {
        CHECK((ch.h[0][0][k] - ch.h[0][0][0]).norm() == 0.0);
        CHECK((ch.H[0][0][k] - ch.H[0][0][0]).norm() == 0.0);
        CHECK((ch.g[0][0][k] - ch.g[0][0][0]).norm() == 0.0);
    }
}

TEST_CASE("channel shapes and determinism") {
    const channel::Dims dims{2, 3, 2, 1, 5, 4};
    const auto spec = reference_spec(2, 1);
    const auto geo = channel::build_geometry(3, spec, 4);
    auto geo2 = geo;
    geo2.ue.resize(2);
    const auto a = channel::draw_channels(11, geo2, channel::PathlossModel{}, {}, dims);
    const auto b = channel::draw_channels(11, geo2, channel::PathlossModel{}, {}, dims);
    CHECK(a.h[1][1][3].size() == 3);
    CHECK(a.H[1][0][0].rows() == 5);
    CHECK(a.H[1][0][0].cols() == 3);
    CHECK(a.g[0][1][2].size() == 5);
    CHECK((a.h[1][1][3] - b.h[1][1][3]).norm() == 0.0);
    CHECK((a.H[0][0][1] - b.H[0][0][1]).norm() == 0.0);
    const auto c = channel::draw_channels(12, geo2, channel::PathlossModel{}, {}, dims);
    CHECK((a.h[1][1][3] - c.h[1][1][3]).norm() > 0.0);
}

TEST_CASE("energy accounting: entry variance equals the link pathloss gain") {
    const channel::Dims dims{1, 4, 1, 1, 16, 4};
    auto spec = reference_spec(1, 1);
    spec.clusters = {{Eigen::Vector2d(67.5, 57.5), 0.0, 1}};
    const auto geo = channel::build_geometry(2, spec, 1);
    const channel::PathlossModel pl;

    const double gain_h = channel::pathloss((geo.bs[0] - geo.ue[0]).norm(),
                                            channel::LinkType::bs_ue, pl);
    const double gain_H = channel::pathloss((geo.bs[0] - geo.ris[0]).norm(),
                                            channel::LinkType::bs_ris, pl);

    for (int taps : {1, 4}) {
        channel::FadingModel fading;
        fading.taps = taps;
        double acc_h = 0.0, acc_H = 0.0;
        long n_h = 0, n_H = 0;
        for (int trial = 0; trial < 400; ++trial) {
            const auto ch = channel::draw_channels(1000 + trial, geo, pl, fading, dims);
            for (int k = 0; k < dims.K; ++k) {
                acc_h += ch.h[0][0][k].squaredNorm();
                n_h += dims.N;
                acc_H += ch.H[0][0][k].squaredNorm();
                n_H += dims.M * dims.N;
            }
        }
        CHECK(acc_h / n_h == doctest::Approx(gain_h).epsilon(0.05));
        CHECK(acc_H / n_H == doctest::Approx(gain_H).epsilon(0.05));
    }
}

TEST_CASE("subcarrier correlation follows the tap power profile") {
    const channel::Dims dims{1, 1, 1, 1, 32, 8};
    auto spec = reference_spec(1, 1);
    spec.clusters = {{Eigen::Vector2d(67.5, 57.5), 0.0, 1}};
    const auto geo = channel::build_geometry(2, spec, 1);
    channel::FadingModel fading;
    fading.taps = 2;

    // E[H_k conj(H_{k+d})] / gain = (1/L) sum_l exp(-j 2 pi d l / K)
    const int d = 2;
    cplx acc = 0.0;
    double norm_acc = 0.0;
    for (int trial = 0; trial < 1500; ++trial) {
        const auto ch =
            channel::draw_channels(50 + trial, geo, channel::PathlossModel{}, fading, dims);
        for (int m = 0; m < dims.M; ++m)
            for (int k = 0; k + d < dims.K; ++k) {
                acc += ch.g[0][0][k][m] * std::conj(ch.g[0][0][k + d][m]);
                norm_acc += std::norm(ch.g[0][0][k][m]);
            }
    }
    const cplx want =
        0.5 * (1.0 + std::exp(cplx(0.0, oracles::kTwoPi * d * 1.0 / dims.K)));
    const cplx got = acc / norm_acc;
    CHECK(std::abs(got - want) < 0.05);
}

TEST_CASE("csi perturbation matches its variance model") {
    const channel::Dims dims{2, 2, 2, 1, 24, 8};
    const auto spec = reference_spec(2, 1);
    auto geo = channel::build_geometry(4, spec, 4);
    geo.ue.resize(2);
    const auto ch = channel::draw_channels(21, geo, channel::PathlossModel{}, {}, dims);

    SUBCASE("delta zero is the identity") {
        const auto out = channel::perturb_csi(5, ch, {0.0});
        CHECK((out.g[0][1][3] - ch.g[0][1][3]).norm() == 0.0);
        CHECK((out.H[1][0][7] - ch.H[1][0][7]).norm() == 0.0);
    }

    SUBCASE("relative error variance approaches delta") {
        const channel::CsiErrorModel err{0.2};
        double num = 0.0, den = 0.0;
        for (int trial = 0; trial < 120; ++trial) {
            const auto out = channel::perturb_csi(900 + trial, ch, err);
            for (int r = 0; r < dims.R; ++r)
                for (int u = 0; u < dims.U; ++u)
                    for (int k = 0; k < dims.K; ++k)
                        for (int m = 0; m < dims.M; ++m) {
                            num += std::norm(out.g[r][u][k][m] - ch.g[r][u][k][m]);
                            den += std::norm(ch.g[r][u][k][m]);
                        }
        }
        CHECK(num / den == doctest::Approx(0.2).epsilon(0.05));
    }

    SUBCASE("errors on distinct entries are uncorrelated") {
        const channel::CsiErrorModel err{0.2};
        cplx acc = 0.0;
        double scale = 0.0;
        long n = 0;
        for (int trial = 0; trial < 400; ++trial) {
            const auto out = channel::perturb_csi(3000 + trial, ch, err);
            for (int k = 0; k < dims.K; ++k)
                for (int m = 0; m + 1 < dims.M; m += 2) {
                    const cplx e1 = out.g[0][0][k][m] - ch.g[0][0][k][m];
                    const cplx e2 = out.g[0][0][k][m + 1] - ch.g[0][0][k][m + 1];
                    acc += e1 * std::conj(e2);
                    scale += 0.5 * (std::norm(e1) + std::norm(e2));
                    ++n;
                }
        }
        // 3 sigma bound on the normalized sample cross-moment
        CHECK(std::abs(acc) / scale <= 3.0 / std::sqrt(static_cast<double>(n)));
    }

    SUBCASE("shapes preserved, all entries finite") {
        const auto out = channel::perturb_csi(77, ch, {0.5});
        for (int b = 0; b < dims.B; ++b)
            for (int u = 0; u < dims.U; ++u)
                for (int k = 0; k < dims.K; ++k) {
                    REQUIRE(out.h[b][u][k].size() == dims.N);
                    CHECK(out.h[b][u][k].allFinite());
                }
    }
}

TEST_CASE("per-BS local samples differ across BSs but share the truth") {
    const channel::Dims dims{2, 2, 2, 1, 4, 2};
    const auto spec = reference_spec(2, 1);
    auto geo = channel::build_geometry(4, spec, 4);
    geo.ue.resize(2);
    const auto ch = channel::draw_channels(21, geo, channel::PathlossModel{}, {}, dims);

    const auto s0 = channel::perturb_local(123, ch, 0, {0.2});
    const auto s0b = channel::perturb_local(123, ch, 0, {0.2});
    const auto s1 = channel::perturb_local(123, ch, 1, {0.2});
    CHECK((s0.g[0][0][0] - s0b.g[0][0][0]).norm() == 0.0);   // deterministic
    CHECK((s0.g[0][0][0] - s1.g[0][0][0]).norm() > 0.0);     // independent noise per BS
    CHECK((s0.h[1][1] - ch.h[0][1][1]).norm() > 0.0);
    CHECK((s0.h[1][1] - ch.h[0][1][1]).norm() <
          (ch.h[0][1][1]).norm());  // perturbation, not replacement
}
