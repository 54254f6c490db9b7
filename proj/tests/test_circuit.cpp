#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "cellfree/circuit.hpp"
#include "cellfree/rng.hpp"
#include "support/oracles.hpp"

using namespace cellfree;
using oracles::raw_impedance;
using oracles::raw_impedance_parts;
using oracles::raw_reflection;
using cplx = std::complex<double>;

namespace {
const circuit::CircuitParams kRef{};  // reference scenario values
}

TEST_CASE("lossless circuit is purely reactive") {
    circuit::CircuitParams p = kRef;
    p.r0 = 0.0;
    for (double f : {3.4e9, 3.5e9, 3.62e9})
        for (double c : {0.02e-12, 0.8e-12, 2.9e-12}) {
            const cplx z = circuit::impedance(f, c, p);
            CHECK(std::abs(z.real()) < 1e-9 * std::abs(z));
        }
}

TEST_CASE("parallel LC resonance drives |Z| up near 1/(2*pi*sqrt(L1*c))") {
    circuit::CircuitParams p = kRef;
    p.l2 = 0.0;
    p.r0 = 0.0;
    p.l1 = 1e-9;
    const double c = 1e-12;
    const double f_res = 1.0 / (oracles::kTwoPi * std::sqrt(p.l1 * c));
    CHECK(f_res == doctest::Approx(5.033e9).epsilon(1e-3));
    double prev = 0.0;
    for (double eps : {1e-2, 1e-3, 1e-4, 1e-5}) {
        const double mag = std::abs(circuit::impedance(f_res * (1.0 + eps), c, p));
        CHECK(mag > prev);
        prev = mag;
    }
    CHECK(prev > 1e5);
}

TEST_CASE("reference values match the term-by-term oracle") {
    const cplx z = circuit::impedance(3.5e9, 1e-12, kRef);
    const cplx z_oracle = raw_impedance(3.5e9, 1e-12, kRef);
    CHECK(std::abs(z - z_oracle) <= 1e-9 * std::abs(z_oracle));
    // frozen oracle output for this exact input
    CHECK(z.real() == doctest::Approx(162.58807115).epsilon(1e-9));
    CHECK(z.imag() == doctest::Approx(-414.675288256).epsilon(1e-9));
}

TEST_CASE("reflection equals (Z - zeta0)/(Z + zeta0) and respects passivity") {
    // matched-load anchor of the oracle map
    CHECK(oracles::reflect_from_z(cplx(kRef.zeta0, 0.0), kRef.zeta0) == cplx(0.0, 0.0));

    double worst = 0.0;
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
            const double f = 3.45e9 + 0.1e9 * i / 15.0;
            const double c = 0.01e-12 + (3.0e-12 - 0.01e-12) * j / 15.0;
            const cplx got = circuit::reflection(f, c, kRef);
            const cplx want = raw_reflection(f, c, kRef);
            CHECK(std::abs(got) <= 1.0 + 1e-12);
            worst = std::max(worst, std::abs(got - want));
            // algebraic identity against raw numerator/denominator
            const auto [num, den] = raw_impedance_parts(f, c, kRef);
            const cplx alg = (num - kRef.zeta0 * den) / (num + kRef.zeta0 * den);
            CHECK(std::abs(got - alg) <= 1e-14 * std::max(1.0, std::abs(alg)));
        }
    CHECK(worst <= 1e-12);
}

TEST_CASE("lossless reflection has unit modulus") {
    circuit::CircuitParams p = kRef;
    p.r0 = 0.0;
    Rng rng(42);
    for (int i = 0; i < 200; ++i) {
        const double f = rng.uniform(3.0e9, 4.0e9);
        const double c = rng.uniform(p.c_min, p.c_max);
        CHECK(std::abs(std::abs(circuit::reflection(f, c, p)) - 1.0) <= 1e-12);
    }
}

TEST_CASE("passivity over a dense grid") {
    for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 100; ++j) {
            const double f = 3.3e9 + 0.4e9 * i / 99.0;
            const double c = kRef.c_min + (kRef.c_max - kRef.c_min) * j / 99.0;
            CHECK(std::abs(circuit::reflection(f, c, kRef)) <= 1.0 + 1e-15);
        }
}

TEST_CASE("reflection derivative matches central differences") {
    Rng rng(7);
    for (int i = 0; i < 100; ++i) {
        const double f = rng.uniform(3.4e9, 3.6e9);
        const double c = rng.uniform(0.05e-12, 2.9e-12);
        const double h = 1e-6 * c;
        const cplx fd =
            (circuit::reflection(f, c + h, kRef) - circuit::reflection(f, c - h, kRef)) /
            (2.0 * h);
        const cplx an = circuit::reflection_derivative(f, c, kRef);
        CHECK(std::abs(an - fd) <= 1e-6 * std::abs(fd));
    }
}

TEST_CASE("lossless |reflection|^2 is flat in c") {
    circuit::CircuitParams p = kRef;
    p.r0 = 0.0;
    const cplx g = circuit::reflection(3.5e9, 1e-12, p);
    const cplx dg = circuit::reflection_derivative(3.5e9, 1e-12, p);
    // d|g|^2/dc = 2 Re{conj(g) dg} = 0 when |g| is identically 1
    CHECK(std::abs(2.0 * std::real(std::conj(g) * dg)) <= 1e-9 * std::abs(dg));
}

TEST_CASE("derivative scales with the capacitance unit") {
    const cplx per_farad = circuit::reflection_derivative(3.5e9, 1e-12, kRef);
    // picofarad parametrization: dG/dc_pF = dG/dc_F * 1e-12
    const cplx per_pf = per_farad * 1e-12;
    const double h_pf = 1e-6;  // pF
    const cplx fd = (circuit::reflection(3.5e9, (1.0 + h_pf) * 1e-12, kRef) -
                     circuit::reflection(3.5e9, (1.0 - h_pf) * 1e-12, kRef)) /
                    (2.0 * h_pf);
    CHECK(std::abs(per_pf - fd) <= 1e-6 * std::abs(fd));
}

TEST_CASE("build_phi stacks per-element reflections") {
    circuit::CapacitorVector one{Eigen::VectorXd::Constant(1, 1e-12)};
    const Eigen::VectorXcd phi1 = circuit::build_phi(3.5e9, one, kRef);
    REQUIRE(phi1.size() == 1);
    CHECK(phi1[0] == circuit::reflection(3.5e9, 1e-12, kRef));

    circuit::CapacitorVector equal{Eigen::VectorXd::Constant(6, 0.7e-12)};
    const Eigen::VectorXcd phi6 = circuit::build_phi(3.5e9, equal, kRef);
    for (int n = 1; n < 6; ++n) CHECK(phi6[n] == phi6[0]);
}

TEST_CASE("midpoint capacitors respond differently across the subcarrier grid") {
    const int K = 16;
    circuit::CapacitorVector caps = circuit::CapacitorVector::midpoint(4, kRef);
    double max_diff = 0.0;
    cplx first;
    for (int k = 1; k <= K; ++k) {
        const double fk = 3.5e9 + (k - 0.5 * (K + 1)) * 100e6 / K;
        const cplx v = circuit::build_phi(fk, caps, kRef)[0];
        if (k == 1)
            first = v;
        else
            max_diff = std::max(max_diff, std::abs(v - first));
    }
    CHECK(max_diff > 1e-4);  // frequency selectivity is nonzero
}

TEST_CASE("calibration round-trips reachable targets") {
    for (double c_true : {0.3e-12, 1.1e-12, 2.4e-12}) {
        const cplx target = circuit::reflection(3.5e9, c_true, kRef);
        const auto cal = circuit::calibrate_capacitor(target, 3.5e9, kRef);
        CHECK(std::abs(cal.c_farad - c_true) <= 1e-3 * c_true);
        CHECK(cal.residual <= 1e-6);

        // idempotence: re-calibrating to the achieved response is stable
        const cplx achieved = circuit::reflection(3.5e9, cal.c_farad, kRef);
        const auto again = circuit::calibrate_capacitor(achieved, 3.5e9, kRef);
        CHECK(std::abs(again.c_farad - cal.c_farad) <=
              1e-3 * (kRef.c_max - kRef.c_min));
    }
}

TEST_CASE("lossy elements cannot reach unit-modulus targets") {
    const auto cal = circuit::calibrate_capacitor(cplx(0.0, 1.0), 3.5e9, kRef);
    CHECK(cal.residual > 0.0);
}

TEST_CASE("calibrating to zero matches a dense scan") {
    const auto cal = circuit::calibrate_capacitor(cplx(0.0, 0.0), 3.5e9, kRef);
    double best = 1e300;
    for (int i = 0; i < 20000; ++i) {
        const double c = kRef.c_min + (kRef.c_max - kRef.c_min) * i / 19999.0;
        best = std::min(best, std::abs(circuit::reflection(3.5e9, c, kRef)));
    }
    CHECK(cal.residual <= best + 1e-9);
    CHECK(cal.residual >= best - 1e-9);
}

TEST_CASE("input contracts") {
    CHECK_THROWS_AS(circuit::impedance(0.0, 1e-12, kRef), std::invalid_argument);
    CHECK_THROWS_AS(circuit::impedance(3.5e9, -1e-12, kRef), std::invalid_argument);
    CHECK_THROWS_AS(circuit::calibrate_capacitor(cplx(2.0, 0.0), 3.5e9, kRef),
                    std::invalid_argument);

    circuit::CircuitParams bad = kRef;
    bad.c_min = bad.c_max;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    // denominator collapses: tiny inductance and a huge capacitor push |D|
    // below the pole threshold
    circuit::CircuitParams degenerate = kRef;
    degenerate.l1 = 1e-40;
    degenerate.l2 = 0.0;
    degenerate.r0 = 0.0;
    CHECK_THROWS_AS(circuit::impedance(1.0, 1e40, degenerate), std::domain_error);
}
