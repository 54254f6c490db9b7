#include "cellfree/circuit.hpp"

#include <cmath>
#include <stdexcept>

namespace cellfree::circuit {

namespace {

constexpr double kTwoPi = 6.283185307179586476925287;
constexpr double kPoleThreshold = 1e-30;

using cplx = std::complex<double>;

struct RationalZ {
    cplx num;  // N(f, c)
    cplx den;  // D(f, c), Z = N / D
};

// N = j*k*f*L1 * (j*k*f*L2 + R0 + 1/(j*k*f*c))
// D = j*k*f*(L1 + L2) + R0 + 1/(j*k*f*c)
RationalZ impedance_parts(double f, double c, const CircuitParams& p) {
    const double kf = kTwoPi * f;
    const cplx jkf(0.0, kf);
    const cplx cap_term = 1.0 / (jkf * c);
    return {jkf * p.l1 * (jkf * p.l2 + p.r0 + cap_term),
            jkf * (p.l1 + p.l2) + p.r0 + cap_term};
}

void check_inputs(double f, double c) {
    if (!(f > 0.0)) throw std::invalid_argument("circuit: frequency must be positive");
    if (!(c > 0.0)) throw std::invalid_argument("circuit: capacitance must be positive");
}

}  // namespace

void CircuitParams::validate() const {
    if (!(l1 > 0.0)) throw std::invalid_argument("circuit: L1 must be positive");
    if (!(l2 >= 0.0)) throw std::invalid_argument("circuit: L2 must be nonnegative");
    if (!(r0 >= 0.0)) throw std::invalid_argument("circuit: R0 must be nonnegative");
    if (!(zeta0 > 0.0)) throw std::invalid_argument("circuit: zeta0 must be positive");
    if (!(c_min > 0.0) || !(c_min < c_max))
        throw std::invalid_argument("circuit: capacitor box requires 0 < c_min < c_max");
}

void CapacitorVector::validate(const CircuitParams& params) const {
    for (Eigen::Index n = 0; n < values.size(); ++n) {
        const double c = values[n];
        if (!(c >= params.c_min && c <= params.c_max))
            throw std::invalid_argument("circuit: capacitor outside [c_min, c_max]");
    }
}

CapacitorVector CapacitorVector::midpoint(int count, const CircuitParams& params) {
    return {Eigen::VectorXd::Constant(count, params.c_mid())};
}

std::complex<double> impedance(double f_hz, double c_farad, const CircuitParams& params) {
    check_inputs(f_hz, c_farad);
    const auto [num, den] = impedance_parts(f_hz, c_farad, params);
    if (std::abs(den) < kPoleThreshold)
        throw std::domain_error("circuit: impedance evaluated at a resonance pole");
    return num / den;
}

std::complex<double> reflection(double f_hz, double c_farad, const CircuitParams& params) {
    check_inputs(f_hz, c_farad);
    const auto [num, den] = impedance_parts(f_hz, c_farad, params);
    if (std::abs(den) < kPoleThreshold)
        throw std::domain_error("circuit: impedance evaluated at a resonance pole");
    const cplx gden = num + params.zeta0 * den;  // zero exactly when Z = -zeta0
    if (std::abs(gden) < kPoleThreshold)
        throw std::domain_error("circuit: reflection undefined, Z = -zeta0");
    return (num - params.zeta0 * den) / gden;
}

std::complex<double> reflection_derivative(double f_hz, double c_farad,
                                           const CircuitParams& params) {
    check_inputs(f_hz, c_farad);
    const auto [num, den] = impedance_parts(f_hz, c_farad, params);
    const double kf = kTwoPi * f_hz;
    const double c2 = c_farad * c_farad;
    const cplx dnum(-params.l1 / c2, 0.0);     // dN/dc
    const cplx dden(0.0, 1.0 / (kf * c2));     // dD/dc
    const cplx gden = num + params.zeta0 * den;
    if (std::abs(gden) < kPoleThreshold)
        throw std::domain_error("circuit: reflection derivative undefined, Z = -zeta0");
    return 2.0 * params.zeta0 * (dnum * den - num * dden) / (gden * gden);
}

Eigen::VectorXcd build_phi(double f_hz, const CapacitorVector& caps,
                           const CircuitParams& params) {
    Eigen::VectorXcd phi(caps.values.size());
    for (Eigen::Index n = 0; n < caps.values.size(); ++n)
        phi[n] = reflection(f_hz, caps.values[n], params);
    return phi;
}

CalibrationResult calibrate_capacitor(std::complex<double> target, double f_hz,
                                      const CircuitParams& params) {
    if (!(std::abs(target) <= 1.0 + 1e-9))
        throw std::invalid_argument("circuit: calibration target must lie in the unit disc");

    const auto dist2 = [&](double c) {
        const cplx d = reflection(f_hz, c, params) - target;
        return std::norm(d);
    };

    constexpr int kGridPoints = 512;
    const double span = params.c_max - params.c_min;
    const double step = span / (kGridPoints - 1);

    int best = 0;
    double best_val = dist2(params.c_min);
    for (int i = 1; i < kGridPoints; ++i) {
        const double v = dist2(params.c_min + i * step);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }

    // Golden-section refinement inside the bracketing grid cells.
    double lo = params.c_min + std::max(0, best - 1) * step;
    double hi = params.c_min + std::min(kGridPoints - 1, best + 1) * step;
    const double tol = 1e-4 * span;
    const double inv_phi = 0.6180339887498948482;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = dist2(x1);
    double f2 = dist2(x2);
    while (hi - lo > tol) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = dist2(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = dist2(x2);
        }
    }
    const double c_star = 0.5 * (lo + hi);
    const double v_star = dist2(c_star);
    if (best_val < v_star)
        return {params.c_min + best * step, std::sqrt(best_val)};
    return {c_star, std::sqrt(v_star)};
}

}  // namespace cellfree::circuit
