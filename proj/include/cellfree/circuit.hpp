#pragma once

#include <Eigen/Dense>
#include <complex>

namespace cellfree::circuit {

// Equivalent-circuit constants of one RIS unit element: a resistor R0, a
// tunable capacitor and two inductors L1, L2 in parallel, terminated on a
// medium of characteristic impedance zeta0. Capacitors are constrained to
// [c_min, c_max]. SI units throughout (henry, ohm, farad).
struct CircuitParams {
    double l1 = 1.7143e-9;
    double l2 = 0.48e-9;
    double r0 = 1.0;
    double zeta0 = 50.0;
    double c_min = 0.01e-12;
    double c_max = 3.0e-12;

    void validate() const;
    double c_mid() const { return 0.5 * (c_min + c_max); }
};

// Tunable capacitances of all R*M elements, RIS-major then element, in farad.
struct CapacitorVector {
    Eigen::VectorXd values;

    void validate(const CircuitParams& params) const;
    static CapacitorVector midpoint(int count, const CircuitParams& params);
};

// Characteristic impedance Z(f, c) of the element circuit.
std::complex<double> impedance(double f_hz, double c_farad, const CircuitParams& params);

// Reflection coefficient (Z - zeta0) / (Z + zeta0). |result| <= 1 for r0 >= 0.
std::complex<double> reflection(double f_hz, double c_farad, const CircuitParams& params);

// d(reflection)/dc in 1/farad, from the closed-form quotient derivative of
// the numerator/denominator of Z.
std::complex<double> reflection_derivative(double f_hz, double c_farad,
                                           const CircuitParams& params);

// Diagonal of the block reflection matrix at one subcarrier frequency:
// entry n is reflection(f_hz, caps[n]).
Eigen::VectorXcd build_phi(double f_hz, const CapacitorVector& caps,
                           const CircuitParams& params);

struct CalibrationResult {
    double c_farad;    // best capacitance in [c_min, c_max]
    double residual;   // |reflection(f, c) - target| at the minimizer
};

// Best-in-box inversion of the reflection response: grid scan plus
// golden-section refinement of |reflection(f, c) - target|^2.
CalibrationResult calibrate_capacitor(std::complex<double> target, double f_hz,
                                      const CircuitParams& params);

}  // namespace cellfree::circuit
