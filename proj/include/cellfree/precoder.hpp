#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "cellfree/model.hpp"

namespace cellfree::precoder {

// One BS's (U x K) slice of vectors.
using Slice = std::vector<std::vector<Eigen::VectorXcd>>;

Slice zero_slice(int U, int K, int N);

// Coefficients of the concave per-(u,k) rate surrogate, all evaluated at the
// current iterate:
//   c = |beta|^2 / (ln2 * alpha * (alpha - |beta|^2))
//   e = beta / (ln2 * (alpha - |beta|^2))
//   alpha = mui + |beta|^2
struct SurrogateCoeffs {
    Eigen::MatrixXd alpha;   // U x K
    Eigen::MatrixXcd beta;   // U x K
    Eigen::MatrixXd c_coef;  // U x K
    Eigen::MatrixXcd e_coef; // U x K
};

SurrogateCoeffs surrogate_coeffs(const model::LinkStats& stats, double noise_var);

// Gradient of the other users' rates with respect to w_{b,u,k} (conjugate
// convention), assembled from scalar feedback plus BS b's own channels.
Eigen::VectorXcd pricing_w(const model::LinkStats& stats, const Slice& f_b, const Slice& w_b,
                           int b, int u, int k);

// Gradient of user u's own rate with respect to w_{b,u,k}, the sampled-rate
// term of the accumulation recursion.
Eigen::VectorXcd own_grad_w(const model::LinkStats& stats, const Slice& f_b, const Slice& w_b,
                            int b, int u, int k);

// d <- (1 - rho) d + rho (pricing + own gradient)
Eigen::VectorXcd accum_w_update(const Eigen::VectorXcd& d_prev, const Eigen::VectorXcd& pricing,
                                const Eigen::VectorXcd& own_grad, double rho);

// Hermitian quadratic form of one (u,k) subproblem: the best response
// maximizes -w^H Q w + Re{q^H w} subject to the shared power budget.
struct Subproblem {
    Eigen::MatrixXcd Q;
    Eigen::VectorXcd q;
};

// Q = rho*c * f f^H + (tau/2) I
// q = 2*rho*(e - c*r) f + rho*pricing + (1-rho)*d + tau*w_prev
// With printed_scaling the linear surrogate term drops its rho factor; kept
// selectable for comparison, the scaled form matches the surrogate objective.
Subproblem assemble_subproblem(double c_coef, std::complex<double> e_coef,
                               std::complex<double> r_own, const Eigen::VectorXcd& pricing,
                               const Eigen::VectorXcd& d_w, const Eigen::VectorXcd& w_prev,
                               const Eigen::VectorXcd& f, double rho, double tau,
                               bool printed_scaling = false);

// w = (1/2) (Q + lambda I)^{-1} q
Eigen::VectorXcd solve_precoder(const Eigen::MatrixXcd& Q, const Eigen::VectorXcd& q,
                                double lambda);

struct PowerSolution {
    double lambda = 0.0;
    std::vector<Eigen::VectorXcd> w;  // flattened (u, k) order matching the input
    double power = 0.0;
};

// Waterfilling-style multiplier search: lambda = 0 when the unconstrained
// solution fits the budget, otherwise bracketing + bisection until the total
// power matches p_max within rel_tol.
PowerSolution bisect_power(const std::vector<Subproblem>& subproblems, double p_max,
                           double rel_tol = 1e-8);

// Value of the local surrogate objective for one BS slice (used by the
// monotonicity audit): sum over (u,k) of
//   rho*(-c |f^H w + r|^2-style quadratic written in local form)
//   + rho<pi, w - w_prev> + (1-rho)<d, w - w_prev> - tau/2 ||w - w_prev||^2.
struct SurrogateTerms {
    double c_coef;
    std::complex<double> e_coef;
    std::complex<double> r_own;
    Eigen::VectorXcd pricing;
    Eigen::VectorXcd d_w;
    Eigen::VectorXcd w_prev;
    Eigen::VectorXcd f;
};

double surrogate_value(const std::vector<SurrogateTerms>& terms,
                       const std::vector<Eigen::VectorXcd>& w, double rho, double tau);

}  // namespace cellfree::precoder
