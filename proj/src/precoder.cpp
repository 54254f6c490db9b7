#include "cellfree/precoder.hpp"

#include <cmath>
#include <stdexcept>

namespace cellfree::precoder {

namespace {
constexpr double kLn2 = 0.6931471805599453094172321;
}

Slice zero_slice(int U, int K, int N) {
    return Slice(U, std::vector<Eigen::VectorXcd>(K, Eigen::VectorXcd::Zero(N)));
}

SurrogateCoeffs surrogate_coeffs(const model::LinkStats& stats, double noise_var) {
    const int U = stats.U, K = stats.K;
    SurrogateCoeffs sc;
    sc.alpha.resize(U, K);
    sc.beta = stats.beta;
    sc.c_coef.resize(U, K);
    sc.e_coef.resize(U, K);
    for (int u = 0; u < U; ++u)
        for (int k = 0; k < K; ++k) {
            const std::complex<double> beta = stats.beta(u, k);
            const double b2 = std::norm(beta);
            const double alpha = stats.mui(u, k) + b2;
            const double gap = alpha - b2;  // equals mui, > 0 since sigma^2 > 0
            if (!(gap > 1e-30))
                throw std::runtime_error("precoder: degenerate surrogate, alpha - |beta|^2 ~ 0");
            sc.alpha(u, k) = alpha;
            sc.c_coef(u, k) = b2 / (kLn2 * alpha * gap);
            sc.e_coef(u, k) = beta / (kLn2 * gap);
        }
    (void)noise_var;
    return sc;
}

Eigen::VectorXcd pricing_w(const model::LinkStats& stats, const Slice& f_b, const Slice& w_b,
                           int b, int u, int k) {
    Eigen::VectorXcd pi = Eigen::VectorXcd::Zero(f_b[u][k].size());
    for (int q = 0; q < stats.U; ++q) {
        if (q == u) continue;
        const std::complex<double> lever =
            f_b[q][k].dot(w_b[u][k]) + stats.r_cross(b, q, u, k);
        const double scale = stats.snr(q, k) / ((1.0 + stats.snr(q, k)) * stats.mui(q, k));
        pi -= (scale / kLn2) * lever * f_b[q][k];
    }
    return pi;
}

Eigen::VectorXcd own_grad_w(const model::LinkStats& stats, const Slice& f_b, const Slice& w_b,
                            int b, int u, int k) {
    const std::complex<double> lever = f_b[u][k].dot(w_b[u][k]) + stats.r_cross(b, u, u, k);
    const double scale = 1.0 / ((1.0 + stats.snr(u, k)) * stats.mui(u, k));
    return (scale / kLn2) * lever * f_b[u][k];
}

Eigen::VectorXcd accum_w_update(const Eigen::VectorXcd& d_prev, const Eigen::VectorXcd& pricing,
                                const Eigen::VectorXcd& own_grad, double rho) {
    return (1.0 - rho) * d_prev + rho * (pricing + own_grad);
}

Subproblem assemble_subproblem(double c_coef, std::complex<double> e_coef,
                               std::complex<double> r_own, const Eigen::VectorXcd& pricing,
                               const Eigen::VectorXcd& d_w, const Eigen::VectorXcd& w_prev,
                               const Eigen::VectorXcd& f, double rho, double tau,
                               bool printed_scaling) {
    if (!(tau > 0.0)) throw std::invalid_argument("precoder: tau must be positive");
    const Eigen::Index n = f.size();
    Subproblem sp;
    sp.Q = rho * c_coef * (f * f.adjoint());
    sp.Q += (0.5 * tau) * Eigen::MatrixXcd::Identity(n, n);
    const double lin_scale = printed_scaling ? 1.0 : rho;
    sp.q = 2.0 * lin_scale * (e_coef - c_coef * r_own) * f + rho * pricing +
           (1.0 - rho) * d_w + tau * w_prev;
    return sp;
}

Eigen::VectorXcd solve_precoder(const Eigen::MatrixXcd& Q, const Eigen::VectorXcd& q,
                                double lambda) {
    Eigen::MatrixXcd A = Q;
    A.diagonal().array() += lambda;
    Eigen::LDLT<Eigen::MatrixXcd> ldlt(A);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("precoder: singular system in closed-form solve");
    return 0.5 * ldlt.solve(q);
}

PowerSolution bisect_power(const std::vector<Subproblem>& subproblems, double p_max,
                           double rel_tol) {
    if (!(p_max > 0.0)) throw std::invalid_argument("precoder: p_max must be positive");

    // Q = V diag(ev) V^H once per subproblem; then
    //   w(lambda) = (1/2) V diag(1/(ev + lambda)) V^H q
    //   ||w(lambda)||^2 = (1/4) sum_i |(V^H q)_i|^2 / (ev_i + lambda)^2,
    // strictly decreasing in lambda.
    struct Eig {
        Eigen::VectorXd ev;
        Eigen::MatrixXcd V;
        Eigen::VectorXcd vq;
    };
    std::vector<Eig> eigs;
    eigs.reserve(subproblems.size());
    for (const auto& sp : subproblems) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sp.Q);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("precoder: eigendecomposition failed");
        eigs.push_back({es.eigenvalues(), es.eigenvectors(),
                        es.eigenvectors().adjoint() * sp.q});
    }

    const auto power_at = [&](double lambda) {
        double p = 0.0;
        for (const auto& e : eigs)
            for (Eigen::Index i = 0; i < e.ev.size(); ++i) {
                const double den = e.ev[i] + lambda;
                p += 0.25 * std::norm(e.vq[i]) / (den * den);
            }
        return p;
    };
    const auto solution_at = [&](double lambda) {
        std::vector<Eigen::VectorXcd> w;
        w.reserve(eigs.size());
        for (const auto& e : eigs) {
            Eigen::VectorXcd scaled = e.vq;
            for (Eigen::Index i = 0; i < e.ev.size(); ++i) scaled[i] /= (e.ev[i] + lambda);
            w.push_back(0.5 * (e.V * scaled));
        }
        return w;
    };

    PowerSolution out;
    const double p0 = power_at(0.0);
    if (p0 <= p_max) {
        out.lambda = 0.0;
        out.w = solution_at(0.0);
        out.power = p0;
        return out;
    }

    double lo = 0.0, hi = 1.0;
    while (power_at(hi) > p_max) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e30) throw std::runtime_error("precoder: power bracket diverged");
    }
    const double tol = rel_tol * p_max;
    double lambda = 0.5 * (lo + hi);
    for (int it = 0;; ++it) {
        if (it >= 200)
            throw std::runtime_error("precoder: bisection failed to converge in 200 steps");
        lambda = 0.5 * (lo + hi);
        const double p = power_at(lambda);
        if (std::abs(p - p_max) <= tol) break;
        if (p > p_max)
            lo = lambda;
        else
            hi = lambda;
    }
    out.lambda = lambda;
    out.w = solution_at(lambda);
    out.power = power_at(lambda);
    return out;
}

double surrogate_value(const std::vector<SurrogateTerms>& terms,
                       const std::vector<Eigen::VectorXcd>& w, double rho, double tau) {
    double val = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto& t = terms[i];
        const Eigen::VectorXcd dw = w[i] - t.w_prev;
        const std::complex<double> fw = t.f.dot(w[i]);  // f^H w
        val += rho * (-t.c_coef * std::norm(fw) +
                      2.0 * std::real(std::conj(t.e_coef - t.c_coef * t.r_own) * fw));
        val += rho * std::real(t.pricing.dot(dw));      // <pi, w - w_prev>
        val += (1.0 - rho) * std::real(t.d_w.dot(dw));
        val -= 0.5 * tau * dw.squaredNorm();
    }
    return val;
}

}  // namespace cellfree::precoder
