#pragma once

#include <Eigen/Dense>

#include <string>
#include <utility>

#include "cmpc/continuation.hpp"
#include "cmpc/errors.hpp"
#include "cmpc/ocp.hpp"

namespace cmpc {

struct NewtonOptions {
    double tol = 1e-10;   ///< convergence threshold on |zeta|
    int max_iter = 50;
    double fd_base = 1e-5;
    double min_step = 1e-8;  ///< backtracking cutoff
};

struct NewtonResult {
    Eigen::VectorXd U;
    int iterations = 0;
    double residual = 0.0;
    Eigen::MatrixXd H;  ///< Hessian at the solution (reusable by callers)
};

/// Damped Newton iteration on zeta(U,x,t) = 0: U <- U - a H^{-1} zeta with
/// backtracking halving of a until |zeta| decreases. Under strong convexity
/// the solution U*(x,t) is unique; positive definiteness of H is enforced at
/// the solution as well, so degenerate costs (every point stationary) are
/// rejected rather than reported as optima.
inline NewtonResult solve_ustar_info(const OcpSpec& spec, const Eigen::VectorXd& x, double t,
                                     const Eigen::VectorXd& U_init,
                                     const NewtonOptions& opts = {}) {
    Eigen::VectorXd U = U_init;
    Eigen::VectorXd g = zeta(spec, U, x, t);
    double res = g.norm();
    for (int it = 0; it < opts.max_iter; ++it) {
        if (res <= opts.tol) {
            return {U, it, res, hessian_H(spec, U, x, t, {opts.fd_base, true})};
        }
        const Eigen::MatrixXd H = hessian_H(spec, U, x, t, {opts.fd_base, false});
        Eigen::LLT<Eigen::MatrixXd> llt(H);
        if (llt.info() != Eigen::Success) {
            const double lmin =
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues().minCoeff();
            throw AssumptionViolation(
                "Newton iterate hit a non-positive-definite H (min eigenvalue " +
                    std::to_string(lmin) + ")",
                lmin, t);
        }
        const Eigen::VectorXd p = llt.solve(g);
        double a = 1.0;
        Eigen::VectorXd U_next;
        Eigen::VectorXd g_next;
        double res_next;
        for (;;) {
            U_next = U - a * p;
            g_next = zeta(spec, U_next, x, t);
            res_next = g_next.norm();
            if (res_next < res || a < opts.min_step) break;
            a *= 0.5;
        }
        U = std::move(U_next);
        g = std::move(g_next);
        res = res_next;
    }
    if (res > opts.tol) {
        throw NoConvergence("Newton did not reach tolerance " + std::to_string(opts.tol) +
                                " within " + std::to_string(opts.max_iter) +
                                " iterations (final residual " + std::to_string(res) + ")",
                            res, opts.max_iter);
    }
    return {U, opts.max_iter, res, hessian_H(spec, U, x, t, {opts.fd_base, true})};
}

inline Eigen::VectorXd solve_ustar(const OcpSpec& spec, const Eigen::VectorXd& x, double t,
                                   const Eigen::VectorXd& U_init, const NewtonOptions& opts = {}) {
    return solve_ustar_info(spec, x, t, U_init, opts).U;
}

inline Eigen::VectorXd solve_ustar(const OcpSpec& spec, const Eigen::VectorXd& x, double t,
                                   const NewtonOptions& opts = {}) {
    return solve_ustar_info(spec, x, t, Eigen::VectorXd::Zero(spec.hm()), opts).U;
}

/// dU*/dx given the Hessian at a solved optimum: -H^{-1} dzeta/dx at
/// (U*, x, t), from implicit differentiation of zeta(U*(x,t),x,t) = 0.
inline Eigen::MatrixXd ustar_sensitivity_with(const OcpSpec& spec, const Eigen::VectorXd& Ustar,
                                              const Eigen::VectorXd& x, double t,
                                              const Eigen::MatrixXd& H, double fd_base = 1e-5) {
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) {
        const double lmin =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues().minCoeff();
        throw AssumptionViolation("H(U*) is not positive definite (min eigenvalue " +
                                      std::to_string(lmin) + ")",
                                  lmin, t);
    }
    return -llt.solve(zeta_x(spec, Ustar, x, t, fd_base));
}

/// dU*/dx at a solved optimum, recomputing the Hessian there.
inline Eigen::MatrixXd ustar_sensitivity_at(const OcpSpec& spec, const Eigen::VectorXd& Ustar,
                                            const Eigen::VectorXd& x, double t,
                                            double fd_base = 1e-5) {
    return ustar_sensitivity_with(spec, Ustar, x, t,
                                  hessian_H(spec, Ustar, x, t, {fd_base, false}), fd_base);
}

/// Solves zeta = 0 from a cold start, then differentiates implicitly.
inline Eigen::MatrixXd ustar_sensitivity(const OcpSpec& spec, const Eigen::VectorXd& x, double t,
                                         const NewtonOptions& opts = {}) {
    const auto sol = solve_ustar_info(spec, x, t, Eigen::VectorXd::Zero(spec.hm()), opts);
    return ustar_sensitivity_with(spec, sol.U, x, t, sol.H, opts.fd_base);
}

/// Warm-start chain for repeated U* solves along a trajectory or a mesh row.
class UstarSession {
public:
    UstarSession() = default;
    explicit UstarSession(NewtonOptions opts) : opts_(opts) {}

    NewtonResult solve(const OcpSpec& spec, const Eigen::VectorXd& x, double t) {
        if (warm_.size() != spec.hm()) warm_ = Eigen::VectorXd::Zero(spec.hm());
        NewtonResult r = solve_ustar_info(spec, x, t, warm_, opts_);
        warm_ = r.U;
        return r;
    }

    void reset() { warm_.resize(0); }
    const NewtonOptions& options() const { return opts_; }

private:
    NewtonOptions opts_;
    Eigen::VectorXd warm_;
};

/// Integrates the optimally controlled dynamics x' = f(x, Pi0 U*(x,t), t)
/// with RK4, solving U* (warm-started) at every stage evaluation.
inline TrajectoryRecord simulate_optimal(const PlantModel& plant, const OcpSpec& spec,
                                         const Eigen::VectorXd& x0, double t0, double t_end,
                                         double tau, const NewtonOptions& opts = {}) {
    if (!(tau > 0.0)) throw Error("simulate_optimal: step must be positive");
    if (!(t_end > t0)) throw Error("simulate_optimal: t_end must exceed t0");
    TrajectoryRecord rec;
    rec.step = tau;
    rec.n = spec.n;
    rec.m = spec.m;
    UstarSession session(opts);
    const auto rhs = [&](const Eigen::VectorXd& x, double t) -> Eigen::VectorXd {
        const Eigen::VectorXd Us = session.solve(spec, x, t).U;
        return plant.f(x, pi0(Us, spec.m), t);
    };
    detail::rk4(rhs, x0, t0, t_end, tau, [&](double t, const Eigen::VectorXd& x) {
        const Eigen::VectorXd Us = session.solve(spec, x, t).U;
        rec.samples.push_back({t, x, pi0(Us, spec.m), zeta(spec, Us, x, t).norm(),
                               cost_V(spec, Us, x, t)});
    });
    return rec;
}

}  // namespace cmpc
