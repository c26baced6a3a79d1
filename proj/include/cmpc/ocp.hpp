#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

#include "cmpc/errors.hpp"
#include "cmpc/finite_diff.hpp"
#include "cmpc/plant.hpp"

namespace cmpc {

using DiscreteMapFn =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double tk)>;
using DiscreteJacobianFn =
    std::function<Eigen::MatrixXd(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double tk)>;
using StageCostFn =
    std::function<double(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double tk)>;
using StageGradientFn =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double tk)>;
using TerminalCostFn = std::function<double(const Eigen::VectorXd& x, double t)>;
using TerminalGradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& x, double t)>;
using HessianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd& U, const Eigen::VectorXd& x,
                                                double t)>;

/// Discrete-horizon optimal control problem over h steps of length dt.
///
/// The design vector U stacks the inputs [u0; ...; u^{h-1}], so a block of
/// length m starting at k*m is the input applied at stage time t + k*dt.
/// Stage quantities are evaluated at the stage time t^k = t + k*dt and the
/// terminal cost at t^h.
struct OcpSpec {
    int n = 0;
    int m = 0;
    int h = 0;
    double dt = 0.0;

    DiscreteMapFn fd;
    StageCostFn stage;
    TerminalCostFn terminal;

    StageGradientFn stage_gx;   ///< gradient of the stage cost in x
    StageGradientFn stage_gu;   ///< gradient of the stage cost in u
    TerminalGradientFn terminal_gx;
    DiscreteJacobianFn fd_x;    ///< Jacobian of fd in x, n-by-n
    DiscreteJacobianFn fd_u;    ///< Jacobian of fd in u, n-by-m

    /// Optional exact Hessian of V in U; when set, hessian_H uses it instead
    /// of differencing zeta.
    HessianFn exact_hessian;

    int hm() const { return h * m; }

    /// Forward-Euler discretization of a continuous plant:
    /// fd(x,u,tk) = x + f(x,u,tk)*dt, with matching Jacobians.
    static OcpSpec euler(const PlantModel& plant, int h, double dt, StageCostFn stage,
                         StageGradientFn stage_gx, StageGradientFn stage_gu,
                         TerminalCostFn terminal, TerminalGradientFn terminal_gx) {
        if (h < 1) throw Error("OcpSpec: horizon must be at least 1");
        if (!(dt > 0.0)) throw Error("OcpSpec: step must be positive");
        OcpSpec spec;
        spec.n = plant.n;
        spec.m = plant.m;
        spec.h = h;
        spec.dt = dt;
        spec.fd = [f = plant.f, dt](const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                    double tk) -> Eigen::VectorXd {
            return x + f(x, u, tk) * dt;
        };
        spec.fd_x = [fx = plant.fx, dt, n = plant.n](const Eigen::VectorXd& x,
                                                     const Eigen::VectorXd& u,
                                                     double tk) -> Eigen::MatrixXd {
            return Eigen::MatrixXd::Identity(n, n) + fx(x, u, tk) * dt;
        };
        spec.fd_u = [fu = plant.fu, dt](const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                        double tk) -> Eigen::MatrixXd { return fu(x, u, tk) * dt; };
        spec.stage = std::move(stage);
        spec.stage_gx = std::move(stage_gx);
        spec.stage_gu = std::move(stage_gu);
        spec.terminal = std::move(terminal);
        spec.terminal_gx = std::move(terminal_gx);
        return spec;
    }
};

/// First-block projection u = Pi0 U.
inline Eigen::VectorXd pi0(const Eigen::VectorXd& U, int m) { return U.head(m); }

/// Pi0 as an explicit m-by-hm matrix [I_m 0 ... 0].
inline Eigen::MatrixXd pi0_matrix(int h, int m) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(m, h * m);
    P.topLeftCorner(m, m).setIdentity();
    return P;
}

/// Input block k of a stacked design vector.
inline Eigen::VectorXd input_block(const Eigen::VectorXd& U, int k, int m) {
    return U.segment(k * m, m);
}

/// Simulates the discrete dynamics over the horizon; returns h+1 states with
/// x^0 = x and x^{k+1} = fd(x^k, u^k, t + k*dt).
inline std::vector<Eigen::VectorXd> rollout(const OcpSpec& spec, const Eigen::VectorXd& U,
                                            const Eigen::VectorXd& x, double t) {
    std::vector<Eigen::VectorXd> xs;
    xs.reserve(spec.h + 1);
    xs.push_back(x);
    for (int k = 0; k < spec.h; ++k) {
        xs.push_back(spec.fd(xs.back(), input_block(U, k, spec.m), t + k * spec.dt));
        if (!xs.back().allFinite()) {
            throw DivergenceError(
                "rollout diverged: non-finite state at step " + std::to_string(k + 1), k + 1);
        }
    }
    return xs;
}

/// Horizon cost V(U,x,t) = Phi(x^h) + sum_k l(x^k, u^k, t^k).
inline double cost_V(const OcpSpec& spec, const Eigen::VectorXd& U, const Eigen::VectorXd& x,
                     double t) {
    const auto xs = rollout(spec, U, x, t);
    double v = spec.terminal(xs[spec.h], t + spec.h * spec.dt);
    for (int k = 0; k < spec.h; ++k) {
        v += spec.stage(xs[k], input_block(U, k, spec.m), t + k * spec.dt);
    }
    return v;
}

/// Optimality residual zeta(U,x,t) = grad_U V(U,x,t), by the discrete
/// adjoint recursion (exact to machine precision):
///   lambda^h = grad_x Phi(x^h),
///   block k  = grad_u l(x^k,u^k,t^k) + (dfd/du)' lambda^{k+1},
///   lambda^k = grad_x l(x^k,u^k,t^k) + (dfd/dx)' lambda^{k+1}.
inline Eigen::VectorXd zeta(const OcpSpec& spec, const Eigen::VectorXd& U,
                            const Eigen::VectorXd& x, double t) {
    const auto xs = rollout(spec, U, x, t);
    Eigen::VectorXd lambda = spec.terminal_gx(xs[spec.h], t + spec.h * spec.dt);
    Eigen::VectorXd g(spec.hm());
    for (int k = spec.h - 1; k >= 0; --k) {
        const Eigen::VectorXd uk = input_block(U, k, spec.m);
        const double tk = t + k * spec.dt;
        g.segment(k * spec.m, spec.m) =
            spec.stage_gu(xs[k], uk, tk) + spec.fd_u(xs[k], uk, tk).transpose() * lambda;
        lambda = spec.stage_gx(xs[k], uk, tk) + spec.fd_x(xs[k], uk, tk).transpose() * lambda;
    }
    return g;
}

struct HessianOptions {
    double fd_base = 1e-5;     ///< central-difference step, scaled by 1+|coordinate|
    bool require_pd = false;   ///< check positive definiteness and throw if it fails
};

/// H(U,x,t) = dzeta/dU, symmetrized. Central differences of zeta unless the
/// spec supplies an exact Hessian.
inline Eigen::MatrixXd hessian_H(const OcpSpec& spec, const Eigen::VectorXd& U,
                                 const Eigen::VectorXd& x, double t,
                                 const HessianOptions& opts = {}) {
    Eigen::MatrixXd H;
    if (spec.exact_hessian) {
        H = spec.exact_hessian(U, x, t);
    } else {
        H = fd::jacobian(
            [&](const Eigen::VectorXd& Up) { return zeta(spec, Up, x, t); }, U, opts.fd_base);
    }
    H = (0.5 * (H + H.transpose())).eval();
    if (opts.require_pd) {
        Eigen::LLT<Eigen::MatrixXd> llt(H);
        if (llt.info() != Eigen::Success) {
            const double lmin =
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues().minCoeff();
            throw AssumptionViolation(
                "Hesse matrix of V is not positive definite (min eigenvalue " +
                    std::to_string(lmin) + ")",
                lmin);
        }
    }
    return H;
}

/// dzeta/dx by central differences, hm-by-n.
inline Eigen::MatrixXd zeta_x(const OcpSpec& spec, const Eigen::VectorXd& U,
                              const Eigen::VectorXd& x, double t, double fd_base = 1e-5) {
    return fd::jacobian([&](const Eigen::VectorXd& xp) { return zeta(spec, U, xp, t); }, x,
                        fd_base);
}

/// dzeta/dt by central differences.
inline Eigen::VectorXd zeta_t(const OcpSpec& spec, const Eigen::VectorXd& U,
                              const Eigen::VectorXd& x, double t, double fd_base = 1e-5) {
    return fd::derivative([&](double tp) { return zeta(spec, U, x, tp); }, t, fd_base);
}

/// dzeta/ds = [dzeta/dx  dzeta/dU] for the augmented state s = [x; U].
inline Eigen::MatrixXd zeta_s(const OcpSpec& spec, const Eigen::VectorXd& U,
                              const Eigen::VectorXd& x, double t,
                              const HessianOptions& opts = {}) {
    Eigen::MatrixXd J(spec.hm(), spec.n + spec.hm());
    J.leftCols(spec.n) = zeta_x(spec, U, x, t, opts.fd_base);
    J.rightCols(spec.hm()) = hessian_H(spec, U, x, t, opts);
    return J;
}

}  // namespace cmpc
