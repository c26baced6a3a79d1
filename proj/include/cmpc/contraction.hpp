#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>

#include "cmpc/continuation.hpp"
#include "cmpc/errors.hpp"
#include "cmpc/finite_diff.hpp"
#include "cmpc/ocp.hpp"
#include "cmpc/optimal.hpp"
#include "cmpc/plant.hpp"

namespace cmpc {

using MatrixFieldFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd& v, double t)>;

/// The hierarchical contraction metric M(s,t) = M_P(x,t) + kappa M_Q(s,t)
/// with M_P = blkdiag(P, 0) and M_Q = (dzeta/ds)' Q(zeta,t) (dzeta/ds),
/// together with the rate constants of the certificate inequalities.
///
/// `constant_P` / `constant_Q` declare that the field has no state or time
/// dependence, letting operator evaluations skip the finite-difference
/// Lie-derivative and time terms (they vanish analytically).
struct MetricConfig {
    MatrixFieldFn P;  ///< (x,t) -> n-by-n, uniformly positive definite
    MatrixFieldFn Q;  ///< (z,t) -> hm-by-hm, uniformly positive definite
    double kappa = 1.0;
    double gamma = 0.1;
    double beta_x = 0.0;
    double beta_z = 0.0;
    double beta_p = 0.0;
    bool constant_P = false;
    bool constant_Q = false;

    /// P = I_n, Q = I_hm.
    static MetricConfig identity(int n, int hm) {
        MetricConfig cfg;
        cfg.P = [n](const Eigen::VectorXd&, double) -> Eigen::MatrixXd {
            return Eigen::MatrixXd::Identity(n, n);
        };
        cfg.Q = [hm](const Eigen::VectorXd&, double) -> Eigen::MatrixXd {
            return Eigen::MatrixXd::Identity(hm, hm);
        };
        cfg.constant_P = true;
        cfg.constant_Q = true;
        return cfg;
    }
};

/// M(s,t) = blkdiag(P(x,t), 0) + kappa (dzeta/ds)' Q(zeta(s,t),t) (dzeta/ds),
/// symmetrized.
inline Eigen::MatrixXd metric_M(const MetricConfig& cfg, const OcpSpec& spec,
                                const Eigen::VectorXd& U, const Eigen::VectorXd& x, double t) {
    const int n = spec.n;
    const int hm = spec.hm();
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + hm, n + hm);
    M.topLeftCorner(n, n) = cfg.P(x, t);
    const Eigen::MatrixXd Js = zeta_s(spec, U, x, t);
    const Eigen::MatrixXd Qz = cfg.Q(zeta(spec, U, x, t), t);
    M += cfg.kappa * Js.transpose() * Qz * Js;
    return 0.5 * (M + M.transpose());
}

struct LOperatorOptions {
    double fd_base = 1e-5;
    bool constant_metric = false;  ///< skip the Lie-derivative and dM/dt terms
    std::optional<Eigen::MatrixXd> phi_jacobian;  ///< analytic dphi/ds when available
};

/// The contraction operator
///   L[M, phi, s, gamma](s,t) = Lie_phi M + dM/dt + <M dphi/ds> + gamma M,
/// with <S> = S + S'. Derivative terms use central finite differences of
/// `Mfun` and `phi` unless supplied or switched off.
template <class MatrixFn, class VecFn>
Eigen::MatrixXd l_operator(MatrixFn&& Mfun, VecFn&& phi, const Eigen::VectorXd& s, double t,
                           double gamma, const LOperatorOptions& opts = {}) {
    const Eigen::MatrixXd M0 = Mfun(s, t);
    const Eigen::MatrixXd J =
        opts.phi_jacobian
            ? *opts.phi_jacobian
            : fd::jacobian([&](const Eigen::VectorXd& sp) { return phi(sp, t); }, s,
                           opts.fd_base);
    Eigen::MatrixXd L = M0 * J;
    L = (L + L.transpose()).eval();
    L += gamma * M0;
    if (!opts.constant_metric) {
        const Eigen::VectorXd v = phi(s, t);
        Eigen::VectorXd sp = s;
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            const double d = fd::step(s[i], opts.fd_base);
            sp[i] = s[i] + d;
            const Eigen::MatrixXd hi = Mfun(sp, t);
            sp[i] = s[i] - d;
            const Eigen::MatrixXd lo = Mfun(sp, t);
            sp[i] = s[i];
            L += v[i] * (hi - lo) / (2.0 * d);
        }
        const double dt_ = fd::step(t, opts.fd_base);
        L += (Mfun(s, t + dt_) - Mfun(s, t - dt_)) / (2.0 * dt_);
    }
    return 0.5 * (L + L.transpose());
}

/// Suboptimality matrix K(U,x,t) = -H^{-1} dzeta/dx - dU*/dx. The first term
/// is evaluated at the given (possibly suboptimal) U, the second at the
/// optimum U*(x,t); K vanishes exactly when U = U*(x,t).
inline Eigen::MatrixXd k_matrix(const OcpSpec& spec, const Eigen::VectorXd& U,
                                const Eigen::VectorXd& x, double t,
                                const Eigen::MatrixXd& ustar_sens, double fd_base = 1e-5) {
    const Eigen::MatrixXd H = hessian_H(spec, U, x, t, {fd_base, false});
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) {
        const double lmin =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues().minCoeff();
        throw AssumptionViolation("K: H is not positive definite (min eigenvalue " +
                                      std::to_string(lmin) + ")",
                                  lmin, t);
    }
    return -llt.solve(zeta_x(spec, U, x, t, fd_base)) - ustar_sens;
}

inline Eigen::MatrixXd k_matrix(const OcpSpec& spec, const Eigen::VectorXd& U,
                                const Eigen::VectorXd& x, double t, UstarSession& session,
                                double fd_base = 1e-5) {
    const NewtonResult sol = session.solve(spec, x, t);
    return k_matrix(spec, U, x, t,
                    ustar_sensitivity_with(spec, sol.U, x, t, sol.H, fd_base), fd_base);
}

/// P_xU at a solved optimum: P(x,t) fu(x, Pi0 Ustar + u_r, t) Pi0, n-by-hm.
inline Eigen::MatrixXd p_xU_with(const MetricConfig& cfg, const PlantModel& plant,
                                 const OcpSpec& spec, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& u_r, double t,
                                 const Eigen::VectorXd& Ustar) {
    const Eigen::VectorXd u = pi0(Ustar, spec.m) + u_r;
    return cfg.P(x, t) * plant.fu(x, u, t) * pi0_matrix(spec.h, spec.m);
}

/// P_xU(x,u_r,t) = P(x,t) (df_r/du_r)(x,u_r,t) Pi0
///               = P(x,t) fu(x, Pi0 U*(x,t) + u_r, t) Pi0,  n-by-hm.
inline Eigen::MatrixXd p_xU_matrix(const MetricConfig& cfg, const PlantModel& plant,
                                   const OcpSpec& spec, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& u_r, double t, UstarSession& session) {
    return p_xU_with(cfg, plant, spec, x, u_r, t, session.solve(spec, x, t).U);
}

/// bar{P}_xU(x,u,t) = P_xU(x, u - Pi0 U*(x,t), t).
inline Eigen::MatrixXd pbar_xU_matrix(const MetricConfig& cfg, const PlantModel& plant,
                                      const OcpSpec& spec, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& u, double t,
                                      UstarSession& session) {
    const Eigen::VectorXd Ustar = session.solve(spec, x, t).U;
    return p_xU_with(cfg, plant, spec, x, u - pi0(Ustar, spec.m), t, Ustar);
}

/// L[P, f, x, gamma](x,u,t): the plant-state block of the decomposition,
/// with u held fixed.
inline Eigen::MatrixXd l_x_operator(const MetricConfig& cfg, const PlantModel& plant,
                                    const Eigen::VectorXd& x, const Eigen::VectorXd& u, double t,
                                    double gamma, double fd_base = 1e-5) {
    LOperatorOptions opts;
    opts.fd_base = fd_base;
    opts.constant_metric = cfg.constant_P;
    opts.phi_jacobian = plant.fx(x, u, t);
    return l_operator([&](const Eigen::VectorXd& xp, double tp) { return cfg.P(xp, tp); },
                      [&](const Eigen::VectorXd& xp, double tp) { return plant.f(xp, u, tp); },
                      x, t, gamma, opts);
}

/// L[Q, eta, z, gamma](z,t): the residual block of the decomposition.
inline Eigen::MatrixXd l_z_operator(const MetricConfig& cfg, const VirtualDynamics& vd,
                                    const Eigen::VectorXd& z, double t, double gamma,
                                    double fd_base = 1e-5) {
    LOperatorOptions opts;
    opts.fd_base = fd_base;
    opts.constant_metric = cfg.constant_Q;
    if (vd.eta_jacobian) opts.phi_jacobian = vd.eta_jacobian(z, t);
    return l_operator([&](const Eigen::VectorXd& zp, double tp) { return cfg.Q(zp, tp); },
                      [&](const Eigen::VectorXd& zp, double tp) { return vd.eta(zp, tp); }, z, t,
                      gamma, opts);
}

/// The block decomposition of L[M, phi, s, gamma] for the hierarchical
/// metric:
///   [[ L[P,f,x,g](x,u,t), bar{P}_xU ], [ bar{P}_xU', 0 ]]
///   + kappa (dzeta/ds)' L[Q,eta,z,g]|_{z=zeta} (dzeta/ds),
/// evaluated at s = [x; U], u = Pi0 U.
inline Eigen::MatrixXd lemma3_matrix(const MetricConfig& cfg, const PlantModel& plant,
                                     const OcpSpec& spec, const VirtualDynamics& vd,
                                     const AugmentedState& s, UstarSession& session,
                                     double fd_base = 1e-5) {
    const int n = spec.n;
    const int hm = spec.hm();
    const Eigen::VectorXd u = pi0(s.U, spec.m);

    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n + hm, n + hm);
    D.topLeftCorner(n, n) = l_x_operator(cfg, plant, s.x, u, s.t, cfg.gamma, fd_base);
    const Eigen::MatrixXd Pbar = pbar_xU_matrix(cfg, plant, spec, s.x, u, s.t, session);
    D.topRightCorner(n, hm) = Pbar;
    D.bottomLeftCorner(hm, n) = Pbar.transpose();

    const Eigen::VectorXd z = zeta(spec, s.U, s.x, s.t);
    const Eigen::MatrixXd Lz = l_z_operator(cfg, vd, z, s.t, cfg.gamma, fd_base);
    const Eigen::MatrixXd Js = zeta_s(spec, s.U, s.x, s.t, {fd_base, false});
    D += cfg.kappa * Js.transpose() * Lz * Js;
    return 0.5 * (D + D.transpose());
}

/// Quadratic form d = delta_s' (decomposition matrix) delta_s.
inline double lemma3_decomposition(const MetricConfig& cfg, const PlantModel& plant,
                                   const OcpSpec& spec, const VirtualDynamics& vd,
                                   const AugmentedState& s, const Eigen::VectorXd& delta_s,
                                   double fd_base = 1e-5) {
    UstarSession session;
    const Eigen::MatrixXd D = lemma3_matrix(cfg, plant, spec, vd, s, session, fd_base);
    return delta_s.dot(D * delta_s);
}

}  // namespace cmpc
