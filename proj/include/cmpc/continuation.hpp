#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "cmpc/errors.hpp"
#include "cmpc/ocp.hpp"
#include "cmpc/plant.hpp"

namespace cmpc {

using EtaFn = std::function<Eigen::VectorXd(const Eigen::VectorXd& z, double t)>;
using EtaJacobianFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd& z, double t)>;

/// Designed virtual dynamics z'(t) = eta(z,t) imposed on the optimality
/// residual z = zeta(U,x,t). `fixes_origin` asserts eta(0,t) = 0, the
/// hypothesis under which the closed loop tracks the optimal trajectory.
struct VirtualDynamics {
    EtaFn eta;
    EtaJacobianFn eta_jacobian;  ///< optional; finite differences when absent
    bool fixes_origin = false;

    /// eta(z,t) = -c z.
    static VirtualDynamics linear(double c = 1.0) {
        VirtualDynamics vd;
        vd.eta = [c](const Eigen::VectorXd& z, double) -> Eigen::VectorXd { return -c * z; };
        vd.eta_jacobian = [c](const Eigen::VectorXd& z, double) -> Eigen::MatrixXd {
            return -c * Eigen::MatrixXd::Identity(z.size(), z.size());
        };
        vd.fixes_origin = true;
        return vd;
    }
};

/// State of the closed-loop system s = [x; U] at time t.
struct AugmentedState {
    double t = 0.0;
    Eigen::VectorXd x;
    Eigen::VectorXd U;

    Eigen::VectorXd flat() const {
        Eigen::VectorXd s(x.size() + U.size());
        s << x, U;
        return s;
    }

    static AugmentedState unflat(const Eigen::VectorXd& s, int n, double t) {
        AugmentedState a;
        a.t = t;
        a.x = s.head(n);
        a.U = s.tail(s.size() - n);
        return a;
    }
};

struct TrajectorySample {
    double t;
    Eigen::VectorXd x;
    Eigen::VectorXd u;  ///< applied input Pi0 U
    double zeta_norm;
    double cost;
};

namespace detail {
inline void print_g17(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}
}  // namespace detail

/// Sampled closed-loop trajectory. Serializes to CSV with header
/// t,x_1..x_n,u_1..u_m,zeta_norm,cost_V, one row per integrator step,
/// floats printed with 17 significant digits.
struct TrajectoryRecord {
    double step = 0.0;
    int n = 0;
    int m = 0;
    std::vector<TrajectorySample> samples;

    std::string csv() const {
        std::string out = "t";
        for (int i = 1; i <= n; ++i) out += ",x_" + std::to_string(i);
        for (int i = 1; i <= m; ++i) out += ",u_" + std::to_string(i);
        out += ",zeta_norm,cost_V\n";
        for (const auto& s : samples) {
            detail::print_g17(out, s.t);
            for (int i = 0; i < n; ++i) {
                out += ',';
                detail::print_g17(out, s.x[i]);
            }
            for (int i = 0; i < m; ++i) {
                out += ',';
                detail::print_g17(out, s.u[i]);
            }
            out += ',';
            detail::print_g17(out, s.zeta_norm);
            out += ',';
            detail::print_g17(out, s.cost);
            out += '\n';
        }
        return out;
    }

    void write_csv(std::ostream& os) const { os << csv(); }
};

/// b(U,x,t) = eta(zeta(U,x,t),t) - dzeta/dx * f(x, Pi0 U, t) - dzeta/dt.
inline Eigen::VectorXd b_vector(const PlantModel& plant, const OcpSpec& spec,
                                const VirtualDynamics& vd, const Eigen::VectorXd& U,
                                const Eigen::VectorXd& x, double t) {
    return vd.eta(zeta(spec, U, x, t), t) - zeta_x(spec, U, x, t) * plant.f(x, pi0(U, spec.m), t) -
           zeta_t(spec, U, x, t);
}

namespace detail {
/// Solves H y = b with a Cholesky factorization; H must be positive definite.
inline Eigen::VectorXd spd_solve(const Eigen::MatrixXd& H, const Eigen::VectorXd& b,
                                 double time) {
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) {
        const double lmin =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues().minCoeff();
        throw AssumptionViolation("H is not positive definite at t = " + std::to_string(time) +
                                      " (min eigenvalue " + std::to_string(lmin) + ")",
                                  lmin, time);
    }
    return llt.solve(b);
}
}  // namespace detail

/// Continuation update U'(t): solves H(U,x,t) U' = b(U,x,t).
inline Eigen::VectorXd u_dot(const PlantModel& plant, const OcpSpec& spec,
                             const VirtualDynamics& vd, const Eigen::VectorXd& U,
                             const Eigen::VectorXd& x, double t) {
    return detail::spd_solve(hessian_H(spec, U, x, t), b_vector(plant, spec, vd, U, x, t), t);
}

/// Right-hand side of the closed loop: phi(s,t) = [f(x, Pi0 U, t); u_dot].
inline Eigen::VectorXd closed_loop_rhs(const PlantModel& plant, const OcpSpec& spec,
                                       const VirtualDynamics& vd, const AugmentedState& s) {
    Eigen::VectorXd out(spec.n + spec.hm());
    out.head(spec.n) = plant.f(s.x, pi0(s.U, spec.m), s.t);
    out.tail(spec.hm()) = u_dot(plant, spec, vd, s.U, s.x, s.t);
    return out;
}

namespace detail {
/// Classical fourth-order Runge-Kutta with fixed step. Calls `record` after
/// every accepted step (and once at t0).
template <class Rhs, class Record>
void rk4(Rhs&& rhs, Eigen::VectorXd s, double t0, double t_end, double tau, Record&& record) {
    double t = t0;
    record(t, s);
    const long nsteps = std::lround((t_end - t0) / tau);
    for (long i = 0; i < nsteps; ++i) {
        const Eigen::VectorXd k1 = rhs(s, t);
        const Eigen::VectorXd k2 = rhs(s + 0.5 * tau * k1, t + 0.5 * tau);
        const Eigen::VectorXd k3 = rhs(s + 0.5 * tau * k2, t + 0.5 * tau);
        const Eigen::VectorXd k4 = rhs(s + tau * k3, t + tau);
        s += (tau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = t0 + (i + 1) * tau;
        if (!s.allFinite()) {
            throw DivergenceError("simulation diverged at t = " + std::to_string(t), -1, t);
        }
        record(t, s);
    }
}
}  // namespace detail

/// Integrates s' = phi(s,t) from s0 to t_end with fixed RK4 step tau,
/// recording zeta norm and cost at every step.
inline TrajectoryRecord simulate(const PlantModel& plant, const OcpSpec& spec,
                                 const VirtualDynamics& vd, const AugmentedState& s0,
                                 double t_end, double tau) {
    if (!(tau > 0.0)) throw Error("simulate: step must be positive");
    if (!(t_end > s0.t)) throw Error("simulate: t_end must exceed the initial time");
    if (s0.x.size() != spec.n || s0.U.size() != spec.hm()) {
        throw Error("simulate: initial state dimensions do not match the problem");
    }
    TrajectoryRecord rec;
    rec.step = tau;
    rec.n = spec.n;
    rec.m = spec.m;
    rec.samples.reserve(static_cast<size_t>((t_end - s0.t) / tau) + 2);
    const auto rhs = [&](const Eigen::VectorXd& s, double t) {
        return closed_loop_rhs(plant, spec, vd, AugmentedState::unflat(s, spec.n, t));
    };
    detail::rk4(rhs, s0.flat(), s0.t, t_end, tau, [&](double t, const Eigen::VectorXd& s) {
        const auto a = AugmentedState::unflat(s, spec.n, t);
        rec.samples.push_back({t, a.x, pi0(a.U, spec.m), zeta(spec, a.U, a.x, t).norm(),
                               cost_V(spec, a.U, a.x, t)});
    });
    return rec;
}

/// Variant that also keeps the full design vector at every step (needed by
/// the perturbation analysis, which re-evaluates the metric along the
/// nominal trajectory).
inline std::vector<AugmentedState> simulate_states(const PlantModel& plant, const OcpSpec& spec,
                                                   const VirtualDynamics& vd,
                                                   const AugmentedState& s0, double t_end,
                                                   double tau) {
    std::vector<AugmentedState> out;
    out.reserve(static_cast<size_t>((t_end - s0.t) / tau) + 2);
    const auto rhs = [&](const Eigen::VectorXd& s, double t) {
        return closed_loop_rhs(plant, spec, vd, AugmentedState::unflat(s, spec.n, t));
    };
    detail::rk4(rhs, s0.flat(), s0.t, t_end, tau, [&](double t, const Eigen::VectorXd& s) {
        out.push_back(AugmentedState::unflat(s, spec.n, t));
    });
    return out;
}

}  // namespace cmpc
