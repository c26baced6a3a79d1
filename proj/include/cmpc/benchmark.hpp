#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>

#include "cmpc/certificates.hpp"
#include "cmpc/contraction.hpp"
#include "cmpc/continuation.hpp"
#include "cmpc/ocp.hpp"
#include "cmpc/plant.hpp"

namespace cmpc::benchmark {

/// Softplus shifted to vanish at zero: log(exp(a)+1) - log 2.
inline double f_act(double a) {
    return (a > 30.0 ? a : std::log1p(std::exp(a))) - std::log(2.0);
}

/// Derivative of f_act, the logistic function.
inline double f_act_d(double a) { return 1.0 / (1.0 + std::exp(-a)); }

inline double cs(double t) { return std::cos(2.0 * t / M_PI); }
inline double sn(double t) { return std::sin(2.0 * t / M_PI); }

inline Eigen::Matrix4d A_of_t(double t) {
    const double c = cs(t), s = sn(t);
    Eigen::Matrix4d A;
    A << -0.5, 0, 0, 0,
          1, -1 + c / 2, 0, 0,
          0, 1, -1 + c / 2, 0,
          0, 0, 1, -1 + s / 2;
    return A;
}

inline Eigen::Matrix<double, 4, 2> B_matrix() {
    Eigen::Matrix<double, 4, 2> B = Eigen::Matrix<double, 4, 2>::Zero();
    B(0, 0) = 1.0;
    B(2, 1) = 1.0;
    return B;
}

/// The four-state time-varying example problem:
///   f(x,u,t) = A(t) x + B u + r(x) + w(t),
///   r(x) = 0.2 (0, f_act(x1), 0, f_act(x3)),  w(t) = 0.3 (0, cs, 0, cs),
/// forward Euler with h = 3, dt = 0.5, stage cost 0.5|x|^2 + |u|^2,
/// terminal cost |x|^2, and cubic virtual dynamics
/// eta_i(z,t) = -0.2 z_i - 0.05 z_i^3.
struct Problem {
    PlantModel plant;
    OcpSpec spec;
    VirtualDynamics vd;
    MetricConfig metric;  ///< P = I4, Q = I6, kappa 1, gamma 0.1, rates of the paper runs
};

inline Problem build() {
    Problem prob;
    prob.plant.n = 4;
    prob.plant.m = 2;
    prob.plant.f = [](const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                      double t) -> Eigen::VectorXd {
        Eigen::Vector4d r(0.0, 0.2 * f_act(x[0]), 0.0, 0.2 * f_act(x[2]));
        Eigen::Vector4d w(0.0, 0.3 * cs(t), 0.0, 0.3 * cs(t));
        return A_of_t(t) * x + B_matrix() * u + r + w;
    };
    prob.plant.fx = [](const Eigen::VectorXd& x, const Eigen::VectorXd&,
                       double t) -> Eigen::MatrixXd {
        Eigen::Matrix4d J = A_of_t(t);
        J(1, 0) += 0.2 * f_act_d(x[0]);
        J(3, 2) += 0.2 * f_act_d(x[2]);
        return J;
    };
    prob.plant.fu = [](const Eigen::VectorXd&, const Eigen::VectorXd&,
                       double) -> Eigen::MatrixXd { return B_matrix(); };

    prob.spec = OcpSpec::euler(
        prob.plant, /*h=*/3, /*dt=*/0.5,
        [](const Eigen::VectorXd& x, const Eigen::VectorXd& u, double) {
            return 0.5 * x.squaredNorm() + u.squaredNorm();
        },
        [](const Eigen::VectorXd& x, const Eigen::VectorXd&, double) -> Eigen::VectorXd {
            return x;
        },
        [](const Eigen::VectorXd&, const Eigen::VectorXd& u, double) -> Eigen::VectorXd {
            return 2.0 * u;
        },
        [](const Eigen::VectorXd& x, double) { return x.squaredNorm(); },
        [](const Eigen::VectorXd& x, double) -> Eigen::VectorXd { return 2.0 * x; });

    prob.vd.eta = [](const Eigen::VectorXd& z, double) -> Eigen::VectorXd {
        return -0.2 * z - 0.05 * z.array().cube().matrix();
    };
    prob.vd.eta_jacobian = [](const Eigen::VectorXd& z, double) -> Eigen::MatrixXd {
        return (-0.2 - 0.15 * z.array().square()).matrix().asDiagonal();
    };
    prob.vd.fixes_origin = true;

    prob.metric = MetricConfig::identity(4, 6);
    prob.metric.kappa = 1.0;
    prob.metric.gamma = 0.1;
    prob.metric.beta_x = 0.1;
    prob.metric.beta_z = 0.4;
    prob.metric.beta_p = 0.032;
    return prob;
}

/// The three closed-loop initial conditions examined in the paper runs.
inline std::array<AugmentedState, 3> initial_conditions() {
    std::array<AugmentedState, 3> ics;
    ics[0].t = 0.0;
    ics[0].x = Eigen::Vector4d(1.5, 1.5, -1.5, -1.5);
    ics[0].U = Eigen::VectorXd::Zero(6);
    ics[1].t = 0.0;
    ics[1].x = Eigen::Vector4d(-1.5, -1.5, 1.5, 1.5);
    ics[1].U = (Eigen::VectorXd(6) << -0.5, -0.5, 0, 0, 0, 0).finished();
    ics[2].t = 0.0;
    ics[2].x = Eigen::Vector4d::Zero();
    ics[2].U = (Eigen::VectorXd(6) << 0.5, 0.5, 0, 0, 0, 0).finished();
    return ics;
}

/// Full verification mesh for the optimal-loop inequality: 21 points per
/// state coordinate on [-2,2], 40 time points on [0,3.9] (7,779,240 points).
inline MeshSpec mesh_p_opt() {
    MeshSpec mesh;
    mesh.x_axes = MeshSpec::uniform("x", 4, -2.0, 2.0, 21);
    mesh.t_axis = MeshAxis{"t", 0.0, 3.9, 40};
    return mesh;
}

/// Desk-scale subsample of mesh_p_opt: every fifth point on each axis
/// (5^4 x 8 = 5,000 points), exactly contained in the full mesh.
inline MeshSpec mesh_p_opt_desk() {
    MeshSpec mesh;
    mesh.x_axes = MeshSpec::uniform("x", 4, -2.0, 2.0, 5);
    mesh.t_axis = MeshAxis{"t", 0.0, 3.5, 8};
    return mesh;
}

/// Full mesh for the regularity and GK checks: 5 points per state
/// coordinate on [-1.6,1.6], 4 time points on [0.5,3.5], 7 points per
/// design coordinate on [-0.6,0.6] (294,122,500 points).
inline MeshSpec mesh_gk() {
    MeshSpec mesh;
    mesh.x_axes = MeshSpec::uniform("x", 4, -1.6, 1.6, 5);
    mesh.t_axis = MeshAxis{"t", 0.5, 3.5, 4};
    mesh.u_axes = MeshSpec::uniform("U", 6, -0.6, 0.6, 7);
    return mesh;
}

/// Desk-scale subsample of mesh_gk: 3 state points, all 4 time points,
/// 3 design points per coordinate (236,196 points), contained in the full
/// mesh.
inline MeshSpec mesh_gk_desk() {
    MeshSpec mesh;
    mesh.x_axes = MeshSpec::uniform("x", 4, -1.6, 1.6, 3);
    mesh.t_axis = MeshAxis{"t", 0.5, 3.5, 4};
    mesh.u_axes = MeshSpec::uniform("U", 6, -0.6, 0.6, 3);
    return mesh;
}

/// Mesh for the virtual-dynamics inequality over z (time-invariant case).
inline MeshSpec mesh_q(double z_lo = -3.0, double z_hi = 3.0, int count = 13) {
    MeshSpec mesh;
    mesh.u_axes = MeshSpec::uniform("z", 6, z_lo, z_hi, count);
    return mesh;
}

}  // namespace cmpc::benchmark
