#pragma once

// Test-only oracles, deliberately independent of the library code paths they
// check: a straight-line scalar-array rollout of the four-state example
// plant, hand-derived LQ closed forms, and plain finite-difference helpers.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>

#include "cmpc/ocp.hpp"
#include "cmpc/plant.hpp"

namespace oracles {

// ---------------------------------------------------------------------------
// Straight-line re-implementation of the example plant and its horizon cost
// (no Eigen, no shared code with the library).

inline std::array<double, 4> plant_f_raw(const std::array<double, 4>& x,
                                         const std::array<double, 2>& u, double t) {
    const double c = std::cos(2.0 * t / M_PI);
    const double s = std::sin(2.0 * t / M_PI);
    const double softplus1 = std::log(std::exp(x[0]) + 1.0) - std::log(2.0);
    const double softplus3 = std::log(std::exp(x[2]) + 1.0) - std::log(2.0);
    std::array<double, 4> f{};
    f[0] = -0.5 * x[0] + u[0];
    f[1] = x[0] + (-1.0 + c / 2.0) * x[1] + 0.2 * softplus1 + 0.3 * c;
    f[2] = x[1] + (-1.0 + c / 2.0) * x[2] + u[1];
    f[3] = x[2] + (-1.0 + s / 2.0) * x[3] + 0.2 * softplus3 + 0.3 * c;
    return f;
}

/// Forward-Euler horizon cost of the example problem (h=3, dt=0.5,
/// l = 0.5|x|^2 + |u|^2, Phi = |x|^2) computed with plain loops.
inline double benchmark_cost_raw(const std::array<double, 4>& x0,
                                 const std::array<double, 6>& U, double t) {
    const double dt = 0.5;
    std::array<double, 4> x = x0;
    double cost = 0.0;
    for (int k = 0; k < 3; ++k) {
        const std::array<double, 2> u{U[2 * k], U[2 * k + 1]};
        double xsq = 0.0;
        for (double xi : x) xsq += xi * xi;
        cost += 0.5 * xsq + u[0] * u[0] + u[1] * u[1];
        const auto f = plant_f_raw(x, u, t + k * dt);
        for (int i = 0; i < 4; ++i) x[i] += f[i] * dt;
    }
    double xsq = 0.0;
    for (double xi : x) xsq += xi * xi;
    return cost + xsq;
}

// ---------------------------------------------------------------------------
// Scalar LQ problem: plant x' = u, forward Euler with dt = 1 (fd = x + u),
// stage cost u^2, terminal cost x^2. Hand algebra for h = 2:
//   V(U,x) = (u0)^2 + (u1)^2 + (x + u0 + u1)^2
//   zeta   = (2u0 + 2(x+u0+u1), 2u1 + 2(x+u0+u1))
//   H      = [[4,2],[2,4]],  U*(x) = (-x/3, -x/3)
// and for h = 1: V = u^2 + (x+u)^2, H = 4, U*(x) = -x/2.

inline cmpc::PlantModel lq_plant() {
    cmpc::PlantModel p;
    p.n = 1;
    p.m = 1;
    p.f = [](const Eigen::VectorXd&, const Eigen::VectorXd& u, double) -> Eigen::VectorXd {
        return u;
    };
    p.fx = [](const Eigen::VectorXd&, const Eigen::VectorXd&, double) -> Eigen::MatrixXd {
        return Eigen::MatrixXd::Zero(1, 1);
    };
    p.fu = [](const Eigen::VectorXd&, const Eigen::VectorXd&, double) -> Eigen::MatrixXd {
        return Eigen::MatrixXd::Ones(1, 1);
    };
    return p;
}

inline cmpc::OcpSpec lq_spec(int h, bool exact_hessian = false) {
    auto spec = cmpc::OcpSpec::euler(
        lq_plant(), h, 1.0,
        [](const Eigen::VectorXd&, const Eigen::VectorXd& u, double) { return u.squaredNorm(); },
        [](const Eigen::VectorXd&, const Eigen::VectorXd&, double) -> Eigen::VectorXd {
            return Eigen::VectorXd::Zero(1);
        },
        [](const Eigen::VectorXd&, const Eigen::VectorXd& u, double) -> Eigen::VectorXd {
            return 2.0 * u;
        },
        [](const Eigen::VectorXd& x, double) { return x.squaredNorm(); },
        [](const Eigen::VectorXd& x, double) -> Eigen::VectorXd { return 2.0 * x; });
    if (exact_hessian) {
        // d2V/dU2 of V = sum u_k^2 + (x + sum u_k)^2: 2I + 2*ones
        spec.exact_hessian = [h](const Eigen::VectorXd&, const Eigen::VectorXd&,
                                 double) -> Eigen::MatrixXd {
            return 2.0 * Eigen::MatrixXd::Identity(h, h) +
                   2.0 * Eigen::MatrixXd::Ones(h, h);
        };
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Plain finite-difference helpers (independent of cmpc::fd).

inline Eigen::VectorXd simple_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                       const Eigen::VectorXd& v, double step) {
    Eigen::VectorXd g(v.size());
    Eigen::VectorXd vp = v;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double d = step * (1.0 + std::abs(v[i]));
        vp[i] = v[i] + d;
        const double hi = f(vp);
        vp[i] = v[i] - d;
        const double lo = f(vp);
        vp[i] = v[i];
        g[i] = (hi - lo) / (2.0 * d);
    }
    return g;
}

inline Eigen::MatrixXd simple_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& v,
    double step) {
    Eigen::MatrixXd J;
    Eigen::VectorXd vp = v;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double d = step * (1.0 + std::abs(v[i]));
        vp[i] = v[i] + d;
        const Eigen::VectorXd hi = f(vp);
        vp[i] = v[i] - d;
        const Eigen::VectorXd lo = f(vp);
        vp[i] = v[i];
        if (J.size() == 0) J.resize(hi.size(), v.size());
        J.col(i) = (hi - lo) / (2.0 * d);
    }
    return J;
}

}  // namespace oracles
