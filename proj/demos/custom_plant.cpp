// Wiring a user-supplied plant through the library API: a scalar nonlinear
// plant x' = -x^3 + u under a two-step horizon, simulated in closed loop and
// compared against the Newton oracle.

#include <iostream>

#include "cmpc/cmpc.hpp"

int main() {
    using Eigen::MatrixXd;
    using Eigen::VectorXd;

    cmpc::PlantModel plant;
    plant.n = 1;
    plant.m = 1;
    plant.f = [](const VectorXd& x, const VectorXd& u, double) -> VectorXd {
        return VectorXd::Constant(1, -x[0] * x[0] * x[0] + u[0]);
    };
    plant.fx = [](const VectorXd& x, const VectorXd&, double) -> MatrixXd {
        return MatrixXd::Constant(1, 1, -3.0 * x[0] * x[0]);
    };
    plant.fu = [](const VectorXd&, const VectorXd&, double) -> MatrixXd {
        return MatrixXd::Constant(1, 1, 1.0);
    };

    const auto spec = cmpc::OcpSpec::euler(
        plant, /*h=*/2, /*dt=*/0.1,
        [](const VectorXd& x, const VectorXd& u, double) {
            return x.squaredNorm() + 0.5 * u.squaredNorm();
        },
        [](const VectorXd& x, const VectorXd&, double) -> VectorXd { return 2.0 * x; },
        [](const VectorXd&, const VectorXd& u, double) -> VectorXd { return u; },
        [](const VectorXd& x, double) { return 2.0 * x.squaredNorm(); },
        [](const VectorXd& x, double) -> VectorXd { return 4.0 * x; });

    const auto vd = cmpc::VirtualDynamics::linear(2.0);

    cmpc::AugmentedState s0;
    s0.t = 0.0;
    s0.x = VectorXd::Constant(1, 1.2);
    s0.U = VectorXd::Zero(spec.hm());

    const auto rec = cmpc::simulate(plant, spec, vd, s0, 4.0, 1e-3);
    const auto opt = cmpc::simulate_optimal(plant, spec, s0.x, 0.0, 4.0, 1e-3);

    std::cout << "suboptimal: x(4) = " << rec.samples.back().x[0]
              << ", |zeta| = " << rec.samples.back().zeta_norm << "\n";
    std::cout << "optimal:    x(4) = " << opt.samples.back().x[0]
              << ", |zeta| = " << opt.samples.back().zeta_norm << "\n";
    std::cout << "gap |x - x*| = "
              << std::abs(rec.samples.back().x[0] - opt.samples.back().x[0]) << "\n";
    return 0;
}
