#pragma once

#include <Eigen/Core>

#include <functional>

namespace cmpc {

using VectorFieldFn =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double t)>;
using PlantJacobianFn =
    std::function<Eigen::MatrixXd(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double t)>;

/// Continuous-time controlled plant x'(t) = f(x, u, t) with analytic
/// Jacobians. `fx` is n-by-n, `fu` is n-by-m; both must agree with finite
/// differences of `f` (the test suite checks every plant instance it uses).
struct PlantModel {
    int n = 0;  ///< state dimension
    int m = 0;  ///< input dimension
    VectorFieldFn f;
    PlantJacobianFn fx;
    PlantJacobianFn fu;
};

}  // namespace cmpc
