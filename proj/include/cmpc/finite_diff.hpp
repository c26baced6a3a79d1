#pragma once

#include <Eigen/Core>

#include <cmath>

namespace cmpc::fd {

/// Central-difference step scaled by the coordinate magnitude.
inline double step(double coord, double base = 1e-5) {
    return base * (1.0 + std::abs(coord));
}

/// Jacobian of a vector-valued map by central differences, one column per
/// coordinate of `v`.
template <class F>
Eigen::MatrixXd jacobian(F&& f, const Eigen::VectorXd& v, double base = 1e-5) {
    Eigen::VectorXd vp = v;
    Eigen::MatrixXd result;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double d = step(v[i], base);
        vp[i] = v[i] + d;
        const Eigen::VectorXd hi = f(vp);
        vp[i] = v[i] - d;
        const Eigen::VectorXd lo = f(vp);
        vp[i] = v[i];
        if (result.size() == 0) result.resize(hi.size(), v.size());
        result.col(i) = (hi - lo) / (2.0 * d);
    }
    return result;
}

/// Derivative of a vector-valued map in a scalar argument.
template <class F>
Eigen::VectorXd derivative(F&& f, double s, double base = 1e-5) {
    const double d = step(s, base);
    return ((f(s + d) - f(s - d)) / (2.0 * d)).eval();
}

/// Gradient of a scalar-valued map by central differences.
template <class F>
Eigen::VectorXd gradient(F&& f, const Eigen::VectorXd& v, double base = 1e-5) {
    Eigen::VectorXd vp = v;
    Eigen::VectorXd g(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double d = step(v[i], base);
        vp[i] = v[i] + d;
        const double hi = f(vp);
        vp[i] = v[i] - d;
        const double lo = f(vp);
        vp[i] = v[i];
        g[i] = (hi - lo) / (2.0 * d);
    }
    return g;
}

}  // namespace cmpc::fd
