#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cmpc/contraction.hpp"
#include "cmpc/errors.hpp"
#include "cmpc/ocp.hpp"
#include "cmpc/optimal.hpp"
#include "cmpc/plant.hpp"

namespace cmpc {

struct MeshAxis {
    std::string name;
    double lo = 0.0;
    double hi = 0.0;
    int count = 1;

    double at(int i) const {
        return count <= 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (count - 1);
    }
};

/// Cartesian evaluation grid. `x_axes` mesh the plant state, `u_axes` mesh
/// the design vector (or z, or u_r, depending on the inequality), `t_axis`
/// meshes time. Points are enumerated lexicographically with x slowest and
/// u fastest, so warm-started Newton chains see (x,t) change rarely.
struct MeshSpec {
    std::vector<MeshAxis> x_axes;
    std::vector<MeshAxis> u_axes;
    std::optional<MeshAxis> t_axis;
    std::int64_t guard = 1'000'000'000;

    std::int64_t total_points() const {
        std::int64_t total = 1;
        for (const auto& a : x_axes) total *= a.count;
        if (t_axis) total *= t_axis->count;
        for (const auto& a : u_axes) total *= a.count;
        return total;
    }

    void validate() const {
        auto check_axis = [](const MeshAxis& a) {
            if (a.count < 1) throw Error("mesh axis '" + a.name + "': count must be >= 1");
            if (!std::isfinite(a.lo) || !std::isfinite(a.hi))
                throw Error("mesh axis '" + a.name + "': bounds must be finite");
        };
        for (const auto& a : x_axes) check_axis(a);
        for (const auto& a : u_axes) check_axis(a);
        if (t_axis) check_axis(*t_axis);
        const std::int64_t total = total_points();
        if (total > guard) {
            throw Error("mesh guard exceeded: " + std::to_string(total) + " points > " +
                        std::to_string(guard));
        }
    }

    struct Point {
        Eigen::VectorXd x;
        Eigen::VectorXd u;
        double t = 0.0;
    };

    Point decode(std::int64_t index) const {
        Point p;
        p.x.resize(static_cast<Eigen::Index>(x_axes.size()));
        p.u.resize(static_cast<Eigen::Index>(u_axes.size()));
        for (auto it = u_axes.rbegin(); it != u_axes.rend(); ++it) {
            const auto i = static_cast<Eigen::Index>(u_axes.rend() - it - 1);
            p.u[i] = it->at(static_cast<int>(index % it->count));
            index /= it->count;
        }
        if (t_axis) {
            p.t = t_axis->at(static_cast<int>(index % t_axis->count));
            index /= t_axis->count;
        }
        for (auto it = x_axes.rbegin(); it != x_axes.rend(); ++it) {
            const auto i = static_cast<Eigen::Index>(x_axes.rend() - it - 1);
            p.x[i] = it->at(static_cast<int>(index % it->count));
            index /= it->count;
        }
        return p;
    }

    /// Uniform axes helper: `count` points per state coordinate on [lo,hi].
    static std::vector<MeshAxis> uniform(const std::string& prefix, int dims, double lo,
                                         double hi, int count) {
        std::vector<MeshAxis> axes;
        axes.reserve(dims);
        for (int i = 0; i < dims; ++i) {
            axes.push_back({prefix + "_" + std::to_string(i + 1), lo, hi, count});
        }
        return axes;
    }
};

/// Machine-readable verdict of one matrix-inequality check over a mesh.
struct CertificateReport {
    std::string inequality;
    bool pass = false;
    double worst_margin = 0.0;   ///< max eigenvalue (min for assumption1)
    MeshSpec::Point argmax;      ///< mesh point attaining the worst margin
    std::int64_t points_checked = 0;
    double wall_time_s = 0.0;
    double aux = std::nan("");      ///< GK check: max |P_xU K|
    double aux_sym = std::nan("");  ///< GK check: max |<P_xU K>|
    std::string error;              ///< nonempty if a solver failed mid-sweep
};

struct SweepOptions {
    int workers = 0;        ///< 0: CMPC_WORKERS env var, then hardware concurrency
    double pass_tol = 1e-9; ///< absorbs finite-difference noise in the <= 0 test
};

namespace detail {

inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("CMPC_WORKERS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

struct PointValue {
    double margin = 0.0;
    double aux = 0.0;
    double aux2 = 0.0;
};

struct SweepOutcome {
    double worst = 0.0;
    double aux = 0.0;
    double aux2 = 0.0;
    std::int64_t arg_index = -1;
    std::int64_t points = 0;
    double wall_time_s = 0.0;
    std::string error;
    std::int64_t error_index = -1;
};

/// Evaluates `eval` at every mesh point and reduces to the maximum margin.
/// Each worker owns a state created by `make_state` (warm-start chains and
/// scratch); reduction is an exact max, so the result does not depend on the
/// partition. Per-point solver failures abort the sweep and are reported.
template <class StateFactory, class Eval>
SweepOutcome sweep_max(const MeshSpec& mesh, StateFactory&& make_state, Eval&& eval,
                       const SweepOptions& opts) {
    mesh.validate();
    const std::int64_t total = mesh.total_points();
    const int workers = std::min<std::int64_t>(resolve_workers(opts.workers), total);

    struct Local {
        double worst = -std::numeric_limits<double>::infinity();
        double aux = -std::numeric_limits<double>::infinity();
        double aux2 = -std::numeric_limits<double>::infinity();
        std::int64_t arg = -1;
        std::string error;
        std::int64_t error_index = -1;
    };
    std::vector<Local> locals(workers);
    std::atomic<bool> stop{false};

    const auto t0 = std::chrono::steady_clock::now();
    auto run = [&](int w) {
        const std::int64_t begin = total * w / workers;
        const std::int64_t end = total * (w + 1) / workers;
        auto state = make_state();
        Local& loc = locals[w];
        for (std::int64_t i = begin; i < end && !stop.load(std::memory_order_relaxed); ++i) {
            try {
                const PointValue v = eval(state, mesh.decode(i), i);
                if (v.margin > loc.worst || (v.margin == loc.worst && i < loc.arg)) {
                    loc.worst = v.margin;
                    loc.arg = i;
                }
                loc.aux = std::max(loc.aux, v.aux);
                loc.aux2 = std::max(loc.aux2, v.aux2);
            } catch (const Error& e) {
                loc.error = e.what();
                loc.error_index = i;
                stop.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };

    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto& th : pool) th.join();
    }

    SweepOutcome out;
    out.points = total;
    for (const auto& loc : locals) {
        if (!loc.error.empty() &&
            (out.error.empty() || loc.error_index < out.error_index)) {
            out.error = loc.error;
            out.error_index = loc.error_index;
        }
        if (loc.arg >= 0 &&
            (out.arg_index < 0 || loc.worst > out.worst ||
             (loc.worst == out.worst && loc.arg < out.arg_index))) {
            out.worst = loc.worst;
            out.arg_index = loc.arg;
        }
        out.aux = std::max(out.aux, loc.aux);
        out.aux2 = std::max(out.aux2, loc.aux2);
    }
    out.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

inline void require_uxt_mesh(const char* who, const MeshSpec& mesh, const OcpSpec& spec) {
    if (static_cast<int>(mesh.x_axes.size()) != spec.n ||
        static_cast<int>(mesh.u_axes.size()) != spec.hm()) {
        throw Error(std::string(who) + ": the mesh must carry n state axes and h*m design axes");
    }
}

inline double lambda_max(const Eigen::MatrixXd& sym) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
               sym, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}

inline double lambda_min(const Eigen::MatrixXd& sym) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
               sym, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

/// Spectral norm of a (not necessarily symmetric) matrix.
inline double spectral_norm(const Eigen::MatrixXd& A) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0);
}

/// Worker cache of (U*, dU*/dx) keyed by the current (x,t); mesh order makes
/// consecutive points share the key.
struct UstarCache {
    UstarSession session;
    Eigen::VectorXd x_key;
    double t_key = std::nan("");
    Eigen::VectorXd Ustar;
    Eigen::MatrixXd sens;

    void refresh(const OcpSpec& spec, const Eigen::VectorXd& x, double t, double fd_base) {
        if (x_key.size() == x.size() && x_key == x && t_key == t) return;
        const NewtonResult sol = session.solve(spec, x, t);
        Ustar = sol.U;
        sens = ustar_sensitivity_with(spec, sol.U, x, t, sol.H, fd_base);
        x_key = x;
        t_key = t;
    }
};

inline CertificateReport finish_report(std::string inequality, const MeshSpec& mesh,
                                       SweepOutcome&& out, bool pass_when_nonpositive,
                                       double pass_tol) {
    CertificateReport rpt;
    rpt.inequality = std::move(inequality);
    rpt.worst_margin = out.worst;
    rpt.points_checked = out.points;
    rpt.wall_time_s = out.wall_time_s;
    rpt.error = out.error;
    if (!out.error.empty()) {
        rpt.pass = false;
        rpt.argmax = mesh.decode(out.error_index);
        return rpt;
    }
    rpt.argmax = mesh.decode(out.arg_index);
    rpt.pass = pass_when_nonpositive ? (out.worst <= pass_tol) : (out.worst > 0.0);
    return rpt;
}

}  // namespace detail

/// L[Q, eta, z, beta_z](z,t) <= 0 over a mesh of (z,t); `u_axes` carry z.
inline CertificateReport check_ineq_Q(const MetricConfig& cfg, const VirtualDynamics& vd,
                                      const MeshSpec& mesh, const SweepOptions& opts = {}) {
    if (mesh.u_axes.empty()) throw Error("check_ineq_Q: the mesh must carry z axes");
    auto out = detail::sweep_max(
        mesh, [] { return 0; },
        [&](int&, const MeshSpec::Point& p, std::int64_t) {
            return detail::PointValue{
                detail::lambda_max(l_z_operator(cfg, vd, p.u, p.t, cfg.beta_z)), 0.0};
        },
        opts);
    return detail::finish_report("Q", mesh, std::move(out), true, opts.pass_tol);
}

/// Minimum eigenvalue of H over a mesh of (U,x,t); the estimated lambda_H.
/// Passes iff the minimum is strictly positive.
inline CertificateReport check_assumption1(const OcpSpec& spec, const MeshSpec& mesh,
                                           const SweepOptions& opts = {}) {
    detail::require_uxt_mesh("check_assumption1", mesh, spec);
    auto out = detail::sweep_max(
        mesh, [] { return 0; },
        [&](int&, const MeshSpec::Point& p, std::int64_t) {
            const Eigen::MatrixXd H = hessian_H(spec, p.u, p.x, p.t);
            return detail::PointValue{-detail::lambda_min(H), 0.0};
        },
        opts);
    out.worst = -out.worst;  // back to a minimum
    return detail::finish_report("assumption1", mesh, std::move(out), false, opts.pass_tol);
}

namespace detail {

/// L[P, f_r, x, rate](x, u_r, t) assembled with analytic plant Jacobians and
/// the implicit-function sensitivity of U*. Since f_r(x,u_r,t) =
/// f(x, Pi0 U*(x,t) + u_r, t), the chain rule gives
///   df_r/dx = fx + fu Pi0 dU*/dx = fx - fu Pi0 H^{-1} dzeta/dx,
/// the closed-loop (feedback) Jacobian.
inline Eigen::MatrixXd l_fr_operator(const MetricConfig& cfg, const PlantModel& plant,
                                     const OcpSpec& spec, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& u_r, double t, double rate,
                                     UstarCache& cache, double fd_base = 1e-5) {
    cache.refresh(spec, x, t, fd_base);
    const Eigen::VectorXd u = pi0(cache.Ustar, spec.m) + u_r;
    const Eigen::MatrixXd Jfr =
        plant.fx(x, u, t) + plant.fu(x, u, t) * pi0_matrix(spec.h, spec.m) * cache.sens;
    const Eigen::MatrixXd P = cfg.P(x, t);
    Eigen::MatrixXd L = P * Jfr;
    L = (L + L.transpose()).eval();
    L += rate * P;
    if (!cfg.constant_P) {
        const Eigen::VectorXd fr = plant.f(x, u, t);
        Eigen::VectorXd xp = x;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double d = fd::step(x[i], fd_base);
            xp[i] = x[i] + d;
            const Eigen::MatrixXd hi = cfg.P(xp, t);
            xp[i] = x[i] - d;
            const Eigen::MatrixXd lo = cfg.P(xp, t);
            xp[i] = x[i];
            L += fr[i] * (hi - lo) / (2.0 * d);
        }
        const double dt_ = fd::step(t, fd_base);
        L += (cfg.P(x, t + dt_) - cfg.P(x, t - dt_)) / (2.0 * dt_);
    }
    return 0.5 * (L + L.transpose());
}

}  // namespace detail

/// Corollary inequality <P_xU K> - beta_p P <= 0 over a mesh of (U,x,t).
/// The report carries the largest norms of P_xU K (the quantity the design
/// rule 2|P_xU K| <= beta_p lambda_min(P) bounds) and of <P_xU K>.
inline CertificateReport check_ineq_GK(const MetricConfig& cfg, const PlantModel& plant,
                                       const OcpSpec& spec, const MeshSpec& mesh,
                                       const SweepOptions& opts = {}) {
    detail::require_uxt_mesh("check_ineq_GK", mesh, spec);
    auto out = detail::sweep_max(
        mesh, [] { return detail::UstarCache{}; },
        [&](detail::UstarCache& cache, const MeshSpec::Point& p, std::int64_t) {
            cache.refresh(spec, p.x, p.t, 1e-5);
            const Eigen::VectorXd u_r = pi0(p.u, spec.m) - pi0(cache.Ustar, spec.m);
            const Eigen::MatrixXd PxU =
                p_xU_with(cfg, plant, spec, p.x, u_r, p.t, cache.Ustar);
            const Eigen::MatrixXd K = k_matrix(spec, p.u, p.x, p.t, cache.sens);
            const Eigen::MatrixXd S = PxU * K;
            const double norm_plain = detail::spectral_norm(S);
            Eigen::MatrixXd G = S + S.transpose();
            const double norm_sym = detail::spectral_norm(G);
            G -= cfg.beta_p * cfg.P(p.x, p.t);
            return detail::PointValue{detail::lambda_max(0.5 * (G + G.transpose())),
                                      norm_plain, norm_sym};
        },
        opts);
    const double max_plain = out.aux;
    const double max_sym = out.aux2;
    auto rpt = detail::finish_report("GK", mesh, std::move(out), true, opts.pass_tol);
    rpt.aux = max_plain;
    rpt.aux_sym = max_sym;
    return rpt;
}

/// Theorem inequality L[P,f_r,x,beta_x] + <P_xU K> <= 0 over a mesh of
/// (U,x,t).
inline CertificateReport check_ineq_P_full(const MetricConfig& cfg, const PlantModel& plant,
                                           const OcpSpec& spec, const MeshSpec& mesh,
                                           const SweepOptions& opts = {}) {
    detail::require_uxt_mesh("check_ineq_P_full", mesh, spec);
    auto out = detail::sweep_max(
        mesh, [] { return detail::UstarCache{}; },
        [&](detail::UstarCache& cache, const MeshSpec::Point& p, std::int64_t) {
            cache.refresh(spec, p.x, p.t, 1e-5);
            const Eigen::VectorXd u_r = pi0(p.u, spec.m) - pi0(cache.Ustar, spec.m);
            Eigen::MatrixXd L =
                detail::l_fr_operator(cfg, plant, spec, p.x, u_r, p.t, cfg.beta_x, cache);
            const Eigen::MatrixXd PxU =
                p_xU_with(cfg, plant, spec, p.x, u_r, p.t, cache.Ustar);
            const Eigen::MatrixXd K = k_matrix(spec, p.u, p.x, p.t, cache.sens);
            const Eigen::MatrixXd S = PxU * K;
            L += S + S.transpose();
            return detail::PointValue{detail::lambda_max(0.5 * (L + L.transpose())), 0.0};
        },
        opts);
    return detail::finish_report("P-full", mesh, std::move(out), true, opts.pass_tol);
}

/// Corollary inequality L[P, f_r, x, beta_x + beta_p] <= 0 over a mesh of
/// (x,t) with optional u_r axes.
inline CertificateReport check_ineq_P_opt(const MetricConfig& cfg, const PlantModel& plant,
                                          const OcpSpec& spec, const MeshSpec& mesh,
                                          const SweepOptions& opts = {}) {
    if (static_cast<int>(mesh.x_axes.size()) != spec.n ||
        (!mesh.u_axes.empty() && static_cast<int>(mesh.u_axes.size()) != spec.m)) {
        throw Error("check_ineq_P_opt: the mesh must carry n state axes and optionally m u_r axes");
    }
    auto out = detail::sweep_max(
        mesh, [] { return detail::UstarCache{}; },
        [&](detail::UstarCache& cache, const MeshSpec::Point& p, std::int64_t) {
            const Eigen::VectorXd u_r =
                p.u.size() > 0 ? p.u : Eigen::VectorXd::Zero(spec.m);
            const Eigen::MatrixXd L = detail::l_fr_operator(cfg, plant, spec, p.x, u_r, p.t,
                                                            cfg.beta_x + cfg.beta_p, cache);
            return detail::PointValue{detail::lambda_max(L), 0.0};
        },
        opts);
    return detail::finish_report("P-opt", mesh, std::move(out), true, opts.pass_tol);
}

/// Mesh extrema feeding the scalar sufficient condition of the GK
/// inequality: 2 c_u^f c_x^zeta p_max <= beta_p p_min lambda_H.
struct ConstantEstimates {
    double lambda_H = 0.0;   ///< min eigenvalue of H
    double c_x_zeta = 0.0;   ///< max |dzeta/dx|
    double c_u_f = 0.0;      ///< max |df/du|
    double p_min = 0.0;
    double p_max = 0.0;
    std::int64_t points_checked = 0;
    double wall_time_s = 0.0;

    bool sufficient_condition(double beta_p) const {
        return 2.0 * c_u_f * c_x_zeta * p_max <= beta_p * p_min * lambda_H;
    }
};

/// Sweeps a mesh of (U,x,t) for the constants of the assumptions.
inline ConstantEstimates estimate_constants(const MetricConfig& cfg, const PlantModel& plant,
                                            const OcpSpec& spec, const MeshSpec& mesh,
                                            const SweepOptions& opts = {}) {
    detail::require_uxt_mesh("estimate_constants", mesh, spec);
    mesh.validate();
    struct Acc {
        double lambda_H = std::numeric_limits<double>::infinity();
        double c_x_zeta = 0.0, c_u_f = 0.0;
        double p_min = std::numeric_limits<double>::infinity(), p_max = 0.0;
    };
    const std::int64_t total = mesh.total_points();
    const int workers = std::min<std::int64_t>(detail::resolve_workers(opts.workers), total);
    std::vector<Acc> accs(workers);
    const auto t0 = std::chrono::steady_clock::now();
    auto run = [&](int w) {
        Acc& a = accs[w];
        for (std::int64_t i = total * w / workers; i < total * (w + 1) / workers; ++i) {
            const auto p = mesh.decode(i);
            a.lambda_H =
                std::min(a.lambda_H, detail::lambda_min(hessian_H(spec, p.u, p.x, p.t)));
            a.c_x_zeta =
                std::max(a.c_x_zeta, detail::spectral_norm(zeta_x(spec, p.u, p.x, p.t)));
            a.c_u_f = std::max(a.c_u_f,
                               detail::spectral_norm(plant.fu(p.x, pi0(p.u, spec.m), p.t)));
            const Eigen::MatrixXd P = cfg.P(p.x, p.t);
            a.p_min = std::min(a.p_min, detail::lambda_min(P));
            a.p_max = std::max(a.p_max, detail::lambda_max(P));
        }
    };
    if (workers == 1) {
        run(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
        for (auto& th : pool) th.join();
    }
    ConstantEstimates est;
    est.lambda_H = std::numeric_limits<double>::infinity();
    est.p_min = std::numeric_limits<double>::infinity();
    for (const auto& a : accs) {
        est.lambda_H = std::min(est.lambda_H, a.lambda_H);
        est.c_x_zeta = std::max(est.c_x_zeta, a.c_x_zeta);
        est.c_u_f = std::max(est.c_u_f, a.c_u_f);
        est.p_min = std::min(est.p_min, a.p_min);
        est.p_max = std::max(est.p_max, a.p_max);
    }
    est.points_checked = total;
    est.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return est;
}

}  // namespace cmpc
