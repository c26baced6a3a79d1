#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "cmpc/contraction.hpp"
#include "cmpc/continuation.hpp"
#include "cmpc/errors.hpp"
#include "cmpc/ocp.hpp"
#include "cmpc/plant.hpp"

namespace cmpc {

struct PerturbationOptions {
    int n_perturb = 100;
    double epsilon = 1e-3;  ///< perturbations drawn uniformly from [-eps, eps]^(n+hm)
    double tau = 1e-3;
    double t_end = 5.0;
    std::uint64_t seed = 0;
};

/// Per-time series of one perturbation run.
struct PerturbationSeries {
    std::vector<double> t, v_delta, vdot_delta, d, e, r_e;

    std::string csv() const {
        std::string out = "t,V_delta,Vdot_delta,d,e,r_e\n";
        for (size_t i = 0; i < t.size(); ++i) {
            detail::print_g17(out, t[i]);
            out += ',';
            detail::print_g17(out, v_delta[i]);
            out += ',';
            detail::print_g17(out, vdot_delta[i]);
            out += ',';
            detail::print_g17(out, d[i]);
            out += ',';
            detail::print_g17(out, e[i]);
            out += ',';
            detail::print_g17(out, r_e[i]);
            out += '\n';
        }
        return out;
    }

    void write_csv(std::ostream& os) const { os << csv(); }
};

struct PerturbationResult {
    double max_abs_re = 0.0;
    int argmax_run = -1;
    double argmax_time = 0.0;
    std::uint64_t seed = 0;
    std::vector<PerturbationSeries> runs;
};

/// Numerical check of the decomposition identity d = V_delta' + gamma
/// V_delta along perturbed closed-loop trajectories:
///
///  - simulate the nominal trajectory from s0 and `n_perturb` trajectories
///    from uniformly perturbed initial conditions,
///  - set delta_s(t) = s_p(t) - s(t), V_delta = delta_s' M(s,t) delta_s,
///  - form d from the block decomposition at the nominal state, take
///    V_delta' by the centered difference in t, and report the largest
///    |e|/V_delta with e = d - V_delta' - gamma V_delta.
///
/// The error rate is expected to be O(|delta_s|) + O(tau).
inline PerturbationResult verify_lemma3(const MetricConfig& cfg, const PlantModel& plant,
                                        const OcpSpec& spec, const VirtualDynamics& vd,
                                        const AugmentedState& s0,
                                        const PerturbationOptions& opts = {}) {
    if (opts.n_perturb < 1) throw Error("verify_lemma3: n_perturb must be >= 1");
    const int dim = spec.n + spec.hm();

    const auto nominal = simulate_states(plant, spec, vd, s0, opts.t_end, opts.tau);
    const size_t nsamp = nominal.size();

    std::mt19937_64 gen(opts.seed);
    std::uniform_real_distribution<double> uni(-opts.epsilon, opts.epsilon);
    std::vector<std::vector<AugmentedState>> perturbed;
    perturbed.reserve(opts.n_perturb);
    for (int p = 0; p < opts.n_perturb; ++p) {
        Eigen::VectorXd ds(dim);
        for (int i = 0; i < dim; ++i) ds[i] = uni(gen);
        const auto sp0 = AugmentedState::unflat(s0.flat() + ds, spec.n, s0.t);
        perturbed.push_back(simulate_states(plant, spec, vd, sp0, opts.t_end, opts.tau));
    }

    // V_delta at every sample of every run; the metric is shared across runs.
    std::vector<std::vector<double>> V(opts.n_perturb, std::vector<double>(nsamp));
    for (size_t i = 0; i < nsamp; ++i) {
        const auto& s = nominal[i];
        const Eigen::MatrixXd M = metric_M(cfg, spec, s.U, s.x, s.t);
        const Eigen::VectorXd sflat = s.flat();
        for (int p = 0; p < opts.n_perturb; ++p) {
            const Eigen::VectorXd ds = perturbed[p][i].flat() - sflat;
            const double v = ds.dot(M * ds);
            if (!(v > 0.0)) {
                throw MetricViolation("V_delta is not positive at t = " + std::to_string(s.t) +
                                          " (value " + std::to_string(v) + ")",
                                      v, s.t);
            }
            V[p][i] = v;
        }
    }

    PerturbationResult result;
    result.seed = opts.seed;
    result.runs.resize(opts.n_perturb);
    for (auto& run : result.runs) {
        run.t.reserve(nsamp - 2);
        run.v_delta.reserve(nsamp - 2);
        run.vdot_delta.reserve(nsamp - 2);
        run.d.reserve(nsamp - 2);
        run.e.reserve(nsamp - 2);
        run.r_e.reserve(nsamp - 2);
    }

    // Interior samples only (the centered difference needs both neighbours).
    UstarSession session;
    for (size_t i = 1; i + 1 < nsamp; ++i) {
        const auto& s = nominal[i];
        const Eigen::MatrixXd D = lemma3_matrix(cfg, plant, spec, vd, s, session);
        const Eigen::VectorXd sflat = s.flat();
        for (int p = 0; p < opts.n_perturb; ++p) {
            const Eigen::VectorXd ds = perturbed[p][i].flat() - sflat;
            const double d = ds.dot(D * ds);
            const double vdot = (V[p][i + 1] - V[p][i - 1]) / (2.0 * opts.tau);
            const double e = d - vdot - cfg.gamma * V[p][i];
            const double re = e / V[p][i];
            auto& run = result.runs[p];
            run.t.push_back(s.t);
            run.v_delta.push_back(V[p][i]);
            run.vdot_delta.push_back(vdot);
            run.d.push_back(d);
            run.e.push_back(e);
            run.r_e.push_back(re);
            if (std::abs(re) > result.max_abs_re) {
                result.max_abs_re = std::abs(re);
                result.argmax_run = p;
                result.argmax_time = s.t;
            }
        }
    }
    return result;
}

}  // namespace cmpc
