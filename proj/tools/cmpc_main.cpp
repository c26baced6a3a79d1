// Batch front-end: closed-loop simulation, matrix-inequality certification,
// constant estimation, and the perturbation verification of the metric
// decomposition, driven by CLI flags or a JSON config.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cmpc/cmpc.hpp"
#include "cmpc/report_json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
    std::string preset = "paper-sec4";
    std::string out_dir = "out";
    std::string config_path;
};

cmpc::benchmark::Problem load_preset(const std::string& name) {
    if (name != "paper-sec4") {
        throw std::invalid_argument("unknown preset '" + name + "' (available: paper-sec4)");
    }
    return cmpc::benchmark::build();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Fills a value from a JSON config section unless the flag was given on the
/// command line (explicit flags win).
template <class T>
void cfg_override(const CLI::App* cmd, const json& section, const std::string& key, T& var) {
    if (!section.contains(key)) return;
    const CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt != nullptr && opt->count() > 0) return;
    section.at(key).get_to(var);
}

void cfg_override(const CLI::App* cmd, const json& section, const std::string& key,
                  std::vector<int>& var) {
    if (!section.contains(key)) return;
    const CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt != nullptr && opt->count() > 0) return;
    const auto& v = section.at(key);
    var.clear();
    if (v.is_array()) {
        for (const auto& e : v) var.push_back(e.get<int>());
    } else {
        var.push_back(v.get<int>());
    }
}

void cfg_override(const CLI::App* cmd, const json& section, const std::string& key,
                  std::optional<double>& var) {
    if (!section.contains(key)) return;
    const CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt != nullptr && opt->count() > 0) return;
    var = section.at(key).get<double>();
}

int run_simulate(const CommonArgs& common, const std::vector<int>& ics, bool all_ics,
                 bool optimal, double tau, double t_end, double threshold) {
    const auto prob = load_preset(common.preset);
    const auto all = cmpc::benchmark::initial_conditions();
    std::vector<int> selected = ics;
    if (all_ics || selected.empty()) selected = {1, 2, 3};

    fs::create_directories(common.out_dir);
    json summary;
    summary["preset"] = common.preset;
    summary["tau"] = tau;
    summary["t_end"] = t_end;
    summary["optimal"] = optimal;

    std::map<int, cmpc::TrajectoryRecord> records;
    for (int ic : selected) {
        if (ic < 1 || ic > 3) throw std::invalid_argument("--ic must be 1, 2, or 3");
        const auto& s0 = all[ic - 1];
        cmpc::TrajectoryRecord rec =
            optimal ? cmpc::simulate_optimal(prob.plant, prob.spec, s0.x, s0.t, t_end, tau)
                    : cmpc::simulate(prob.plant, prob.spec, prob.vd, s0, t_end, tau);
        const std::string name =
            "trajectory_ic" + std::to_string(ic) + (optimal ? "_optimal" : "") + ".csv";
        write_text(fs::path(common.out_dir) / name, rec.csv());

        json tj;
        tj["ic"] = ic;
        tj["file"] = name;
        tj["initial_zeta_norm"] = rec.samples.front().zeta_norm;
        tj["final_zeta_norm"] = rec.samples.back().zeta_norm;
        tj["zeta_ratio"] = rec.samples.back().zeta_norm / rec.samples.front().zeta_norm;
        tj["final_cost"] = rec.samples.back().cost;
        summary["trajectories"].push_back(tj);
        records.emplace(ic, std::move(rec));
    }

    if (records.size() > 1) {
        bool converged = true;
        for (auto i = records.begin(); i != records.end(); ++i) {
            for (auto j = std::next(i); j != records.end(); ++j) {
                const double dist =
                    (i->second.samples.back().x - j->second.samples.back().x).norm();
                summary["pairwise_distance"]
                       [std::to_string(i->first) + "-" + std::to_string(j->first)] = dist;
                converged = converged && dist < threshold;
            }
        }
        summary["convergence_threshold"] = threshold;
        summary["converged"] = converged;
    }
    write_json(fs::path(common.out_dir) / "summary.json", summary);
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int run_certify(const CommonArgs& common, std::vector<std::string> ineqs,
                const std::string& mesh_scale, int workers, std::int64_t guard,
                std::optional<double> beta_x, std::optional<double> beta_z,
                std::optional<double> beta_p) {
    auto prob = load_preset(common.preset);
    if (beta_x) prob.metric.beta_x = *beta_x;
    if (beta_z) prob.metric.beta_z = *beta_z;
    if (beta_p) prob.metric.beta_p = *beta_p;

    if (ineqs.empty() || (ineqs.size() == 1 && ineqs[0] == "all")) {
        ineqs = {"Q", "assumption1", "GK", "P-opt", "P-full"};
    }
    const bool paper_scale = mesh_scale == "paper";
    if (!paper_scale && mesh_scale != "desk") {
        throw std::invalid_argument("--mesh must be 'desk' or 'paper'");
    }

    cmpc::SweepOptions opts;
    opts.workers = workers;

    fs::create_directories(common.out_dir);
    bool any_fail = false;
    bool any_error = false;
    for (const auto& name : ineqs) {
        cmpc::CertificateReport rpt;
        try {
            if (name == "Q") {
                auto mesh = cmpc::benchmark::mesh_q(-3.0, 3.0, paper_scale ? 13 : 7);
                mesh.guard = guard;
                rpt = cmpc::check_ineq_Q(prob.metric, prob.vd, mesh, opts);
            } else if (name == "assumption1") {
                auto mesh = paper_scale ? cmpc::benchmark::mesh_gk()
                                        : cmpc::benchmark::mesh_gk_desk();
                mesh.guard = guard;
                rpt = cmpc::check_assumption1(prob.spec, mesh, opts);
            } else if (name == "GK") {
                auto mesh = paper_scale ? cmpc::benchmark::mesh_gk()
                                        : cmpc::benchmark::mesh_gk_desk();
                mesh.guard = guard;
                rpt = cmpc::check_ineq_GK(prob.metric, prob.plant, prob.spec, mesh, opts);
            } else if (name == "P-opt") {
                auto mesh = paper_scale ? cmpc::benchmark::mesh_p_opt()
                                        : cmpc::benchmark::mesh_p_opt_desk();
                mesh.guard = guard;
                rpt = cmpc::check_ineq_P_opt(prob.metric, prob.plant, prob.spec, mesh, opts);
            } else if (name == "P-full") {
                auto mesh = paper_scale ? cmpc::benchmark::mesh_gk()
                                        : cmpc::benchmark::mesh_gk_desk();
                mesh.guard = guard;
                rpt = cmpc::check_ineq_P_full(prob.metric, prob.plant, prob.spec, mesh, opts);
            } else {
                throw std::invalid_argument(
                    "unknown inequality '" + name +
                    "' (available: Q, assumption1, GK, P-opt, P-full, all)");
            }
        } catch (const cmpc::Error& e) {
            rpt.inequality = name;
            rpt.pass = false;
            rpt.error = e.what();
            any_error = true;
        }
        const json j = cmpc::to_json(rpt);
        write_json(fs::path(common.out_dir) / ("certificate_" + name + ".json"), j);
        std::cout << j.dump(2) << "\n";
        if (!rpt.pass) any_fail = true;
    }
    if (any_error) return 2;
    return any_fail ? 1 : 0;
}

int run_verify_lemma3(const CommonArgs& common, int n_perturb, double epsilon, double tau,
                      double t_end, std::uint64_t seed, double bound, double kappa, double gamma,
                      bool summary_only) {
    auto prob = load_preset(common.preset);
    prob.metric.kappa = kappa;
    prob.metric.gamma = gamma;

    cmpc::PerturbationOptions opts;
    opts.n_perturb = n_perturb;
    opts.epsilon = epsilon;
    opts.tau = tau;
    opts.t_end = t_end;
    opts.seed = seed;

    const auto s0 = cmpc::benchmark::initial_conditions()[0];
    const auto result = cmpc::verify_lemma3(prob.metric, prob.plant, prob.spec, prob.vd, s0, opts);

    fs::create_directories(common.out_dir);
    if (!summary_only) {
        for (size_t i = 0; i < result.runs.size(); ++i) {
            write_text(fs::path(common.out_dir) / ("lemma3_run" + std::to_string(i) + ".csv"),
                       result.runs[i].csv());
        }
    }
    json j = cmpc::to_json(result);
    j["bound"] = bound;
    j["kappa"] = kappa;
    j["gamma"] = gamma;
    j["epsilon"] = epsilon;
    j["tau"] = tau;
    j["t_end"] = t_end;
    j["pass"] = result.max_abs_re <= bound;
    write_json(fs::path(common.out_dir) / "lemma3_summary.json", j);
    std::cout << j.dump(2) << "\n";
    return result.max_abs_re <= bound ? 0 : 1;
}

int run_estimate_constants(const CommonArgs& common, const std::string& mesh_scale, int workers,
                           std::int64_t guard, double beta_p) {
    const auto prob = load_preset(common.preset);
    auto mesh =
        mesh_scale == "paper" ? cmpc::benchmark::mesh_gk() : cmpc::benchmark::mesh_gk_desk();
    mesh.guard = guard;
    cmpc::SweepOptions opts;
    opts.workers = workers;
    const auto est = cmpc::estimate_constants(prob.metric, prob.plant, prob.spec, mesh, opts);

    fs::create_directories(common.out_dir);
    json j = cmpc::to_json(est);
    j["beta_p"] = beta_p;
    j["sufficient_condition_holds"] = est.sufficient_condition(beta_p);
    write_json(fs::path(common.out_dir) / "constants.json", j);
    std::cout << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Continuation-method suboptimal MPC and contraction certification"};
    app.require_subcommand(1);

    CommonArgs common;
    app.add_option("--config", common.config_path, "JSON config file; flags override");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Integrate the closed loop and write CSVs");
    std::vector<int> sim_ics;
    bool sim_all = false, sim_optimal = false;
    double sim_tau = 1e-3, sim_t_end = 5.0, sim_threshold = 1e-2;
    sim->add_option("--preset", common.preset, "Problem preset id");
    sim->add_option("--out", common.out_dir, "Output directory");
    sim->add_option("--ic", sim_ics, "Initial-condition index (1..3), repeatable");
    sim->add_flag("--all-initial-conditions", sim_all, "Simulate all three initial conditions");
    sim->add_flag("--optimal", sim_optimal, "Track the exact optimum instead (Newton oracle)");
    sim->add_option("--tau", sim_tau, "Integrator step");
    sim->add_option("--t-end", sim_t_end, "Simulation end time");
    sim->add_option("--threshold", sim_threshold, "Pairwise convergence threshold on x");

    // certify
    auto* cert = app.add_subcommand("certify", "Check matrix inequalities over meshes");
    std::vector<std::string> cert_ineqs;
    std::string cert_mesh = "desk";
    int cert_workers = 0;
    std::int64_t cert_guard = 1'000'000'000;
    std::optional<double> cert_bx, cert_bz, cert_bp;
    cert->add_option("--preset", common.preset, "Problem preset id");
    cert->add_option("--out", common.out_dir, "Output directory");
    cert->add_option("--ineq", cert_ineqs,
                     "Inequalities to check: Q, assumption1, GK, P-opt, P-full, all");
    cert->add_option("--mesh", cert_mesh, "Mesh preset scale: desk or paper");
    cert->add_option("--workers", cert_workers, "Worker threads (0: CMPC_WORKERS env or auto)");
    cert->add_option("--guard", cert_guard, "Mesh point-count guard");
    cert->add_option("--beta-x", cert_bx, "Override beta_x");
    cert->add_option("--beta-z", cert_bz, "Override beta_z");
    cert->add_option("--beta-p", cert_bp, "Override beta_p");

    // verify-lemma3
    auto* ver = app.add_subcommand("verify-lemma3",
                                   "Perturbation check of the metric decomposition identity");
    int ver_n = 100;
    double ver_eps = 1e-3, ver_tau = 1e-3, ver_t_end = 5.0, ver_bound = 5e-3;
    double ver_kappa = 1.0, ver_gamma = 0.1;
    std::uint64_t ver_seed = 0;
    bool ver_summary_only = false;
    ver->add_option("--preset", common.preset, "Problem preset id");
    ver->add_option("--out", common.out_dir, "Output directory");
    ver->add_option("--n-perturb", ver_n, "Number of perturbations");
    ver->add_option("--epsilon", ver_eps, "Perturbation box half-width");
    ver->add_option("--tau", ver_tau, "Integrator step");
    ver->add_option("--t-end", ver_t_end, "Simulation end time");
    ver->add_option("--seed", ver_seed, "Random seed (recorded in output)");
    ver->add_option("--bound", ver_bound, "Pass bound on max |r_e|");
    ver->add_option("--kappa", ver_kappa, "Metric weight kappa");
    ver->add_option("--gamma", ver_gamma, "Contraction rate gamma");
    ver->add_flag("--summary-only", ver_summary_only, "Skip the per-run CSV files");

    // estimate-constants
    auto* est = app.add_subcommand("estimate-constants",
                                   "Mesh extrema of lambda_H, c_x_zeta, c_u_f, p_min, p_max");
    std::string est_mesh = "desk";
    int est_workers = 0;
    std::int64_t est_guard = 1'000'000'000;
    double est_bp = 0.032;
    est->add_option("--preset", common.preset, "Problem preset id");
    est->add_option("--out", common.out_dir, "Output directory");
    est->add_option("--mesh", est_mesh, "Mesh preset scale: desk or paper");
    est->add_option("--workers", est_workers, "Worker threads (0: CMPC_WORKERS env or auto)");
    est->add_option("--guard", est_guard, "Mesh point-count guard");
    est->add_option("--beta-p", est_bp, "beta_p for the scalar sufficient condition");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (!common.config_path.empty()) {
            std::ifstream is(common.config_path);
            if (!is) throw std::invalid_argument("cannot read config " + common.config_path);
            const json cfg = json::parse(is);
            if (sim->parsed() && cfg.contains("simulate")) {
                const json& c = cfg.at("simulate");
                cfg_override(sim, c, "preset", common.preset);
                cfg_override(sim, c, "out", common.out_dir);
                cfg_override(sim, c, "ic", sim_ics);
                cfg_override(sim, c, "all-initial-conditions", sim_all);
                cfg_override(sim, c, "optimal", sim_optimal);
                cfg_override(sim, c, "tau", sim_tau);
                cfg_override(sim, c, "t-end", sim_t_end);
                cfg_override(sim, c, "threshold", sim_threshold);
            }
            if (cert->parsed() && cfg.contains("certify")) {
                const json& c = cfg.at("certify");
                cfg_override(cert, c, "preset", common.preset);
                cfg_override(cert, c, "out", common.out_dir);
                cfg_override(cert, c, "ineq", cert_ineqs);
                cfg_override(cert, c, "mesh", cert_mesh);
                cfg_override(cert, c, "workers", cert_workers);
                cfg_override(cert, c, "guard", cert_guard);
                cfg_override(cert, c, "beta-x", cert_bx);
                cfg_override(cert, c, "beta-z", cert_bz);
                cfg_override(cert, c, "beta-p", cert_bp);
            }
            if (ver->parsed() && cfg.contains("verify-lemma3")) {
                const json& c = cfg.at("verify-lemma3");
                cfg_override(ver, c, "preset", common.preset);
                cfg_override(ver, c, "out", common.out_dir);
                cfg_override(ver, c, "n-perturb", ver_n);
                cfg_override(ver, c, "epsilon", ver_eps);
                cfg_override(ver, c, "tau", ver_tau);
                cfg_override(ver, c, "t-end", ver_t_end);
                cfg_override(ver, c, "seed", ver_seed);
                cfg_override(ver, c, "bound", ver_bound);
                cfg_override(ver, c, "kappa", ver_kappa);
                cfg_override(ver, c, "gamma", ver_gamma);
                cfg_override(ver, c, "summary-only", ver_summary_only);
            }
            if (est->parsed() && cfg.contains("estimate-constants")) {
                const json& c = cfg.at("estimate-constants");
                cfg_override(est, c, "preset", common.preset);
                cfg_override(est, c, "out", common.out_dir);
                cfg_override(est, c, "mesh", est_mesh);
                cfg_override(est, c, "workers", est_workers);
                cfg_override(est, c, "guard", est_guard);
                cfg_override(est, c, "beta-p", est_bp);
            }
        }

        if (sim->parsed()) {
            return run_simulate(common, sim_ics, sim_all, sim_optimal, sim_tau, sim_t_end,
                                sim_threshold);
        }
        if (cert->parsed()) {
            return run_certify(common, cert_ineqs, cert_mesh, cert_workers, cert_guard, cert_bx,
                               cert_bz, cert_bp);
        }
        if (ver->parsed()) {
            return run_verify_lemma3(common, ver_n, ver_eps, ver_tau, ver_t_end, ver_seed,
                                     ver_bound, ver_kappa, ver_gamma, ver_summary_only);
        }
        if (est->parsed()) {
            return run_estimate_constants(common, est_mesh, est_workers, est_guard, est_bp);
        }
    } catch (const cmpc::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const cmpc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
