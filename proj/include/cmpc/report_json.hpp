#pragma once

#include <json.hpp>

#include <cmath>

#include "cmpc/certificates.hpp"
#include "cmpc/lemma3.hpp"

namespace cmpc {

inline nlohmann::json to_json(const MeshSpec::Point& p) {
    nlohmann::json j;
    j["x"] = std::vector<double>(p.x.begin(), p.x.end());
    j["t"] = p.t;
    if (p.u.size() > 0) j["U"] = std::vector<double>(p.u.begin(), p.u.end());
    return j;
}

/// Schema: {inequality, pass, worst_margin, argmax_point:{x,t,U?},
/// points_checked, wall_time_s} plus max_norm_PxUK for the GK check and
/// error when a solver failed mid-sweep.
inline nlohmann::json to_json(const CertificateReport& r) {
    nlohmann::json j;
    j["inequality"] = r.inequality;
    j["pass"] = r.pass;
    j["worst_margin"] = r.worst_margin;
    j["argmax_point"] = to_json(r.argmax);
    j["points_checked"] = r.points_checked;
    j["wall_time_s"] = r.wall_time_s;
    if (!std::isnan(r.aux)) j["max_norm_PxUK"] = r.aux;
    if (!std::isnan(r.aux_sym)) j["max_norm_sym_PxUK"] = r.aux_sym;
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

inline nlohmann::json to_json(const ConstantEstimates& c) {
    nlohmann::json j;
    j["lambda_H"] = c.lambda_H;
    j["c_x_zeta"] = c.c_x_zeta;
    j["c_u_f"] = c.c_u_f;
    j["p_min"] = c.p_min;
    j["p_max"] = c.p_max;
    j["points_checked"] = c.points_checked;
    j["wall_time_s"] = c.wall_time_s;
    return j;
}

inline nlohmann::json to_json(const PerturbationResult& r) {
    nlohmann::json j;
    j["max_abs_re"] = r.max_abs_re;
    j["argmax_run"] = r.argmax_run;
    j["argmax_time"] = r.argmax_time;
    j["seed"] = r.seed;
    j["n_runs"] = r.runs.size();
    return j;
}

}  // namespace cmpc
