#pragma once

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "quadsim/autopilot.hpp"
#include "quadsim/deadzone.hpp"
#include "quadsim/metrics.hpp"
#include "quadsim/mission.hpp"
#include "quadsim/rcac.hpp"
#include "quadsim/vehicle.hpp"

namespace quadsim {

using nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr int kConfigSchemaVersion = 1;

struct ScenarioConfig {
    int schema_version{kConfigSchemaVersion};
    VehicleParams vehicle;
    AutopilotConfig autopilot;
    MissionPlan mission;         // empty waypoints = generate from the hilbert block
    int hilbert_order{2};
    double hilbert_side_m{6.0};
    SensorNoiseConfig noise;
    MetricsConfig metrics;
    double duration_s{60.0};
    std::string output_dir{"out"};

    std::vector<Vec3> waypoints() const {
        if (!mission.waypoints.empty()) return mission.waypoints;
        return hilbert_waypoints(hilbert_order, hilbert_side_m, mission.altitude);
    }

    Mission build_mission() const {
        MissionPlan plan = mission;
        plan.waypoints = waypoints();
        return Mission(plan);
    }

    void validate() const {
        if (schema_version != kConfigSchemaVersion) {
            throw ConfigError("schema_version: expected " + std::to_string(kConfigSchemaVersion));
        }
        try {
            vehicle.validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("vehicle: ") + e.what());
        }
        try {
            autopilot.validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("autopilot: ") + e.what());
        }
        try {
            noise.validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("noise: ") + e.what());
        }
        try {
            build_mission();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("mission: ") + e.what());
        }
        if (!(duration_s > 0.0)) throw ConfigError("duration_s: must be > 0");
    }
};

namespace config_io {

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ConfigError("expected an array of 3 numbers");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline json to_json(const DeadzoneConfig& dz) {
    return json{{"variant", to_string(dz.variant)},
                {"s", dz.s},
                {"s1", dz.s1},
                {"alpha", dz.alpha},
                {"s2", dz.s2}};
}

inline DeadzoneConfig deadzone_from(const json& j, const DeadzoneConfig& fallback) {
    if (j.is_null()) return fallback;
    const std::string variant = j.value("variant", std::string(to_string(fallback.variant)));
    if (variant == "none") return DeadzoneConfig::none();
    if (variant == "n1") return DeadzoneConfig::n1(j.value("s", fallback.s));
    if (variant == "n2") {
        return DeadzoneConfig::n2(j.value("s1", fallback.s1), j.value("alpha", fallback.alpha));
    }
    if (variant == "n3") {
        return DeadzoneConfig::n3(j.value("s1", fallback.s1), j.value("s2", fallback.s2));
    }
    throw ConfigError("deadzone.variant: unknown value '" + variant + "'");
}

inline json to_json(const RcacConfig& rc) {
    json j{{"p0", rc.p0},
           {"filter_coeffs", rc.filter_coeffs},
           {"forgetting", rc.forgetting},
           {"integrator_clamp", rc.integrator_clamp},
           {"adaptation_enabled", rc.adaptation_enabled},
           {"freeze_on_zero", rc.freeze_on_zero}};
    if (rc.theta0.size() > 0) {
        j["theta0"] = std::vector<double>(rc.theta0.data(), rc.theta0.data() + rc.theta0.size());
    }
    return j;
}

inline RcacConfig rcac_from(const json& j, RcacConfig rc) {
    if (j.is_null()) return rc;
    rc.p0 = j.value("p0", rc.p0);
    rc.filter_coeffs = j.value("filter_coeffs", rc.filter_coeffs);
    rc.forgetting = j.value("forgetting", rc.forgetting);
    rc.integrator_clamp = j.value("integrator_clamp", rc.integrator_clamp);
    rc.adaptation_enabled = j.value("adaptation_enabled", rc.adaptation_enabled);
    rc.freeze_on_zero = j.value("freeze_on_zero", rc.freeze_on_zero);
    if (j.contains("theta0")) {
        const auto v = j["theta0"].get<std::vector<double>>();
        rc.theta0 = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
    }
    return rc;
}

}  // namespace config_io

inline json to_json(const ScenarioConfig& c) {
    using config_io::to_json;
    json j;
    j["schema_version"] = c.schema_version;
    j["duration_s"] = c.duration_s;
    j["output_dir"] = c.output_dir;

    j["vehicle"] = {{"mass_kg", c.vehicle.mass},
                    {"inertia_kgm2", to_json(c.vehicle.inertia)},
                    {"arm_length_m", c.vehicle.arm_length},
                    {"thrust_coeff", c.vehicle.thrust_coeff},
                    {"torque_coeff", c.vehicle.torque_coeff},
                    {"rotor_max_rad_s", c.vehicle.rotor_max},
                    {"rotor_time_constant_s", c.vehicle.rotor_time_constant},
                    {"drag_coeff", to_json(c.vehicle.drag_coeff)}};

    const auto& a = c.autopilot;
    j["autopilot"] = {{"gr_gains", to_json(a.gr_gains)},
                      {"gv_p", to_json(a.gv_p)},
                      {"gv_i", to_json(a.gv_i)},
                      {"gv_d", to_json(a.gv_d)},
                      {"gq_time_constant_s", a.gq_time_constant},
                      {"gw_p", to_json(a.gw_p)},
                      {"gw_i", to_json(a.gw_i)},
                      {"gv_integrator_clamp", a.gv_integrator_clamp},
                      {"gw_integrator_clamp", a.gw_integrator_clamp},
                      {"gyro_filter_hz", a.gyro_filter_hz},
                      {"outer_rate_hz", a.outer_rate_hz},
                      {"inner_rate_hz", a.inner_rate_hz},
                      {"adaptive_r", a.adaptive_r},
                      {"adaptive_v", a.adaptive_v},
                      {"adaptive_q", a.adaptive_q},
                      {"adaptive_w", a.adaptive_w},
                      {"rcac_r", to_json(a.rcac_r)},
                      {"rcac_v", to_json(a.rcac_v)},
                      {"rcac_q", to_json(a.rcac_q)},
                      {"rcac_w", to_json(a.rcac_w)},
                      {"deadzone", to_json(a.deadzone)},
                      {"limits",
                       {{"max_tilt_rad", a.limits.max_tilt_rad},
                        {"max_thrust_n", a.limits.max_thrust_n},
                        {"max_moment_nm", a.limits.max_moment_nm},
                        {"max_velocity_mps", a.limits.max_velocity_mps}}}};

    json mission{{"cruise_speed_mps", c.mission.cruise_speed},
                 {"hold_time_s", c.mission.hold_time_s},
                 {"altitude_m", c.mission.altitude},
                 {"hilbert_order", c.hilbert_order},
                 {"hilbert_side_m", c.hilbert_side_m}};
    if (!c.mission.waypoints.empty()) {
        json wps = json::array();
        for (const auto& w : c.mission.waypoints) wps.push_back(to_json(w));
        mission["waypoints"] = wps;
    }
    j["mission"] = mission;

    j["noise"] = {{"gyro_std_rad_s", c.noise.gyro_std},
                  {"pos_std_m", c.noise.pos_std},
                  {"vel_std_mps", c.noise.vel_std},
                  {"seed", c.noise.seed}};

    j["metrics"] = {{"hf_cutoff_hz", c.metrics.hf_cutoff_hz},
                    {"oscillation_threshold", c.metrics.oscillation_threshold},
                    {"edge_trim_s", c.metrics.edge_trim_s}};
    return j;
}

inline ScenarioConfig scenario_from_json(const json& j) {
    using namespace config_io;
    ScenarioConfig c;
    auto in = [&](const char* name, auto fn) {
        try {
            if (j.contains(name)) fn(j.at(name));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(name) + "." + e.what());
        } catch (const std::exception& e) {
            throw ConfigError(std::string(name) + ": " + e.what());
        }
    };

    c.schema_version = j.value("schema_version", c.schema_version);
    c.duration_s = j.value("duration_s", c.duration_s);
    c.output_dir = j.value("output_dir", c.output_dir);

    in("vehicle", [&](const json& v) {
        c.vehicle.mass = v.value("mass_kg", c.vehicle.mass);
        if (v.contains("inertia_kgm2")) c.vehicle.inertia = vec3_from(v["inertia_kgm2"]);
        c.vehicle.arm_length = v.value("arm_length_m", c.vehicle.arm_length);
        c.vehicle.thrust_coeff = v.value("thrust_coeff", c.vehicle.thrust_coeff);
        c.vehicle.torque_coeff = v.value("torque_coeff", c.vehicle.torque_coeff);
        c.vehicle.rotor_max = v.value("rotor_max_rad_s", c.vehicle.rotor_max);
        c.vehicle.rotor_time_constant =
            v.value("rotor_time_constant_s", c.vehicle.rotor_time_constant);
        if (v.contains("drag_coeff")) c.vehicle.drag_coeff = vec3_from(v["drag_coeff"]);
    });

    in("autopilot", [&](const json& a) {
        auto& ap = c.autopilot;
        if (a.contains("gr_gains")) ap.gr_gains = vec3_from(a["gr_gains"]);
        if (a.contains("gv_p")) ap.gv_p = vec3_from(a["gv_p"]);
        if (a.contains("gv_i")) ap.gv_i = vec3_from(a["gv_i"]);
        if (a.contains("gv_d")) ap.gv_d = vec3_from(a["gv_d"]);
        ap.gq_time_constant = a.value("gq_time_constant_s", ap.gq_time_constant);
        if (a.contains("gw_p")) ap.gw_p = vec3_from(a["gw_p"]);
        if (a.contains("gw_i")) ap.gw_i = vec3_from(a["gw_i"]);
        ap.gv_integrator_clamp = a.value("gv_integrator_clamp", ap.gv_integrator_clamp);
        ap.gw_integrator_clamp = a.value("gw_integrator_clamp", ap.gw_integrator_clamp);
        ap.gyro_filter_hz = a.value("gyro_filter_hz", ap.gyro_filter_hz);
        ap.outer_rate_hz = a.value("outer_rate_hz", ap.outer_rate_hz);
        ap.inner_rate_hz = a.value("inner_rate_hz", ap.inner_rate_hz);
        ap.adaptive_r = a.value("adaptive_r", ap.adaptive_r);
        ap.adaptive_v = a.value("adaptive_v", ap.adaptive_v);
        ap.adaptive_q = a.value("adaptive_q", ap.adaptive_q);
        ap.adaptive_w = a.value("adaptive_w", ap.adaptive_w);
        ap.rcac_r = rcac_from(a.value("rcac_r", json()), ap.rcac_r);
        ap.rcac_v = rcac_from(a.value("rcac_v", json()), ap.rcac_v);
        ap.rcac_q = rcac_from(a.value("rcac_q", json()), ap.rcac_q);
        ap.rcac_w = rcac_from(a.value("rcac_w", json()), ap.rcac_w);
        ap.deadzone = deadzone_from(a.value("deadzone", json()), ap.deadzone);
        if (a.contains("limits")) {
            const json& l = a["limits"];
            ap.limits.max_tilt_rad = l.value("max_tilt_rad", ap.limits.max_tilt_rad);
            ap.limits.max_thrust_n = l.value("max_thrust_n", ap.limits.max_thrust_n);
            ap.limits.max_moment_nm = l.value("max_moment_nm", ap.limits.max_moment_nm);
            ap.limits.max_velocity_mps = l.value("max_velocity_mps", ap.limits.max_velocity_mps);
        }
    });

    in("mission", [&](const json& m) {
        c.mission.cruise_speed = m.value("cruise_speed_mps", c.mission.cruise_speed);
        c.mission.hold_time_s = m.value("hold_time_s", c.mission.hold_time_s);
        c.mission.altitude = m.value("altitude_m", c.mission.altitude);
        c.hilbert_order = m.value("hilbert_order", c.hilbert_order);
        c.hilbert_side_m = m.value("hilbert_side_m", c.hilbert_side_m);
        if (m.contains("waypoints")) {
            c.mission.waypoints.clear();
            for (const auto& w : m["waypoints"]) c.mission.waypoints.push_back(vec3_from(w));
        }
    });

    in("noise", [&](const json& n) {
        c.noise.gyro_std = n.value("gyro_std_rad_s", c.noise.gyro_std);
        c.noise.pos_std = n.value("pos_std_m", c.noise.pos_std);
        c.noise.vel_std = n.value("vel_std_mps", c.noise.vel_std);
        c.noise.seed = n.value("seed", c.noise.seed);
    });

    in("metrics", [&](const json& m) {
        c.metrics.hf_cutoff_hz = m.value("hf_cutoff_hz", c.metrics.hf_cutoff_hz);
        c.metrics.oscillation_threshold =
            m.value("oscillation_threshold", c.metrics.oscillation_threshold);
        c.metrics.edge_trim_s = m.value("edge_trim_s", c.metrics.edge_trim_s);
    });

    c.validate();
    return c;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        f >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return scenario_from_json(j);
}

/// FNV-1a over the canonical (key-sorted) JSON dump; embedded in all outputs.
inline std::string config_hash(const ScenarioConfig& cfg) {
    const std::string dump = to_json(cfg).dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace quadsim
