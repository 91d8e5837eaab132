#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "quadsim/autopilot.hpp"
#include "quadsim/config.hpp"
#include "quadsim/flight_log.hpp"
#include "quadsim/metrics.hpp"
#include "quadsim/mission.hpp"
#include "quadsim/vehicle.hpp"

namespace quadsim {

class SimulationDiverged : public std::runtime_error {
public:
    SimulationDiverged(const std::string& what, FlightLog partial)
        : std::runtime_error(what), partial_log(std::move(partial)) {}
    FlightLog partial_log;
};

struct RunResult {
    FlightLog log;
    MetricsReport report;
};

/// Closed loop: mission -> cascade -> mixer -> dynamics -> sensors, at the
/// inner rate, for cfg.duration_s. Deterministic for a fixed seed.
inline RunResult run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    const Mission mission = cfg.build_mission();
    const Mixer mixer(cfg.vehicle);
    Autopilot autopilot(cfg.autopilot, cfg.vehicle.mass);
    GaussianRng rng(cfg.noise.seed);

    VehicleState state;
    state.body.position = mission.plan().waypoints.front();
    state.rotors = Vec4::Constant(cfg.vehicle.hover_rotor_speed());

    const double dt = 1.0 / cfg.autopilot.inner_rate_hz;
    const long steps = std::lround(cfg.duration_s * cfg.autopilot.inner_rate_hz);

    FlightLog log;
    log.dt = dt;
    log.config_hash = config_hash(cfg);
    log.rows.reserve(static_cast<std::size_t>(steps));

    for (long k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const SetpointFrame sp = mission.setpoints_at(t);
        const Measurements meas = sense(state.body, cfg.noise, rng);
        ControlOutputs out = autopilot.step(sp, meas);
        const MixResult mix = mixer.mix(out.thrust_sp, out.moment_sp);
        if (mix.saturated) out.sat_flags |= kSatRotor;

        LogRow row;
        row.t = t;
        row.pos_sp = sp.position_sp;
        row.pos = meas.position;
        row.vel_sp = sp.velocity_sp;
        row.vel = meas.velocity;
        row.q = meas.attitude;
        row.q_sp = out.attitude_sp;
        row.rate_sp = out.rate_sp;
        row.rate_meas = out.rate_sp - out.z_omega;  // conditioned rate the loop used
        row.z_w = out.z_omega;
        row.z_w_dz = out.z_omega_dz;
        row.moment_sp = out.moment_sp;
        row.thrust_sp = out.thrust_sp;
        const auto tw = autopilot.theta_w();
        const auto tv = autopilot.theta_v();
        const auto tr = autopilot.theta_r();
        const auto tq = autopilot.theta_q();
        for (int i = 0; i < 6; ++i) row.theta_w[static_cast<std::size_t>(i)] = tw(i);
        for (int i = 0; i < 9; ++i) row.theta_v[static_cast<std::size_t>(i)] = tv(i);
        for (int i = 0; i < 3; ++i) row.theta_r[static_cast<std::size_t>(i)] = tr(i);
        for (int i = 0; i < 3; ++i) row.theta_q[static_cast<std::size_t>(i)] = tq(i);
        row.sat_flags = static_cast<double>(out.sat_flags);
        log.rows.push_back(row);

        try {
            state = step_dynamics(state, mix.rotor_speeds, cfg.vehicle, mixer, dt);
        } catch (const std::exception& e) {
            throw SimulationDiverged(e.what(), std::move(log));
        }
    }

    RunResult result;
    result.report = evaluate(log, cfg.metrics);
    result.log = std::move(log);
    return result;
}

inline json report_to_json(const MetricsReport& r, const std::string& cfg_hash) {
    return json{{"j_r_m", r.j_r},
                {"j_omega_rad_s", r.j_omega},
                {"band_power_ratio", r.band_power_ratio},
                {"theta_final_norm", r.theta_final_norm},
                {"theta_max_norm", r.theta_max_norm},
                {"oscillation_flag", r.oscillation_flag},
                {"config", cfg_hash}};
}

inline void write_waypoints_csv(const std::vector<Vec3>& waypoints, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("harness: cannot open " + path);
    f << "x,y,z\n";
    for (const auto& w : waypoints) {
        f << format_double(w.x()) << ',' << format_double(w.y()) << ','
          << format_double(w.z()) << "\n";
    }
}

/// Runs and writes log.csv, metrics.json, config.json, waypoints.csv into
/// out_dir. On divergence the partial log is flushed before rethrowing.
inline RunResult run_scenario_to_dir(const ScenarioConfig& cfg, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    try {
        RunResult result = run_scenario(cfg);
        write_csv(result.log, out_dir + "/log.csv");
        write_waypoints_csv(cfg.waypoints(), out_dir + "/waypoints.csv");
        std::ofstream cf(out_dir + "/config.json");
        cf << to_json(cfg).dump(2) << "\n";
        std::ofstream mf(out_dir + "/metrics.json");
        mf << report_to_json(result.report, config_hash(cfg)).dump(2) << "\n";
        return result;
    } catch (SimulationDiverged& e) {
        write_csv(e.partial_log, out_dir + "/log.csv");
        throw;
    }
}

struct VariantSpec {
    std::string name;
    bool adaptive{true};
    DeadzoneConfig deadzone;
};

/// The five-way comparison: fixed gain, adaptive without deadzone, and
/// adaptive with each nonlinearity at its default shape.
inline std::vector<VariantSpec> paper_variants() {
    return {{"fixed", false, DeadzoneConfig::none()},
            {"none", true, DeadzoneConfig::none()},
            {"n1", true, DeadzoneConfig::n1(0.02)},
            {"n2", true, DeadzoneConfig::n2(0.02, 1.0)},
            {"n3", true, DeadzoneConfig::n3(0.02, 0.1)}};
}

inline ScenarioConfig apply_variant(ScenarioConfig cfg, const VariantSpec& variant) {
    cfg.autopilot.deadzone = variant.deadzone;
    if (!variant.adaptive) {
        cfg.autopilot.adaptive_r = false;
        cfg.autopilot.adaptive_v = false;
        cfg.autopilot.adaptive_q = false;
        cfg.autopilot.adaptive_w = false;
    }
    return cfg;
}

struct ComparisonRow {
    std::string variant;
    bool ok{false};
    std::string error;
    MetricsReport report;
};

struct Comparison {
    std::vector<ComparisonRow> rows;
};

/// Runs every variant with the same seed and mission; failures are recorded
/// and the remaining variants still run.
inline Comparison compare(const ScenarioConfig& base,
                          const std::vector<VariantSpec>& variants,
                          const std::string& out_root = "") {
    if (variants.size() < 2) {
        throw std::invalid_argument("harness: compare needs at least 2 variants");
    }
    Comparison cmp;
    for (const auto& variant : variants) {
        ComparisonRow row;
        row.variant = variant.name;
        const ScenarioConfig cfg = apply_variant(base, variant);
        try {
            if (out_root.empty()) {
                row.report = run_scenario(cfg).report;
            } else {
                row.report = run_scenario_to_dir(cfg, out_root + "/" + variant.name).report;
            }
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        cmp.rows.push_back(std::move(row));
    }
    return cmp;
}

inline void write_comparison_csv(const Comparison& cmp, std::ostream& os) {
    os << "variant,status,j_r_m,j_omega_rad_s,band_power_ratio,theta_max_norm,"
          "oscillation_flag\n";
    for (const auto& row : cmp.rows) {
        os << row.variant << ',' << (row.ok ? "ok" : "failed") << ','
           << format_double(row.report.j_r) << ',' << format_double(row.report.j_omega) << ','
           << format_double(row.report.band_power_ratio) << ','
           << format_double(row.report.theta_max_norm) << ','
           << (row.report.oscillation_flag ? 1 : 0) << "\n";
    }
}

}  // namespace quadsim
