#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "quadsim/math.hpp"

namespace quadsim {

constexpr int kLogSchemaVersion = 1;

/// One inner-rate control step. theta_* use axis-major gain order
/// (roll P, roll I, pitch P, pitch I, yaw P, yaw I for theta_w; P, I, D
/// triplets for theta_v).
struct LogRow {
    double t{0.0};
    Vec3 pos_sp{Vec3::Zero()};
    Vec3 pos{Vec3::Zero()};
    Vec3 vel_sp{Vec3::Zero()};
    Vec3 vel{Vec3::Zero()};
    Quat q{Quat::Identity()};
    Quat q_sp{Quat::Identity()};
    Vec3 rate_sp{Vec3::Zero()};
    Vec3 rate_meas{Vec3::Zero()};
    Vec3 z_w{Vec3::Zero()};
    Vec3 z_w_dz{Vec3::Zero()};
    Vec3 moment_sp{Vec3::Zero()};
    double thrust_sp{0.0};
    std::array<double, 6> theta_w{};
    std::array<double, 9> theta_v{};
    std::array<double, 3> theta_r{};
    std::array<double, 3> theta_q{};
    double sat_flags{0.0};
};

struct FlightLog {
    double dt{0.004};
    std::string config_hash;
    std::vector<LogRow> rows;

    double duration() const { return rows.empty() ? 0.0 : rows.back().t; }
};

namespace log_schema {

struct Column {
    std::string name;
    std::function<double(const LogRow&)> get;
    std::function<void(LogRow&, double)> set;
};

inline const std::vector<Column>& columns() {
    static const std::vector<Column> cols = [] {
        std::vector<Column> c;
        auto scalar = [&c](const char* name, double LogRow::* member) {
            c.push_back({name,
                         [member](const LogRow& r) { return r.*member; },
                         [member](LogRow& r, double v) { r.*member = v; }});
        };
        auto vec3 = [&c](const std::string& base, Vec3 LogRow::* member) {
            static const char* axis[3] = {"x", "y", "z"};
            for (int i = 0; i < 3; ++i) {
                c.push_back({base + "_" + axis[i],
                             [member, i](const LogRow& r) { return (r.*member)(i); },
                             [member, i](LogRow& r, double v) { (r.*member)(i) = v; }});
            }
        };
        auto quat = [&c](const std::string& base, Quat LogRow::* member) {
            static const char* comp[4] = {"w", "x", "y", "z"};
            for (int i = 0; i < 4; ++i) {
                auto get = [member, i](const LogRow& r) {
                    const Quat& q = r.*member;
                    return i == 0 ? q.w() : q.coeffs()(i - 1);
                };
                auto set = [member, i](LogRow& r, double v) {
                    Quat& q = r.*member;
                    if (i == 0) q.w() = v;
                    else q.coeffs()(i - 1) = v;
                };
                c.push_back({base + "_" + comp[i], get, set});
            }
        };
        auto arr = [&c]<std::size_t N>(const std::string& base,
                                       std::array<double, N> LogRow::* member) {
            for (std::size_t i = 0; i < N; ++i) {
                c.push_back({base + "_" + std::to_string(i),
                             [member, i](const LogRow& r) { return (r.*member)[i]; },
                             [member, i](LogRow& r, double v) { (r.*member)[i] = v; }});
            }
        };

        scalar("t", &LogRow::t);
        vec3("pos_sp", &LogRow::pos_sp);
        vec3("pos", &LogRow::pos);
        vec3("vel_sp", &LogRow::vel_sp);
        vec3("vel", &LogRow::vel);
        quat("q", &LogRow::q);
        quat("q_sp", &LogRow::q_sp);
        vec3("rate_sp", &LogRow::rate_sp);
        vec3("rate_meas", &LogRow::rate_meas);
        vec3("z_w", &LogRow::z_w);
        vec3("z_w_dz", &LogRow::z_w_dz);
        vec3("moment_sp", &LogRow::moment_sp);
        scalar("thrust_sp", &LogRow::thrust_sp);
        arr("theta_w", &LogRow::theta_w);
        arr("theta_v", &LogRow::theta_v);
        arr("theta_r", &LogRow::theta_r);
        arr("theta_q", &LogRow::theta_q);
        scalar("sat_flags", &LogRow::sat_flags);
        return c;
    }();
    return cols;
}

inline int width() { return static_cast<int>(columns().size()); }

}  // namespace log_schema

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_csv(const FlightLog& log, std::ostream& os) {
    os << "# quadsim flight log schema=" << kLogSchemaVersion
       << " dt=" << format_double(log.dt) << " config=" << log.config_hash << "\n";
    const auto& cols = log_schema::columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        os << cols[i].name << (i + 1 < cols.size() ? "," : "\n");
    }
    for (const auto& row : log.rows) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
            os << format_double(cols[i].get(row)) << (i + 1 < cols.size() ? "," : "\n");
        }
    }
}

inline void write_csv(const FlightLog& log, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("flight_log: cannot open " + path + " for writing");
    write_csv(log, f);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

/// Column order in the file may differ from the schema; fields are matched by
/// header name. Every schema column must be present.
inline FlightLog read_csv(std::istream& is) {
    FlightLog log;
    std::string line;
    while (std::getline(is, line) && (line.empty() || line[0] == '#')) {
        const auto cfg_at = line.find("config=");
        if (cfg_at != std::string::npos) {
            log.config_hash = line.substr(cfg_at + 7);
            const auto space = log.config_hash.find(' ');
            if (space != std::string::npos) log.config_hash.resize(space);
        }
    }
    if (line.empty()) throw std::runtime_error("flight_log: missing header row");

    const auto names = split_csv_line(line);
    const auto& cols = log_schema::columns();
    std::vector<const log_schema::Column*> layout;
    for (const auto& name : names) {
        const log_schema::Column* found = nullptr;
        for (const auto& c : cols) {
            if (c.name == name) {
                found = &c;
                break;
            }
        }
        if (!found) throw std::runtime_error("flight_log: unknown column '" + name + "'");
        layout.push_back(found);
    }
    if (layout.size() != cols.size()) {
        throw std::runtime_error("flight_log: column count does not match schema");
    }

    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != layout.size()) {
            throw std::runtime_error("flight_log: malformed row");
        }
        LogRow row;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            layout[i]->set(row, std::strtod(fields[i].c_str(), nullptr));
        }
        log.rows.push_back(row);
    }

    if (log.rows.size() >= 2) {
        log.dt = log.rows[1].t - log.rows[0].t;
        for (std::size_t i = 1; i < log.rows.size(); ++i) {
            const double step = log.rows[i].t - log.rows[i - 1].t;
            if (!(step > 0.0) || std::abs(step - log.dt) > 1e-9) {
                throw std::runtime_error("flight_log: time grid not uniform");
            }
        }
    }
    return log;
}

inline FlightLog read_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("flight_log: cannot open " + path);
    return read_csv(f);
}

}  // namespace quadsim
