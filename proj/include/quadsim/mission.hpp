#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "quadsim/math.hpp"

namespace quadsim {

struct SetpointFrame {
    double t{0.0};
    Vec3 position_sp{Vec3::Zero()};
    Vec3 velocity_sp{Vec3::Zero()};
    double azimuth_sp{0.0};
    double azimuth_rate_sp{0.0};
};

/// Vertices of the order-n Hilbert curve scaled to a square of side
/// side_length at constant altitude (NED: z = -altitude), visited in curve
/// order. Grid x maps to North, grid y to East.
inline std::vector<Vec3> hilbert_waypoints(int order, double side_length, double altitude) {
    if (order < 1) throw std::invalid_argument("mission: hilbert order must be >= 1");
    if (order > 6) throw std::invalid_argument("mission: hilbert order > 6 rejected");
    if (!(side_length > 0.0)) throw std::invalid_argument("mission: side_length must be > 0");

    const std::uint32_t n = 1u << order;
    const double spacing = side_length / static_cast<double>(n - 1);
    std::vector<Vec3> points;
    points.reserve(static_cast<std::size_t>(n) * n);
    for (std::uint32_t d = 0; d < n * n; ++d) {
        std::uint32_t x = 0, y = 0, t = d;
        for (std::uint32_t s = 1; s < n; s <<= 1) {
            const std::uint32_t rx = 1u & (t / 2u);
            const std::uint32_t ry = 1u & (t ^ rx);
            if (ry == 0u) {
                if (rx == 1u) {
                    x = s - 1u - x;
                    y = s - 1u - y;
                }
                std::swap(x, y);
            }
            x += s * rx;
            y += s * ry;
            t /= 4u;
        }
        points.emplace_back(spacing * x, spacing * y, -altitude);
    }
    return points;
}

struct MissionPlan {
    std::vector<Vec3> waypoints;
    double cruise_speed{1.0};   // m/s
    double hold_time_s{8.0};    // hover at the endpoints
    double altitude{2.5};       // m above ground, used by waypoint generators

    void validate() const {
        if (waypoints.size() < 2) throw std::invalid_argument("mission: need >= 2 waypoints");
        if (!(cruise_speed > 0.0)) throw std::invalid_argument("mission: cruise_speed must be > 0");
        if (hold_time_s < 0.0) throw std::invalid_argument("mission: hold_time_s must be >= 0");
    }
};

/// Time-parameterized trajectory through the plan's waypoints: constant-speed
/// legs with the velocity vector blended linearly over a 0.5 s window at each
/// corner (per-axis trapezoids), ramps from/to rest centered on the departure
/// and arrival times. Position is the exact integral of the velocity knots,
/// so the two setpoints are consistent by construction.
class Mission {
public:
    static constexpr double kCornerRampS = 0.5;

    explicit Mission(MissionPlan plan) : plan_(std::move(plan)) {
        plan_.validate();
        const double speed = plan_.cruise_speed;
        const double half = 0.5 * kCornerRampS;
        const double hold = std::max(plan_.hold_time_s, half);

        const auto& wp = plan_.waypoints;
        std::vector<Vec3> dirs;
        std::vector<double> corner_time;  // nominal time at each waypoint
        double t = hold;
        corner_time.push_back(t);
        for (std::size_t i = 0; i + 1 < wp.size(); ++i) {
            const Vec3 leg = wp[i + 1] - wp[i];
            const double len = leg.norm();
            if (len / speed < kCornerRampS) {
                throw std::invalid_argument(
                    "mission: leg shorter than the corner ramp at waypoint " + std::to_string(i));
            }
            dirs.push_back(leg / len);
            t += len / speed;
            corner_time.push_back(t);
        }

        // velocity knots
        knot_t_.push_back(0.0);
        knot_v_.push_back(Vec3::Zero());
        knot_t_.push_back(corner_time.front() - half);
        knot_v_.push_back(Vec3::Zero());
        knot_t_.push_back(corner_time.front() + half);
        knot_v_.push_back(speed * dirs.front());
        for (std::size_t i = 1; i + 1 < corner_time.size(); ++i) {
            knot_t_.push_back(corner_time[i] - half);
            knot_v_.push_back(speed * dirs[i - 1]);
            knot_t_.push_back(corner_time[i] + half);
            knot_v_.push_back(speed * dirs[i]);
        }
        knot_t_.push_back(corner_time.back() - half);
        knot_v_.push_back(speed * dirs.back());
        knot_t_.push_back(corner_time.back() + half);
        knot_v_.push_back(Vec3::Zero());

        knot_p_.resize(knot_t_.size());
        knot_p_[0] = wp.front();
        for (std::size_t k = 1; k < knot_t_.size(); ++k) {
            const double dt = knot_t_[k] - knot_t_[k - 1];
            knot_p_[k] = knot_p_[k - 1] + 0.5 * dt * (knot_v_[k - 1] + knot_v_[k]);
        }
        knot_p_.back() = wp.back();  // snap away ~1e-15 integration residue
        arrival_time_ = corner_time.back() + half;
    }

    SetpointFrame setpoints_at(double t) const {
        if (t < 0.0) throw std::invalid_argument("mission: t must be >= 0");
        SetpointFrame f;
        f.t = t;
        if (t >= knot_t_.back()) {
            f.position_sp = knot_p_.back();
            return f;
        }
        const auto it = std::upper_bound(knot_t_.begin(), knot_t_.end(), t);
        const std::size_t k = static_cast<std::size_t>(it - knot_t_.begin()) - 1;
        const double seg = knot_t_[k + 1] - knot_t_[k];
        const double tau = t - knot_t_[k];
        const Vec3 dv = knot_v_[k + 1] - knot_v_[k];
        f.velocity_sp = knot_v_[k] + (tau / seg) * dv;
        f.position_sp = knot_p_[k] + tau * knot_v_[k] + (0.5 * tau * tau / seg) * dv;
        return f;
    }

    /// Time at which the trajectory comes to rest on the last waypoint.
    double arrival_time() const { return arrival_time_; }
    const MissionPlan& plan() const { return plan_; }

private:
    MissionPlan plan_;
    std::vector<double> knot_t_;
    std::vector<Vec3> knot_v_;
    std::vector<Vec3> knot_p_;
    double arrival_time_{0.0};
};

}  // namespace quadsim
