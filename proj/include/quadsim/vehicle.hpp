#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "quadsim/math.hpp"

namespace quadsim {

struct VehicleParams {
    double mass{2.0};                    // kg
    Vec3 inertia{0.021, 0.021, 0.036};   // kg m^2, diagonal
    double arm_length{0.25};             // m
    double thrust_coeff{8e-6};           // N/(rad/s)^2
    double torque_coeff{1e-7};           // N m/(rad/s)^2
    double rotor_max{1100.0};            // rad/s
    double rotor_time_constant{0.01};    // s
    Vec3 drag_coeff{0.3, 0.3, 0.3};      // N/(m/s), world-frame linear drag

    void validate() const {
        const bool ok = mass > 0.0 && inertia.minCoeff() > 0.0 && arm_length > 0.0 &&
                        thrust_coeff > 0.0 && torque_coeff > 0.0 && rotor_max > 0.0 &&
                        rotor_time_constant > 0.0 && drag_coeff.minCoeff() >= 0.0;
        if (!ok) throw std::invalid_argument("vehicle: params must be positive");
    }

    double hover_rotor_speed() const {
        return std::sqrt(mass * kGravity / (4.0 * thrust_coeff));
    }
};

/// NED world frame, FRD body frame. attitude rotates body vectors into world.
struct RigidBodyState {
    Vec3 position{Vec3::Zero()};
    Vec3 velocity{Vec3::Zero()};
    Quat attitude{Quat::Identity()};
    Vec3 omega{Vec3::Zero()};
};

struct VehicleState {
    RigidBodyState body;
    Vec4 rotors{Vec4::Zero()};  // actual rotor speeds, rad/s
};

struct MixResult {
    Vec4 rotor_speeds{Vec4::Zero()};
    bool saturated{false};
};

/// X-configuration allocation between (total thrust, body moments) and the
/// four squared rotor speeds. Motor layout (FRD, a = arm/sqrt(2)):
///   1 front-right (+a,+a) CCW, 2 rear-left (-a,-a) CCW,
///   3 front-left (+a,-a) CW,   4 rear-right (-a,+a) CW.
class Mixer {
public:
    explicit Mixer(const VehicleParams& params) : params_(params) {
        params.validate();
        const double kt = params.thrust_coeff;
        const double km = params.torque_coeff;
        const double a = params.arm_length / std::sqrt(2.0);
        alloc_ << kt, kt, kt, kt,
                  -kt * a, kt * a, kt * a, -kt * a,
                  kt * a, -kt * a, kt * a, -kt * a,
                  -km, -km, km, km;
        Eigen::FullPivLU<Eigen::Matrix4d> lu(alloc_);
        if (!lu.isInvertible()) throw std::invalid_argument("mixer: singular allocation matrix");
        inv_alloc_ = lu.inverse();
    }

    /// thrust_sp >= 0 along body -z; moment_sp in body frame.
    MixResult mix(double thrust_sp, const Vec3& moment_sp) const {
        if (thrust_sp < 0.0) throw std::invalid_argument("mixer: thrust must be >= 0");
        const Vec4 wrench(thrust_sp, moment_sp.x(), moment_sp.y(), moment_sp.z());
        Vec4 sq = inv_alloc_ * wrench;
        MixResult out;
        for (int i = 0; i < 4; ++i) {
            if (sq(i) < 0.0) {
                sq(i) = 0.0;
                out.saturated = true;
            }
            double w = std::sqrt(sq(i));
            if (w > params_.rotor_max) {
                w = params_.rotor_max;
                out.saturated = true;
            }
            out.rotor_speeds(i) = w;
        }
        return out;
    }

    /// Forward map: rotor speeds -> (total thrust, body moments).
    Vec4 wrench(const Vec4& rotor_speeds) const {
        return alloc_ * rotor_speeds.cwiseProduct(rotor_speeds);
    }

private:
    VehicleParams params_;
    Eigen::Matrix4d alloc_;
    Eigen::Matrix4d inv_alloc_;
};

namespace detail {

struct StateDeriv {
    Vec3 dpos, dvel, domega;
    Eigen::Vector4d dquat;
    Vec4 drotors;
};

inline StateDeriv vehicle_deriv(const VehicleState& s, const Vec4& rotor_cmd,
                                const VehicleParams& p, const Mixer& mixer) {
    StateDeriv d;
    const Vec4 w = mixer.wrench(s.rotors);
    const Vec3 thrust_body(0.0, 0.0, -w(0));
    const Vec3 moment_body(w(1), w(2), w(3));

    d.dpos = s.body.velocity;
    d.dvel = Vec3(0.0, 0.0, kGravity) +
             (s.body.attitude * thrust_body -
              p.drag_coeff.cwiseProduct(s.body.velocity)) / p.mass;

    const Quat& q = s.body.attitude;
    const Vec3& om = s.body.omega;
    // qdot = 0.5 * q (x) (0, omega)
    d.dquat << 0.5 * (-q.x() * om.x() - q.y() * om.y() - q.z() * om.z()),
               0.5 * (q.w() * om.x() + q.y() * om.z() - q.z() * om.y()),
               0.5 * (q.w() * om.y() - q.x() * om.z() + q.z() * om.x()),
               0.5 * (q.w() * om.z() + q.x() * om.y() - q.y() * om.x());

    const Vec3 j_omega = p.inertia.cwiseProduct(om);
    d.domega = (moment_body - om.cross(j_omega)).cwiseQuotient(p.inertia);
    d.drotors = (rotor_cmd - s.rotors) / p.rotor_time_constant;
    return d;
}

inline VehicleState advance(const VehicleState& s, const StateDeriv& d, double h) {
    VehicleState out = s;
    out.body.position += h * d.dpos;
    out.body.velocity += h * d.dvel;
    out.body.attitude.w() += h * d.dquat(0);
    out.body.attitude.x() += h * d.dquat(1);
    out.body.attitude.y() += h * d.dquat(2);
    out.body.attitude.z() += h * d.dquat(3);
    out.body.omega += h * d.domega;
    out.rotors += h * d.drotors;
    return out;
}

}  // namespace detail

/// One fixed-step RK4 integration of the rigid body plus first-order rotor
/// lag toward rotor_cmd. The attitude quaternion is renormalized afterwards.
inline VehicleState step_dynamics(const VehicleState& state, const Vec4& rotor_cmd,
                                  const VehicleParams& params, const Mixer& mixer,
                                  double dt) {
    if (!(dt > 0.0 && dt <= 1.0 / 200.0)) {
        throw std::invalid_argument("vehicle: dt must be in (0, 1/200] s");
    }
    using detail::advance;
    using detail::vehicle_deriv;

    const auto k1 = vehicle_deriv(state, rotor_cmd, params, mixer);
    const auto k2 = vehicle_deriv(advance(state, k1, 0.5 * dt), rotor_cmd, params, mixer);
    const auto k3 = vehicle_deriv(advance(state, k2, 0.5 * dt), rotor_cmd, params, mixer);
    const auto k4 = vehicle_deriv(advance(state, k3, dt), rotor_cmd, params, mixer);

    VehicleState out = state;
    const double w = dt / 6.0;
    out.body.position += w * (k1.dpos + 2.0 * k2.dpos + 2.0 * k3.dpos + k4.dpos);
    out.body.velocity += w * (k1.dvel + 2.0 * k2.dvel + 2.0 * k3.dvel + k4.dvel);
    const Eigen::Vector4d dq = w * (k1.dquat + 2.0 * k2.dquat + 2.0 * k3.dquat + k4.dquat);
    out.body.attitude.w() += dq(0);
    out.body.attitude.x() += dq(1);
    out.body.attitude.y() += dq(2);
    out.body.attitude.z() += dq(3);
    out.body.omega += w * (k1.domega + 2.0 * k2.domega + 2.0 * k3.domega + k4.domega);
    out.rotors += w * (k1.drotors + 2.0 * k2.drotors + 2.0 * k3.drotors + k4.drotors);

    out.body.attitude.normalize();

    const bool finite = out.body.position.allFinite() && out.body.velocity.allFinite() &&
                        out.body.omega.allFinite() && out.rotors.allFinite() &&
                        std::isfinite(out.body.attitude.norm());
    if (!finite) throw std::runtime_error("vehicle: dynamics diverged to non-finite state");
    return out;
}

struct SensorNoiseConfig {
    double gyro_std{0.0};  // rad/s
    double pos_std{0.0};   // m
    double vel_std{0.0};   // m/s
    std::uint64_t seed{0};

    void validate() const {
        if (gyro_std < 0.0 || pos_std < 0.0 || vel_std < 0.0) {
            throw std::invalid_argument("sensors: noise stds must be >= 0");
        }
    }
};

struct Measurements {
    Vec3 position;
    Vec3 velocity;
    Quat attitude;  // noise-free
    Vec3 omega;
};

inline Measurements sense(const RigidBodyState& state, const SensorNoiseConfig& noise,
                          GaussianRng& rng) {
    Measurements m;
    m.position = state.position + rng.sample_vec3(noise.pos_std);
    m.velocity = state.velocity + rng.sample_vec3(noise.vel_std);
    m.attitude = state.attitude;
    m.omega = state.omega + rng.sample_vec3(noise.gyro_std);
    return m;
}

}  // namespace quadsim
