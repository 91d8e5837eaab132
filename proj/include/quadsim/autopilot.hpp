#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "quadsim/deadzone.hpp"
#include "quadsim/math.hpp"
#include "quadsim/mission.hpp"
#include "quadsim/rcac.hpp"
#include "quadsim/vehicle.hpp"

namespace quadsim {

/// Saturation / event flags recorded per control step.
enum SatFlag : std::uint32_t {
    kSatVelocity = 1u << 0,
    kSatTilt = 1u << 1,
    kSatThrust = 1u << 2,
    kSatMoment = 1u << 3,
    kSatRotor = 1u << 4,      // set by the harness from the mixer
    kHeldAttitude = 1u << 5,  // near-zero thrust vector, attitude setpoint held
    kWarnQuatNorm = 1u << 6,
};

struct AutopilotLimits {
    double max_tilt_rad{0.6};
    double max_thrust_n{38.0};
    double max_moment_nm{0.4};
    double max_velocity_mps{3.0};

    void validate() const {
        if (!(max_tilt_rad > 0.0 && max_thrust_n > 0.0 && max_moment_nm > 0.0 &&
              max_velocity_mps > 0.0)) {
            throw std::invalid_argument("autopilot: limits must be positive");
        }
    }
};

struct AutopilotConfig {
    Vec3 gr_gains{0.95, 0.95, 0.95};       // position P
    Vec3 gv_p{4.0, 4.0, 5.0};              // velocity PID
    Vec3 gv_i{2.0, 2.0, 3.0};
    Vec3 gv_d{0.2, 0.2, 0.2};
    double gq_time_constant{0.25};         // attitude law tau
    Vec3 gw_p{0.15, 0.15, 0.15};           // rate PI
    Vec3 gw_i{0.2, 0.2, 0.2};
    double gv_integrator_clamp{2.0};       // m, on the velocity-error integral
    double gw_integrator_clamp{1.0};       // rad, on the rate-error integral
    /// One-pole low-pass on the measured angular velocity ahead of the rate
    /// loop (signal conditioning as in PX4's vehicle_angular_velocity
    /// pipeline). 0 disables.
    double gyro_filter_hz{3.0};
    double outer_rate_hz{50.0};
    double inner_rate_hz{250.0};
    bool adaptive_r{false};
    bool adaptive_v{false};
    bool adaptive_q{false};
    bool adaptive_w{false};
    RcacConfig rcac_r;
    RcacConfig rcac_v;
    RcacConfig rcac_q;
    RcacConfig rcac_w;
    DeadzoneConfig deadzone;               // rate loop only
    AutopilotLimits limits;

    void validate() const {
        if (!(outer_rate_hz > 0.0 && inner_rate_hz > 0.0)) {
            throw std::invalid_argument("autopilot: loop rates must be positive");
        }
        const double ratio = inner_rate_hz / outer_rate_hz;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0) {
            throw std::invalid_argument(
                "autopilot: inner rate must be an integer multiple of outer rate");
        }
        if (!(gq_time_constant > 0.0)) {
            throw std::invalid_argument("autopilot: gq_time_constant must be > 0");
        }
        if (gyro_filter_hz < 0.0) {
            throw std::invalid_argument("autopilot: gyro_filter_hz must be >= 0");
        }
        limits.validate();
    }
};

/// Per-step controller outputs, one log row's worth.
struct ControlOutputs {
    Vec3 thrust_vector_sp{Vec3::Zero()};  // N, world (NED)
    double thrust_sp{0.0};                // N, along body -z
    Quat attitude_sp{Quat::Identity()};
    Vec3 rate_sp{Vec3::Zero()};
    Vec3 z_omega{Vec3::Zero()};           // rate error, pre-deadzone
    Vec3 z_omega_dz{Vec3::Zero()};        // post-deadzone
    Vec3 moment_sp{Vec3::Zero()};         // N m, body
    std::uint32_t sat_flags{0};
};

/// PX4-style cascade: G_r (position P) -> G_v (velocity PID) -> thrust vector
/// -> attitude setpoint -> G_q (quaternion error P) -> G_omega (rate PI),
/// each loop optionally augmented by an additive RCAC term. The deadzone sits
/// between the rate error and the rate-loop adaptation only; the fixed PI
/// always sees the raw error.
class Autopilot {
public:
    Autopilot(const AutopilotConfig& cfg, double vehicle_mass)
        : cfg_(cfg), mass_(vehicle_mass) {
        cfg_.validate();
        if (!(vehicle_mass > 0.0)) throw std::invalid_argument("autopilot: mass must be > 0");
        if (cfg_.adaptive_r) rcac_r_.emplace(make_loop_config(cfg_.rcac_r, GainStructure::P));
        if (cfg_.adaptive_v) rcac_v_.emplace(make_loop_config(cfg_.rcac_v, GainStructure::PID));
        if (cfg_.adaptive_q) rcac_q_.emplace(make_loop_config(cfg_.rcac_q, GainStructure::P));
        if (cfg_.adaptive_w) rcac_w_.emplace(make_loop_config(cfg_.rcac_w, GainStructure::PI));
        reset();
    }

    void reset() {
        gv_integ_ = Vec3::Zero();
        gw_integ_ = Vec3::Zero();
        prev_vel_meas_ = Vec3::Zero();
        have_prev_vel_ = false;
        rate_filt_ = Vec3::Zero();
        have_rate_filt_ = false;
        held_thrust_vec_ = Vec3(0.0, 0.0, -mass_ * kGravity);
        held_attitude_sp_ = Quat::Identity();
        tick_ = 0;
        if (rcac_r_) rcac_r_->reset();
        if (rcac_v_) rcac_v_->reset();
        if (rcac_q_) rcac_q_->reset();
        if (rcac_w_) rcac_w_->reset();
    }

    /// Outer loop: position error -> velocity setpoint -> thrust vector (N, NED).
    Vec3 position_control(const SetpointFrame& sp, const Vec3& meas_pos,
                          const Vec3& meas_vel, double dt, std::uint32_t& flags) {
        if (!meas_pos.allFinite() || !meas_vel.allFinite()) {
            throw std::domain_error("autopilot: non-finite position/velocity measurement");
        }
        const Vec3 z_r = sp.position_sp - meas_pos;
        Vec3 vel_sp = cfg_.gr_gains.cwiseProduct(z_r) + sp.velocity_sp;
        if (rcac_r_) vel_sp += rcac_r_->update(z_r, dt);
        if (vel_sp.norm() > cfg_.limits.max_velocity_mps) {
            vel_sp *= cfg_.limits.max_velocity_mps / vel_sp.norm();
            flags |= kSatVelocity;
        }

        const Vec3 z_v = vel_sp - meas_vel;
        gv_integ_ = clamp_abs(gv_integ_ + z_v * dt, cfg_.gv_integrator_clamp);
        const Vec3 vel_deriv =
            have_prev_vel_ ? Vec3(((meas_vel - prev_vel_meas_) / dt).eval()) : Vec3(Vec3::Zero());
        prev_vel_meas_ = meas_vel;
        have_prev_vel_ = true;

        Vec3 acc_sp = cfg_.gv_p.cwiseProduct(z_v) + cfg_.gv_i.cwiseProduct(gv_integ_) -
                      cfg_.gv_d.cwiseProduct(vel_deriv);
        if (rcac_v_) acc_sp += rcac_v_->update(z_v, dt);

        Vec3 thrust_vec = mass_ * (acc_sp - Vec3(0.0, 0.0, kGravity));
        // keep some upward force so the tilt limit is well defined
        const double min_up = 0.05 * mass_ * kGravity;
        if (thrust_vec.z() > -min_up) {
            thrust_vec.z() = -min_up;
            flags |= kSatThrust;
        }
        const double horiz = std::hypot(thrust_vec.x(), thrust_vec.y());
        const double max_horiz = std::tan(cfg_.limits.max_tilt_rad) * (-thrust_vec.z());
        if (horiz > max_horiz) {
            const double scale = max_horiz / horiz;
            thrust_vec.x() *= scale;
            thrust_vec.y() *= scale;
            flags |= kSatTilt;
        }
        if (thrust_vec.norm() > cfg_.limits.max_thrust_n) {
            thrust_vec *= cfg_.limits.max_thrust_n / thrust_vec.norm();
            flags |= kSatThrust;
        }
        return thrust_vec;
    }

    /// Attitude whose thrust axis (body -z) points along the commanded thrust
    /// vector and whose heading matches azimuth_sp.
    Quat attitude_from_thrust(const Vec3& thrust_vector_sp, double azimuth_sp,
                              std::uint32_t& flags) {
        if (thrust_vector_sp.norm() < 1e-6) {
            flags |= kHeldAttitude;
            return held_attitude_sp_;
        }
        const Vec3 z_b = -thrust_vector_sp.normalized();  // body +z (down)
        const Vec3 heading(std::cos(azimuth_sp), std::sin(azimuth_sp), 0.0);
        Vec3 y_b = z_b.cross(heading);
        const double ynorm = y_b.norm();
        if (ynorm < 1e-9) {
            flags |= kHeldAttitude;
            return held_attitude_sp_;
        }
        y_b /= ynorm;
        const Vec3 x_b = y_b.cross(z_b);
        Eigen::Matrix3d rot;
        rot.col(0) = x_b;
        rot.col(1) = y_b;
        rot.col(2) = z_b;
        Quat q(rot);
        q.normalize();
        held_attitude_sp_ = q;
        return q;
    }

    /// G_q: quaternion-error proportional law, double-cover safe.
    Vec3 attitude_control(const Quat& q_sp_in, const Quat& q_meas_in, double dt,
                          std::uint32_t& flags) {
        Quat q_sp = q_sp_in;
        Quat q_meas = q_meas_in;
        if (std::abs(q_sp.norm() - 1.0) > 1e-6 || std::abs(q_meas.norm() - 1.0) > 1e-6) {
            flags |= kWarnQuatNorm;
            q_sp.normalize();
            q_meas.normalize();
        }
        const Quat q_e = q_meas.conjugate() * q_sp;
        const double sign = q_e.w() >= 0.0 ? 1.0 : -1.0;  // scalar 0 breaks toward +1
        const Vec3 z_q = sign * q_e.vec();
        Vec3 rate_sp = (2.0 / cfg_.gq_time_constant) * z_q;
        if (rcac_q_) rate_sp += rcac_q_->update(z_q, dt);
        return rate_sp;
    }

    /// G_omega: fixed PI on the raw rate error; the adaptation and its
    /// regressor see only the deadzoned error.
    ControlOutputs rate_control(const Vec3& rate_sp, const Vec3& rate_meas, double dt,
                                std::uint32_t flags_in = 0) {
        ControlOutputs out;
        out.rate_sp = rate_sp;
        out.sat_flags = flags_in;
        out.z_omega = rate_sp - rate_meas;
        if (!out.z_omega.allFinite()) {
            throw std::domain_error("autopilot: non-finite rate error");
        }
        out.z_omega_dz = quadsim::apply(cfg_.deadzone, out.z_omega);

        gw_integ_ = clamp_abs(gw_integ_ + out.z_omega * dt, cfg_.gw_integrator_clamp);
        Vec3 moment = cfg_.gw_p.cwiseProduct(out.z_omega) + cfg_.gw_i.cwiseProduct(gw_integ_);
        if (rcac_w_) moment += rcac_w_->update(out.z_omega_dz, dt);

        out.moment_sp = clamp_abs(moment, cfg_.limits.max_moment_nm);
        if (out.moment_sp != moment) out.sat_flags |= kSatMoment;
        return out;
    }

    /// Collective thrust command: projection of the commanded thrust vector
    /// onto the current body thrust axis, floored at zero.
    double thrust_scalar(const Vec3& thrust_vector_sp, const Quat& q_meas) const {
        const Vec3 up_body = q_meas * Vec3(0.0, 0.0, -1.0);
        return std::max(0.0, thrust_vector_sp.dot(up_body));
    }

    /// Rate-measurement conditioning ahead of the rate loop.
    Vec3 filter_rate(const Vec3& omega_meas, double dt) {
        if (cfg_.gyro_filter_hz <= 0.0) return omega_meas;
        if (!have_rate_filt_) {
            rate_filt_ = omega_meas;
            have_rate_filt_ = true;
            return rate_filt_;
        }
        const double alpha = 1.0 - std::exp(-2.0 * M_PI * cfg_.gyro_filter_hz * dt);
        rate_filt_ += alpha * (omega_meas - rate_filt_);
        return rate_filt_;
    }

    /// One inner-rate tick of the full cascade. The outer loop runs every
    /// inner/outer-ratio ticks and its outputs are held in between.
    ControlOutputs step(const SetpointFrame& sp, const Measurements& meas) {
        const double dt_inner = 1.0 / cfg_.inner_rate_hz;
        const double dt_outer = 1.0 / cfg_.outer_rate_hz;
        const long ratio = std::lround(cfg_.inner_rate_hz / cfg_.outer_rate_hz);

        std::uint32_t flags = 0;
        if (tick_ % ratio == 0) {
            held_thrust_vec_ =
                position_control(sp, meas.position, meas.velocity, dt_outer, flags);
            held_attitude_sp_ =
                attitude_from_thrust(held_thrust_vec_, sp.azimuth_sp, flags);
        }
        ++tick_;

        const Vec3 rate_sp =
            attitude_control(held_attitude_sp_, meas.attitude, dt_inner, flags);
        const Vec3 rate_meas = filter_rate(meas.omega, dt_inner);
        ControlOutputs out = rate_control(rate_sp, rate_meas, dt_inner, flags);
        out.thrust_vector_sp = held_thrust_vec_;
        out.attitude_sp = held_attitude_sp_;
        out.thrust_sp = thrust_scalar(held_thrust_vec_, meas.attitude);
        return out;
    }

    const AutopilotConfig& config() const { return cfg_; }
    Eigen::VectorXd theta_r() const { return gains_or_zero(rcac_r_, 3); }
    Eigen::VectorXd theta_v() const { return gains_or_zero(rcac_v_, 9); }
    Eigen::VectorXd theta_q() const { return gains_or_zero(rcac_q_, 3); }
    Eigen::VectorXd theta_w() const { return gains_or_zero(rcac_w_, 6); }
    int covariance_resets() const {
        int n = 0;
        for (const auto* r : {&rcac_r_, &rcac_v_, &rcac_q_, &rcac_w_}) {
            if (r->has_value()) n += (*r)->covariance_resets();
        }
        return n;
    }

private:
    static RcacConfig make_loop_config(RcacConfig base, GainStructure structure) {
        base.channels = 3;
        base.structure = structure;
        return base;
    }

    static Eigen::VectorXd gains_or_zero(const std::optional<Rcac>& r, int n) {
        return r ? r->theta() : Eigen::VectorXd::Zero(n);
    }

    AutopilotConfig cfg_;
    double mass_;
    std::optional<Rcac> rcac_r_, rcac_v_, rcac_q_, rcac_w_;
    Vec3 gv_integ_{Vec3::Zero()};
    Vec3 gw_integ_{Vec3::Zero()};
    Vec3 prev_vel_meas_{Vec3::Zero()};
    bool have_prev_vel_{false};
    Vec3 rate_filt_{Vec3::Zero()};
    bool have_rate_filt_{false};
    Vec3 held_thrust_vec_{Vec3::Zero()};
    Quat held_attitude_sp_{Quat::Identity()};
    long tick_{0};
};

}  // namespace quadsim
