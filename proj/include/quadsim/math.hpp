#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <random>

namespace quadsim {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Quat = Eigen::Quaterniond;

constexpr double kGravity = 9.80665;  // m/s^2, NED +z (down)

inline double clamp(double v, double lo, double hi) {
    return v < lo ? lo : (v > hi ? hi : v);
}

inline Vec3 clamp_abs(const Vec3& v, double limit) {
    return {clamp(v.x(), -limit, limit),
            clamp(v.y(), -limit, limit),
            clamp(v.z(), -limit, limit)};
}

/// Normally distributed samples from a mt19937_64 stream.
///
/// std::normal_distribution is implementation-defined, so the same seed can
/// give different sequences on different standard libraries. Box-Muller on
/// the (fully specified) mt19937_64 output keeps logs bit-reproducible.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

    double sample(double std_dev) {
        if (std_dev <= 0.0) {
            return 0.0;
        }
        if (have_spare_) {
            have_spare_ = false;
            return spare_ * std_dev;
        }
        // (0,1] uniforms; u1 > 0 keeps the log finite
        const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a) * std_dev;
    }

    Vec3 sample_vec3(double std_dev) {
        return {sample(std_dev), sample(std_dev), sample(std_dev)};
    }

private:
    std::mt19937_64 engine_;
    double spare_{0.0};
    bool have_spare_{false};
};

}  // namespace quadsim
