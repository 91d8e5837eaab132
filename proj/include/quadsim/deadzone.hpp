#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "quadsim/math.hpp"

namespace quadsim {

enum class DeadzoneKind { None, N1, N2, N3 };

inline const char* to_string(DeadzoneKind k) {
    switch (k) {
        case DeadzoneKind::None: return "none";
        case DeadzoneKind::N1: return "n1";
        case DeadzoneKind::N2: return "n2";
        case DeadzoneKind::N3: return "n3";
    }
    return "?";
}

/// N1: hard deadzone. Zero inside [-s, s], identity outside.
inline double eval_n1(double x, double s) {
    if (s < 0.0) {
        throw std::invalid_argument("deadzone: N1 half-width s must be >= 0");
    }
    return std::abs(x) <= s ? 0.0 : x;
}

/// N2: C1 deadzone with cubic transition and unit-slope linear tails.
/// The tail is offset from the identity by a constant bias, so the transition
/// width s2 - s1 = sqrt(1/(3*alpha)) is fixed by the unit-slope matching.
inline double eval_n2(double x, double s1, double alpha) {
    if (s1 <= 0.0 || alpha <= 0.0) {
        throw std::invalid_argument("deadzone: N2 requires s1 > 0 and alpha > 0");
    }
    const double width = std::sqrt(1.0 / (3.0 * alpha));
    const double s2 = s1 + width;
    const double a = std::abs(x);
    double m;  // value at |x|
    if (a <= s1) {
        m = 0.0;
    } else if (a <= s2) {
        const double d = a - s1;
        m = alpha * d * d * d;
    } else {
        // alpha*(s2-s1)^3 + (a - s2); slope exactly 1 since 3*alpha*(s2-s1)^2 = 1
        m = alpha * width * width * width + (a - s2);
    }
    return x < 0.0 ? -m : m;
}

/// Cubic blend coefficients (c0, c1, c2, c3) for p(x) = c0 + c1 x + c2 x^2 + c3 x^3.
struct CubicCoeffs {
    std::array<double, 4> lower{};  // on [-s2, -s1]
    std::array<double, 4> upper{};  // on [s1, s2]
};

/// Solves the boundary-value system that makes the N3 blend C1:
///   upper: p(s1) = 0, p'(s1) = 0, p(s2) = s2, p'(s2) = 1
/// The lower cubic is the odd reflection -p(-x), i.e. (-c0, c1, -c2, c3), which
/// satisfies the mirrored conditions at -s1, -s2 with the same residual.
inline CubicCoeffs solve_cubic_coeffs(double s1, double s2) {
    if (!(s2 > s1 && s1 > 0.0)) {
        throw std::invalid_argument("deadzone: N3 requires s2 > s1 > 0");
    }
    Eigen::Matrix4d A;
    A << 1.0, s1, s1 * s1, s1 * s1 * s1,
         0.0, 1.0, 2.0 * s1, 3.0 * s1 * s1,
         1.0, s2, s2 * s2, s2 * s2 * s2,
         0.0, 1.0, 2.0 * s2, 3.0 * s2 * s2;
    const Eigen::Vector4d b(0.0, 0.0, s2, 1.0);
    const Eigen::Vector4d cu = A.colPivHouseholderQr().solve(b);
    if (!cu.allFinite() || (A * cu - b).lpNorm<Eigen::Infinity>() > 1e-10) {
        throw std::runtime_error("deadzone: cubic coefficient solve failed");
    }
    CubicCoeffs c;
    c.upper = {cu(0), cu(1), cu(2), cu(3)};
    c.lower = {-cu(0), cu(1), -cu(2), cu(3)};
    return c;
}

inline double eval_cubic(const std::array<double, 4>& c, double x) {
    return ((c[3] * x + c[2]) * x + c[1]) * x + c[0];
}

inline double eval_cubic_slope(const std::array<double, 4>& c, double x) {
    return (3.0 * c[3] * x + 2.0 * c[2]) * x + c[1];
}

/// Element-wise nonlinearity inserted ahead of the rate-loop adaptation.
/// Coefficients for N3 are computed once at construction.
struct DeadzoneConfig {
    DeadzoneKind variant{DeadzoneKind::None};
    double s{0.0};       // N1 half-width
    double s1{0.0};      // N2/N3 deadzone half-width
    double alpha{0.0};   // N2 cubic steepness
    double s2{0.0};      // N2: derived; N3: transition end
    CubicCoeffs cubic{}; // N3 blend polynomials

    static DeadzoneConfig none() { return DeadzoneConfig{}; }

    static DeadzoneConfig n1(double s) {
        if (s < 0.0) {
            throw std::invalid_argument("deadzone: N1 half-width s must be >= 0");
        }
        DeadzoneConfig cfg;
        cfg.variant = DeadzoneKind::N1;
        cfg.s = s;
        return cfg;
    }

    static DeadzoneConfig n2(double s1, double alpha) {
        if (s1 <= 0.0 || alpha <= 0.0) {
            throw std::invalid_argument("deadzone: N2 requires s1 > 0 and alpha > 0");
        }
        DeadzoneConfig cfg;
        cfg.variant = DeadzoneKind::N2;
        cfg.s1 = s1;
        cfg.alpha = alpha;
        cfg.s2 = s1 + std::sqrt(1.0 / (3.0 * alpha));
        return cfg;
    }

    static DeadzoneConfig n3(double s1, double s2) {
        DeadzoneConfig cfg;
        cfg.variant = DeadzoneKind::N3;
        cfg.s1 = s1;
        cfg.s2 = s2;
        cfg.cubic = solve_cubic_coeffs(s1, s2);
        return cfg;
    }
};

inline double eval_n3(double x, const DeadzoneConfig& cfg) {
    const double a = std::abs(x);
    if (a >= cfg.s2) {
        return x;
    }
    if (a <= cfg.s1) {
        return 0.0;
    }
    const double m = eval_cubic(cfg.cubic.upper, a);
    return x < 0.0 ? -m : m;
}

inline double eval(const DeadzoneConfig& cfg, double x) {
    switch (cfg.variant) {
        case DeadzoneKind::None: return x;
        case DeadzoneKind::N1: return eval_n1(x, cfg.s);
        case DeadzoneKind::N2: return eval_n2(x, cfg.s1, cfg.alpha);
        case DeadzoneKind::N3: return eval_n3(x, cfg);
    }
    return x;
}

inline std::vector<double> apply(const DeadzoneConfig& cfg, const std::vector<double>& z) {
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (!std::isfinite(z[i])) {
            throw std::domain_error("deadzone: non-finite input at index " + std::to_string(i));
        }
        out[i] = eval(cfg, z[i]);
    }
    return out;
}

inline Vec3 apply(const DeadzoneConfig& cfg, const Vec3& z) {
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
        if (!std::isfinite(z(i))) {
            throw std::domain_error("deadzone: non-finite input at index " + std::to_string(i));
        }
        out(i) = eval(cfg, z(i));
    }
    return out;
}

}  // namespace quadsim
