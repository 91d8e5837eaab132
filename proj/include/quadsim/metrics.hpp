#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "quadsim/flight_log.hpp"

namespace quadsim {

/// Start/end holds are excluded from the mission cost metrics.
constexpr double kMetricsEdgeTrimS = 5.0;

namespace detail {

inline std::pair<std::size_t, std::size_t> active_window(const FlightLog& log,
                                                         double edge_trim_s) {
    if (log.rows.empty()) throw std::invalid_argument("metrics: empty log");
    const double t0 = log.rows.front().t + edge_trim_s;
    const double t1 = log.rows.back().t - edge_trim_s;
    std::size_t i0 = 0, i1 = log.rows.size();
    if (t1 > t0) {
        while (i0 < log.rows.size() && log.rows[i0].t < t0) ++i0;
        while (i1 > i0 && log.rows[i1 - 1].t > t1) --i1;
    }
    if (i0 >= i1) {  // log shorter than the trims: fall back to the whole log
        i0 = 0;
        i1 = log.rows.size();
    }
    return {i0, i1};
}

}  // namespace detail

/// RMS position tracking error over the mission's active window.
inline double j_r(const FlightLog& log, double edge_trim_s = kMetricsEdgeTrimS) {
    const auto [i0, i1] = detail::active_window(log, edge_trim_s);
    double acc = 0.0;
    for (std::size_t i = i0; i < i1; ++i) {
        acc += (log.rows[i].pos_sp - log.rows[i].pos).squaredNorm();
    }
    return std::sqrt(acc / static_cast<double>(i1 - i0));
}

/// RMS pitch-rate error over the mission's active window.
inline double j_omega(const FlightLog& log, double edge_trim_s = kMetricsEdgeTrimS) {
    const auto [i0, i1] = detail::active_window(log, edge_trim_s);
    double acc = 0.0;
    for (std::size_t i = i0; i < i1; ++i) {
        acc += log.rows[i].z_w.y() * log.rows[i].z_w.y();
    }
    return std::sqrt(acc / static_cast<double>(i1 - i0));
}

namespace detail {

inline void fft_radix2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

}  // namespace detail

struct Spectrum {
    std::vector<double> freq_hz;    // 0 .. 1/(2 dt)
    std::vector<double> magnitude;  // |X_k| of the mean-removed, Hann-windowed signal
    std::size_t padded_length{0};
};

/// One-sided DFT magnitude spectrum. The signal is mean-removed, windowed
/// with a symmetric Hann window, zero-padded to a power of two, and
/// transformed with a radix-2 FFT.
inline Spectrum spectrum(const std::vector<double>& signal, double dt) {
    if (signal.size() < 64) throw std::invalid_argument("metrics: signal shorter than 64 samples");
    if (!(dt > 0.0)) throw std::invalid_argument("metrics: dt must be > 0");

    const std::size_t n = signal.size();
    double mean = 0.0;
    for (double v : signal) mean += v;
    mean /= static_cast<double>(n);

    std::size_t padded = 1;
    while (padded < n) padded <<= 1;

    std::vector<std::complex<double>> a(padded, {0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) {
        const double w =
            0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) /
                                  static_cast<double>(n - 1)));
        a[i] = {(signal[i] - mean) * w, 0.0};
    }
    detail::fft_radix2(a);

    Spectrum s;
    s.padded_length = padded;
    const std::size_t half = padded / 2;
    s.freq_hz.reserve(half + 1);
    s.magnitude.reserve(half + 1);
    for (std::size_t k = 0; k <= half; ++k) {
        s.freq_hz.push_back(static_cast<double>(k) / (static_cast<double>(padded) * dt));
        s.magnitude.push_back(std::abs(a[k]));
    }
    return s;
}

/// Fraction of spectral power above cutoff_hz, in [0, 1].
inline double band_power_ratio(const Spectrum& spec, double cutoff_hz) {
    if (spec.freq_hz.empty()) throw std::invalid_argument("metrics: empty spectrum");
    if (!(cutoff_hz >= 0.0 && cutoff_hz <= spec.freq_hz.back())) {
        throw std::invalid_argument("metrics: cutoff outside Nyquist range");
    }
    double total = 0.0, high = 0.0;
    for (std::size_t k = 0; k < spec.freq_hz.size(); ++k) {
        const double p = spec.magnitude[k] * spec.magnitude[k];
        total += p;
        if (spec.freq_hz[k] > cutoff_hz) high += p;
    }
    return total > 0.0 ? high / total : 0.0;
}

struct MetricsConfig {
    double hf_cutoff_hz{10.0};        // oscillation scalar cutoff
    double oscillation_threshold{0.2};
    double edge_trim_s{kMetricsEdgeTrimS};
};

struct DriftTrace {
    std::vector<double> t;
    std::vector<double> theta_norm;  // ||theta_w(k)||
    double max_norm{0.0};
    double final_norm{0.0};
};

inline DriftTrace drift_trace(const FlightLog& log) {
    if (log.rows.empty()) throw std::invalid_argument("metrics: empty log");
    DriftTrace d;
    d.t.reserve(log.rows.size());
    d.theta_norm.reserve(log.rows.size());
    for (const auto& row : log.rows) {
        double sq = 0.0;
        for (double g : row.theta_w) sq += g * g;
        const double norm = std::sqrt(sq);
        d.t.push_back(row.t);
        d.theta_norm.push_back(norm);
        d.max_norm = std::max(d.max_norm, norm);
    }
    d.final_norm = d.theta_norm.back();
    return d;
}

struct MetricsReport {
    double j_r{0.0};
    double j_omega{0.0};
    double band_power_ratio{0.0};  // pitch moment power above the cutoff
    double theta_final_norm{0.0};
    double theta_max_norm{0.0};
    bool oscillation_flag{false};
};

inline MetricsReport evaluate(const FlightLog& log, const MetricsConfig& cfg = {}) {
    MetricsReport r;
    r.j_r = j_r(log, cfg.edge_trim_s);
    r.j_omega = j_omega(log, cfg.edge_trim_s);

    const auto [i0, i1] = detail::active_window(log, cfg.edge_trim_s);
    std::vector<double> pitch_moment;
    pitch_moment.reserve(i1 - i0);
    for (std::size_t i = i0; i < i1; ++i) pitch_moment.push_back(log.rows[i].moment_sp.y());
    if (pitch_moment.size() >= 64) {
        r.band_power_ratio = band_power_ratio(spectrum(pitch_moment, log.dt), cfg.hf_cutoff_hz);
    }
    r.oscillation_flag = r.band_power_ratio > cfg.oscillation_threshold;

    const DriftTrace d = drift_trace(log);
    r.theta_max_norm = d.max_norm;
    r.theta_final_norm = d.final_norm;
    return r;
}

}  // namespace quadsim
