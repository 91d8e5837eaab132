#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <vector>

#include "quadsim/math.hpp"

namespace quadsim {

/// Per-channel gain layout of the adapted controller.
enum class GainStructure { P, PI, PID };

inline int gains_per_channel(GainStructure s) {
    switch (s) {
        case GainStructure::P: return 1;
        case GainStructure::PI: return 2;
        case GainStructure::PID: return 3;
    }
    return 0;
}

struct RcacConfig {
    int channels{3};
    GainStructure structure{GainStructure::PI};
    double p0{1.0};                          // initial covariance scale
    Eigen::VectorXd theta0;                  // empty = zeros
    std::vector<double> filter_coeffs{-1.0}; // target-model taps at q^-1, q^-2, ...
    double forgetting{1.0};                  // lambda in (0, 1]
    double integrator_clamp{1.0};            // may be +inf
    bool adaptation_enabled{true};
    /// Skip the RLS step entirely (gains and covariance) when every channel
    /// of z is exactly zero, i.e. fully inside a deadzone. Prevents
    /// covariance windup under forgetting while the deadzone holds the
    /// update quiescent.
    bool freeze_on_zero{true};

    int num_gains() const { return channels * gains_per_channel(structure); }

    void validate() const {
        if (channels < 1) throw std::invalid_argument("rcac: channels must be >= 1");
        if (!(p0 > 0.0)) throw std::invalid_argument("rcac: p0 must be > 0");
        if (!(forgetting > 0.0 && forgetting <= 1.0))
            throw std::invalid_argument("rcac: forgetting must be in (0, 1]");
        if (filter_coeffs.empty())
            throw std::invalid_argument("rcac: filter_coeffs must have length >= 1");
        bool any = false;
        for (double c : filter_coeffs) any = any || c != 0.0;
        if (!any) throw std::invalid_argument("rcac: filter_coeffs must not be all zero");
        if (theta0.size() != 0 && theta0.size() != num_gains())
            throw std::invalid_argument("rcac: theta0 size mismatch");
        if (!(integrator_clamp > 0.0))
            throw std::invalid_argument("rcac: integrator_clamp must be > 0");
    }
};

/// Retrospective cost adaptive controller for one loop.
///
/// Gains theta minimize the forgetting-discounted sum of the retrospective
/// performance zhat(k) = z(k) + sum_i c_i (Phi(k-i) theta - u(k-i)) plus the
/// regularizer (theta - theta0)^T (1/p0) (theta - theta0), via recursive
/// least squares. The per-tap grouping above makes the innovation exactly
/// zero once z is zeroed and theta has stopped moving, so a deadzone on z
/// freezes the gains bit-exactly.
class Rcac {
public:
    explicit Rcac(const RcacConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        if (cfg_.theta0.size() == 0) {
            cfg_.theta0 = Eigen::VectorXd::Zero(cfg_.num_gains());
        }
        warmup_ = std::max<int>(static_cast<int>(cfg_.filter_coeffs.size()), 2);
        reset();
    }

    /// Regressor Phi(k) with u(k) = Phi(k) * theta; block-diagonal across
    /// channels. Accumulates the clamped error integral as a side effect.
    Eigen::MatrixXd build_regressor(const Eigen::VectorXd& z, double dt) {
        if (!(dt > 0.0)) throw std::invalid_argument("rcac: dt must be > 0");
        if (z.size() != cfg_.channels) throw std::invalid_argument("rcac: z size mismatch");
        if (!z.allFinite()) throw std::domain_error("rcac: non-finite performance input");

        const int g = gains_per_channel(cfg_.structure);
        Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(cfg_.channels, cfg_.num_gains());
        for (int ch = 0; ch < cfg_.channels; ++ch) {
            integ_(ch) = clamp(integ_(ch) + z(ch) * dt,
                               -cfg_.integrator_clamp, cfg_.integrator_clamp);
            const int col = ch * g;
            phi(ch, col) = z(ch);
            if (g >= 2) phi(ch, col + 1) = integ_(ch);
            if (g >= 3) phi(ch, col + 2) = step_ == 0 ? 0.0 : (z(ch) - z_prev_(ch)) / dt;
        }
        z_prev_ = z;
        return phi;
    }

    /// One adaptation step: returns u(k) = Phi(k) * theta(k+1).
    Eigen::VectorXd update(const Eigen::VectorXd& z, double dt) {
        const Eigen::MatrixXd phi = build_regressor(z, dt);
        const int nf = static_cast<int>(cfg_.filter_coeffs.size());
        const bool gated = cfg_.freeze_on_zero && z.lpNorm<Eigen::Infinity>() == 0.0;

        if (cfg_.adaptation_enabled && !gated && step_ >= warmup_) {
            Eigen::MatrixXd phi_f = Eigen::MatrixXd::Zero(cfg_.channels, cfg_.num_gains());
            Eigen::VectorXd zhat = z;
            for (int i = 0; i < nf; ++i) {
                const double c = cfg_.filter_coeffs[static_cast<std::size_t>(i)];
                phi_f += c * phi_hist_[static_cast<std::size_t>(i)];
                zhat += c * (phi_hist_[static_cast<std::size_t>(i)] * theta_ -
                             u_hist_[static_cast<std::size_t>(i)]);
            }
            const double lam = cfg_.forgetting;
            const Eigen::MatrixXd s =
                lam * Eigen::MatrixXd::Identity(cfg_.channels, cfg_.channels) +
                phi_f * cov_ * phi_f.transpose();
            const Eigen::MatrixXd gain = s.ldlt().solve(phi_f * cov_).transpose();
            theta_ -= gain * zhat;
            cov_ = (cov_ - gain * phi_f * cov_) / lam;
            cov_ = (0.5 * (cov_ + cov_.transpose())).eval();
            if (!theta_.allFinite()) throw std::runtime_error("rcac: gains diverged to non-finite");
            if (Eigen::LLT<Eigen::MatrixXd>(cov_).info() != Eigen::Success) {
                cov_ = cfg_.p0 *
                       Eigen::MatrixXd::Identity(cfg_.num_gains(), cfg_.num_gains());
                ++covariance_resets_;
            }
        }

        Eigen::VectorXd u = phi * theta_;
        phi_hist_.push_front(phi);
        u_hist_.push_front(u);
        if (static_cast<int>(phi_hist_.size()) > nf) {
            phi_hist_.pop_back();
            u_hist_.pop_back();
        }
        last_phi_ = phi;
        ++step_;
        return u;
    }

    void reset() {
        theta_ = cfg_.theta0;
        cov_ = cfg_.p0 * Eigen::MatrixXd::Identity(cfg_.num_gains(), cfg_.num_gains());
        integ_ = Eigen::VectorXd::Zero(cfg_.channels);
        z_prev_ = Eigen::VectorXd::Zero(cfg_.channels);
        phi_hist_.clear();
        u_hist_.clear();
        last_phi_.resize(0, 0);
        step_ = 0;
        covariance_resets_ = 0;
    }

    const Eigen::VectorXd& theta() const { return theta_; }
    const Eigen::MatrixXd& covariance() const { return cov_; }
    const Eigen::VectorXd& integrator() const { return integ_; }
    const Eigen::MatrixXd& last_regressor() const { return last_phi_; }
    long step_count() const { return step_; }
    int covariance_resets() const { return covariance_resets_; }
    int warmup_steps() const { return warmup_; }
    const RcacConfig& config() const { return cfg_; }

private:
    RcacConfig cfg_;
    int warmup_{2};
    Eigen::VectorXd theta_;
    Eigen::MatrixXd cov_;
    Eigen::VectorXd integ_;
    Eigen::VectorXd z_prev_;
    std::deque<Eigen::MatrixXd> phi_hist_;  // front = step k-1
    std::deque<Eigen::VectorXd> u_hist_;
    Eigen::MatrixXd last_phi_;
    long step_{0};
    int covariance_resets_{0};
};

}  // namespace quadsim
