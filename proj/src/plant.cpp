#include "sprc/plant.hpp"

#include <algorithm>
#include <cmath>

namespace sprc {

Biquad::Biquad(double natural_freq_hz, double damping, double dt) : dt_(dt) {
    if (!(natural_freq_hz > 0.0) || !(damping > 0.0) || !(dt > 0.0))
        throw ConfigError("Biquad: frequency, damping and dt must be positive");
    // Bilinear transform of wn^2 / (s^2 + 2*z*wn*s + wn^2).
    const double wn = 2.0 * M_PI * natural_freq_hz;
    const double k = 2.0 / dt;
    const double a0 = k * k + 2.0 * damping * wn * k + wn * wn;
    b0_ = wn * wn / a0;
    b1_ = 2.0 * b0_;
    b2_ = b0_;
    a1_ = (2.0 * wn * wn - 2.0 * k * k) / a0;
    a2_ = (k * k - 2.0 * damping * wn * k + wn * wn) / a0;
    // Normalize DC gain to exactly one.
    const double dc = (b0_ + b1_ + b2_) / (1.0 + a1_ + a2_);
    b0_ /= dc;
    b1_ /= dc;
    b2_ /= dc;
}

double Biquad::step(double x) {
    const double y = b0_ * x + b1_ * x1_ + b2_ * x2_ - a1_ * y1_ - a2_ * y2_;
    x2_ = x1_;
    x1_ = x;
    y2_ = y1_;
    y1_ = y;
    return y;
}

void Biquad::reset() { x1_ = x2_ = y1_ = y2_ = 0.0; }

std::complex<double> Biquad::response(double freq_hz) const {
    const std::complex<double> z = std::polar(1.0, 2.0 * M_PI * freq_hz * dt_);
    const std::complex<double> zi = 1.0 / z;
    return (b0_ + b1_ * zi + b2_ * zi * zi) / (1.0 + a1_ * zi + a2_ * zi * zi);
}

double Biquad::pole_radius() const {
    const std::complex<double> disc = std::sqrt(std::complex<double>(a1_ * a1_ - 4.0 * a2_, 0.0));
    const std::complex<double> p1 = 0.5 * (-a1_ + disc);
    const std::complex<double> p2 = 0.5 * (-a1_ - disc);
    return std::max(std::abs(p1), std::abs(p2));
}

WindSampler::WindSampler(const WindField& field, double dt) : field_(field), rng_(field.seed) {
    if (field.turbulence_intensity < 0.0)
        throw ConfigError("WindSampler: turbulence intensity must be >= 0");
    if (!(field.coloring_tau_s > 0.0)) throw ConfigError("WindSampler: coloring tau must be > 0");
    a_ = std::exp(-dt / field.coloring_tau_s);
    // Stationary std of the AR(1) deviation equals TI * mean.
    drive_ = field.turbulence_intensity * field.mean_speed * std::sqrt(1.0 - a_ * a_);
}

double WindSampler::next() {
    if (field_.turbulence_intensity == 0.0) return field_.mean_speed;
    state_ = a_ * state_ + drive_ * rng_.gaussian();
    return field_.mean_speed + state_;
}

SurrogatePlant::SurrogatePlant(const PlantConfig& cfg, double wind_mean_ref)
    : cfg_(cfg), wind_mean_ref_(wind_mean_ref), noise_(cfg.noise_seed) {
    if (cfg.samples_per_period < 3) throw ConfigError("SurrogatePlant: P must be >= 3");
    if (!(cfg.dt > 0.0)) throw ConfigError("SurrogatePlant: dt must be positive");
    if (!(wind_mean_ref > 0.0)) throw ConfigError("SurrogatePlant: reference wind must be > 0");
    const double fn = cfg.filter_freq_ratio * cfg.one_p_hz();
    for (auto& f : blade_filter_) f = Biquad(fn, cfg.filter_damping, cfg.dt);
    // PeriodClock would reject any P/dt pair the plant accepts; construct one
    // to keep the consistency check in a single place.
    PeriodClock check(cfg.samples_per_period, cfg.dt);
    (void)check;
}

double SurrogatePlant::azimuth() const {
    const std::int64_t m = k_ % cfg_.samples_per_period;
    return 2.0 * M_PI * static_cast<double>(m) / cfg_.samples_per_period;
}

std::complex<double> SurrogatePlant::pitch_to_load_1p() const {
    return cfg_.gain * blade_filter_[0].response(cfg_.one_p_hz());
}

Eigen::Vector3d SurrogatePlant::step(double wind, const Eigen::Vector3d& pitch_cmd_deg) {
    const double psi = azimuth();
    const double mod = (wind / wind_mean_ref_) * (wind / wind_mean_ref_);
    Eigen::Vector3d moop;
    for (int i = 0; i < 3; ++i) {
        double pitch = pitch_cmd_deg(i);
        if (pitch < kPitchMinDeg || pitch > kPitchMaxDeg) {
            ++clamp_warnings_;
            pitch = std::clamp(pitch, kPitchMinDeg, kPitchMaxDeg);
        }
        const double filtered = blade_filter_[static_cast<std::size_t>(i)].step(pitch);
        const double psi_i = psi + kBladeOffsets[static_cast<std::size_t>(i)];
        double v = cfg_.gain * filtered;
        v += cfg_.dist_amp_1p * std::cos(psi_i) * mod;
        v += cfg_.dist_amp_2p * std::cos(2.0 * psi_i);
        if (cfg_.noise_sigma > 0.0) v += cfg_.noise_sigma * noise_.gaussian();
        moop(i) = v;
    }
    ++k_;
    return moop;
}

BaselineCpc::BaselineCpc(const CpcConfig& cfg, double dt) : cfg_(cfg), dt_(dt), wind_filtered_(0.0) {
    if (cfg.schedule.empty()) throw ConfigError("BaselineCpc: schedule must not be empty");
    for (std::size_t i = 1; i < cfg.schedule.size(); ++i) {
        if (cfg.schedule[i].first <= cfg.schedule[i - 1].first ||
            cfg.schedule[i].second < cfg.schedule[i - 1].second)
            throw ConfigError("BaselineCpc: schedule must be monotone");
    }
    if (!(dt > 0.0)) throw ConfigError("BaselineCpc: dt must be positive");
}

double BaselineCpc::schedule_at(double wind) const {
    const auto& s = cfg_.schedule;
    if (wind <= s.front().first) return s.front().second;
    if (wind >= s.back().first) return s.back().second;
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (wind <= s[i].first) {
            const double t = (wind - s[i - 1].first) / (s[i].first - s[i - 1].first);
            return s[i - 1].second + t * (s[i].second - s[i - 1].second);
        }
    }
    return s.back().second;
}

double BaselineCpc::step(double wind) {
    if (first_) {
        // Start converged at the initial wind so runs don't open with a
        // several-second pitch ramp transient.
        wind_filtered_ = wind;
        pitch_ = schedule_at(wind);
        first_ = false;
        return pitch_;
    }
    wind_filtered_ += (wind - wind_filtered_) * (dt_ / cfg_.wind_tracking_tau_s);
    const double ref = schedule_at(wind_filtered_);
    const double err = ref - pitch_;
    integ_ += cfg_.ki * err * dt_;
    integ_ = std::clamp(integ_, -cfg_.rate_limit_deg_s, cfg_.rate_limit_deg_s);
    double rate = cfg_.kp * err + integ_;
    rate = std::clamp(rate, -cfg_.rate_limit_deg_s, cfg_.rate_limit_deg_s);
    pitch_ += rate * dt_;
    pitch_ = std::max(pitch_, 0.0);
    return pitch_;
}

} // namespace sprc
