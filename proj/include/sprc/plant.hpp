#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstdint>
#include <vector>

#include "sprc/errors.hpp"
#include "sprc/rng.hpp"
#include "sprc/signals.hpp"

namespace sprc {

/// Second-order low-pass biquad (bilinear-discretized, exact unity DC gain).
class Biquad {
public:
    Biquad() = default;
    Biquad(double natural_freq_hz, double damping, double dt);

    double step(double x);
    void reset();

    /// Complex response at a given frequency, for cancellation oracles.
    std::complex<double> response(double freq_hz) const;

    /// Largest pole magnitude; < 1 means stable.
    double pole_radius() const;

    double dt() const { return dt_; }

private:
    double b0_ = 1.0, b1_ = 0.0, b2_ = 0.0, a1_ = 0.0, a2_ = 0.0;
    double x1_ = 0.0, x2_ = 0.0, y1_ = 0.0, y2_ = 0.0;
    double dt_ = 0.0;
};

/// Wind sequence: constant mean plus first-order colored deviations with
/// standard deviation TI * mean. Deterministic per seed.
struct WindField {
    double mean_speed = 16.0;       ///< m/s
    double turbulence_intensity = 0.0;
    std::uint64_t seed = 1;
    double coloring_tau_s = 8.0;    ///< correlation time of the deviations
};

class WindSampler {
public:
    WindSampler(const WindField& field, double dt);

    /// Next wind sample; call once per control step.
    double next();

    const WindField& field() const { return field_; }

private:
    WindField field_;
    double a_ = 0.0;
    double drive_ = 0.0;
    double state_ = 0.0;
    Rng rng_;
};

struct PlantConfig {
    int samples_per_period = 128;
    double dt = 0.05;                ///< s; rotation period is P*dt
    double gain = -50.0;             ///< kN*m per deg of filtered pitch
    double dist_amp_1p = 30.0;       ///< kN*m
    double dist_amp_2p = 6.0;        ///< kN*m
    double noise_sigma = 0.5;        ///< kN*m
    double filter_freq_ratio = 0.6;  ///< blade filter natural freq / 1P
    double filter_damping = 0.7;
    std::uint64_t noise_seed = 2;

    double rotor_speed() const { return 2.0 * M_PI / (samples_per_period * dt); } // rad/s
    double one_p_hz() const { return 1.0 / (samples_per_period * dt); }
};

/// Surrogate three-bladed rotor: per-blade pitch-to-load dynamics through a
/// shared second-order filter, an azimuth-locked 1P/2P load disturbance with
/// 120-degree blade offsets, quadratic wind modulation of the 1P amplitude,
/// and white measurement noise.
class SurrogatePlant {
public:
    explicit SurrogatePlant(const PlantConfig& cfg, double wind_mean_ref);

    /// Advance one sample: returns the three blade-root out-of-plane moments.
    Eigen::Vector3d step(double wind, const Eigen::Vector3d& pitch_cmd_deg);

    double azimuth() const; ///< of the sample about to be produced
    std::int64_t sample_index() const { return k_; }
    const PlantConfig& config() const { return cfg_; }
    std::int64_t clamp_warnings() const { return clamp_warnings_; }

    /// Pitch-to-load response at 1P (gain applied), for cancellation tests.
    std::complex<double> pitch_to_load_1p() const;

    static constexpr std::array<double, 3> kBladeOffsets = {0.0, 2.0 * M_PI / 3.0,
                                                            4.0 * M_PI / 3.0};
    static constexpr double kPitchMinDeg = -5.0;
    static constexpr double kPitchMaxDeg = 90.0;

private:
    PlantConfig cfg_;
    double wind_mean_ref_;
    std::array<Biquad, 3> blade_filter_;
    Rng noise_;
    std::int64_t k_ = 0;
    std::int64_t clamp_warnings_ = 0;
};

/// Baseline collective pitch controller: a monotone wind-speed schedule
/// tracked through a rate-limited PI servo on a first-order speed-error
/// surrogate. Always active; IPC and excitation ride on top of its output.
struct CpcConfig {
    /// (wind m/s, pitch deg) knots; linear interpolation, clamped ends.
    std::vector<std::pair<double, double>> schedule = {
        {11.4, 0.0}, {12.0, 4.0}, {16.0, 12.0}, {20.0, 17.5}, {25.0, 23.0}};
    double wind_tracking_tau_s = 30.0;
    double kp = 0.5;  ///< 1/s on the tracking error
    double ki = 0.02; ///< 1/s^2
    double rate_limit_deg_s = 5.0;
};

class BaselineCpc {
public:
    BaselineCpc(const CpcConfig& cfg, double dt);

    /// Collective pitch command (deg) for this sample.
    double step(double wind);

    double schedule_at(double wind) const;
    const CpcConfig& config() const { return cfg_; }

private:
    CpcConfig cfg_;
    double dt_;
    double wind_filtered_;
    double pitch_ = 0.0;
    double integ_ = 0.0;
    bool first_ = true;
};

} // namespace sprc
