#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sprc/errors.hpp"

namespace sprc {

/// Actuator duty cycle over a window: rate-normalized time integral of pitch
/// motion, in percent. 100% means the actuator moved at its rate limit the
/// whole time.
struct AdcReport {
    double adc_percent = 0.0;
    double window_start_s = 0.0;
    double window_end_s = 0.0;
};

AdcReport adc(std::span<const double> pitch_deg, double dt, double du_max_deg_s,
              double window_start_s = 0.0, double window_end_s = -1.0);

/// Welch averaged periodogram with a periodic Hann window.
/// segment_len is coerced down to a power of two (radix-2 transform);
/// the effective length is reported back in the result.
struct PsdReport {
    std::vector<double> frequency_hz;
    std::vector<double> density; ///< one-sided, unit^2 / Hz
    int segment_len = 0;
    double overlap = 0.0;
    int n_segments = 0;
    double fs = 0.0;

    /// Density at the bin nearest to freq_hz.
    double density_at(double freq_hz) const;
    /// Total power by trapezoid-free bin sum (density * df).
    double integrated_power() const;
    /// Power integrated over bins within +-half_bins of freq_hz.
    double band_power(double freq_hz, int half_bins) const;
};

PsdReport psd(std::span<const double> series, double dt, int segment_len, double overlap = 0.5);

/// Exact per-sample audit of an angle box [0, u_max] and a first-difference
/// rate limit du_max. Rates use diffs of consecutive samples inside the
/// window only.
struct AuditReport {
    double max_angle_excess = 0.0; ///< deg above u_max
    double max_lower_excess = 0.0; ///< deg below 0
    double max_rate_excess = 0.0;  ///< deg/s above du_max
    std::size_t angle_violations = 0;
    std::size_t rate_violations = 0;

    bool clean(double tol_deg = 0.0, double tol_rate = 0.0) const {
        return max_angle_excess <= tol_deg && max_lower_excess <= tol_deg &&
               max_rate_excess <= tol_rate;
    }
};

AuditReport audit_constraints(std::span<const double> pitch_deg, double u_max, double du_max,
                              double dt);

/// Amplitude of the single-frequency DFT bin of a series (2/N * |sum x e^-jwk|).
/// Exact for integer numbers of cycles in the window.
double bin_amplitude(std::span<const double> series, double dt, double freq_hz);

} // namespace sprc
