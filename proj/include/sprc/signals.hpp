#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "sprc/errors.hpp"

namespace sprc {

/// Fixed rotation timing: P samples per revolution at step dt.
/// The rotor is azimuth-locked, so azimuth is derived from the sample index.
struct PeriodClock {
    int samples_per_period = 0; ///< P
    double dt = 0.0;            ///< seconds per sample

    PeriodClock(int P, double dt_s);

    double azimuth_of(std::int64_t k) const;
    double rotation_period() const { return samples_per_period * dt; }
    bool at_boundary(std::int64_t k) const { return k % samples_per_period == 0; }
};

/// Ring buffer of the last `capacity` vector samples, addressed by absolute
/// sample index, exposing the periodic difference delta(k) = v(k) - v(k-P).
class DeltaBuffer {
public:
    DeltaBuffer(int width, int period, int past_window);

    void push(const Eigen::VectorXd& v);

    /// v(k) - v(k-P). Throws NotReadyError until both samples are held.
    Eigen::VectorXd delta(std::int64_t k) const;

    bool delta_ready(std::int64_t k) const;

    const Eigen::VectorXd& value(std::int64_t k) const;

    int width() const { return width_; }
    int period() const { return period_; }
    std::int64_t count() const { return count_; }

private:
    int width_;
    int period_;
    int capacity_;
    std::int64_t count_ = 0; // samples pushed so far; valid indices [count-capacity, count)
    std::vector<Eigen::VectorXd> slots_;

    bool holds(std::int64_t k) const { return k >= 0 && k < count_ && k >= count_ - capacity_; }
};

/// One past-window regressor pair: delta-input and delta-output windows
/// stacked oldest-first, covering samples k .. k+p-1.
struct StackedWindow {
    Eigen::VectorXd du; ///< length p*r
    Eigen::VectorXd dy; ///< length p*l
    int p = 0;
};

/// Paired input/output history for one control loop.
class SignalLog {
public:
    SignalLog(const PeriodClock& clock, int input_width, int output_width, int past_window);

    /// Record one sample of applied pitch u and measured load y.
    void push_sample(const Eigen::VectorXd& u, const Eigen::VectorXd& y);

    Eigen::VectorXd delta_u(std::int64_t k) const { return u_.delta(k); }
    Eigen::VectorXd delta_y(std::int64_t k) const { return y_.delta(k); }

    /// Windows over samples k .. k+p-1 (needs delta history for all of them).
    StackedWindow stacked_windows(std::int64_t k, int p) const;

    std::int64_t count() const { return count_; }
    bool delta_ready(std::int64_t k) const { return u_.delta_ready(k) && y_.delta_ready(k); }

    const PeriodClock& clock() const { return clock_; }
    int input_width() const { return u_.width(); }
    int output_width() const { return y_.width(); }
    int past_window() const { return past_window_; }

private:
    PeriodClock clock_;
    int past_window_;
    DeltaBuffer u_;
    DeltaBuffer y_;
    std::int64_t count_ = 0;
};

} // namespace sprc
