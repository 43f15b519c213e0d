#include "sprc/signals.hpp"

#include <cmath>

namespace sprc {

PeriodClock::PeriodClock(int P, double dt_s) : samples_per_period(P), dt(dt_s) {
    if (P < 3) throw ConfigError("PeriodClock: samples_per_period must be >= 3");
    if (!(dt_s > 0.0)) throw ConfigError("PeriodClock: dt must be positive");
}

double PeriodClock::azimuth_of(std::int64_t k) const {
    const std::int64_t m = ((k % samples_per_period) + samples_per_period) % samples_per_period;
    return 2.0 * M_PI * static_cast<double>(m) / static_cast<double>(samples_per_period);
}

DeltaBuffer::DeltaBuffer(int width, int period, int past_window)
    : width_(width), period_(period), capacity_(period + past_window + 1) {
    if (width <= 0) throw ConfigError("DeltaBuffer: width must be positive");
    if (period < 3) throw ConfigError("DeltaBuffer: period must be >= 3");
    if (past_window < 1) throw ConfigError("DeltaBuffer: past window must be >= 1");
    slots_.assign(capacity_, Eigen::VectorXd::Zero(width));
}

void DeltaBuffer::push(const Eigen::VectorXd& v) {
    if (v.size() != width_)
        throw ConfigError("DeltaBuffer: sample width mismatch");
    slots_[static_cast<std::size_t>(count_ % capacity_)] = v;
    ++count_;
}

bool DeltaBuffer::delta_ready(std::int64_t k) const {
    return k >= period_ && holds(k) && holds(k - period_);
}

const Eigen::VectorXd& DeltaBuffer::value(std::int64_t k) const {
    if (!holds(k)) throw NotReadyError("DeltaBuffer: sample index out of held range");
    return slots_[static_cast<std::size_t>(k % capacity_)];
}

Eigen::VectorXd DeltaBuffer::delta(std::int64_t k) const {
    if (!delta_ready(k))
        throw NotReadyError("DeltaBuffer: delta(k) needs samples k and k-P in the buffer");
    return value(k) - value(k - period_);
}

SignalLog::SignalLog(const PeriodClock& clock, int input_width, int output_width, int past_window)
    : clock_(clock),
      past_window_(past_window),
      u_(input_width, clock.samples_per_period, past_window),
      y_(output_width, clock.samples_per_period, past_window) {}

void SignalLog::push_sample(const Eigen::VectorXd& u, const Eigen::VectorXd& y) {
    u_.push(u);
    y_.push(y);
    ++count_;
}

StackedWindow SignalLog::stacked_windows(std::int64_t k, int p) const {
    if (p < 1 || p > past_window_)
        throw ConfigError("SignalLog: window length p out of configured range");
    StackedWindow w;
    w.p = p;
    w.du.resize(static_cast<Eigen::Index>(p) * u_.width());
    w.dy.resize(static_cast<Eigen::Index>(p) * y_.width());
    for (int i = 0; i < p; ++i) {
        w.du.segment(static_cast<Eigen::Index>(i) * u_.width(), u_.width()) = u_.delta(k + i);
        w.dy.segment(static_cast<Eigen::Index>(i) * y_.width(), y_.width()) = y_.delta(k + i);
    }
    return w;
}

} // namespace sprc
