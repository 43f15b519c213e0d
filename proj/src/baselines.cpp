#include "sprc/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "sprc/plant.hpp"

namespace sprc {

std::pair<double, double> coleman_forward(const Eigen::Vector3d& loads, double azimuth) {
    double tilt = 0.0;
    double yaw = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double psi = azimuth + SurrogatePlant::kBladeOffsets[static_cast<std::size_t>(i)];
        tilt += std::cos(psi) * loads(i);
        yaw += std::sin(psi) * loads(i);
    }
    return {2.0 / 3.0 * tilt, 2.0 / 3.0 * yaw};
}

MbcIpc::MbcIpc(const MbcConfig& cfg) : cfg_(cfg) {
    if (!(cfg.dt > 0.0) || !(cfg.one_p_hz > 0.0)) throw ConfigError("MbcIpc: bad timing config");
    if (!(cfg.u_max > 0.0) || !(cfg.du_max > 0.0)) throw ConfigError("MbcIpc: bad limits");
    const double cutoff_hz = cfg.lp_cutoff_ratio * cfg.one_p_hz;
    lp_alpha_ = 1.0 - std::exp(-2.0 * M_PI * cutoff_hz * cfg.dt);
}

void MbcIpc::set_limits(double u_max, double du_max) {
    if (!(u_max > 0.0) || !(du_max > 0.0)) throw ConfigError("MbcIpc: bad limits");
    cfg_.u_max = u_max;
    cfg_.du_max = du_max;
}

Eigen::Vector3d MbcIpc::step(const Eigen::Vector3d& loads, double azimuth, double collective_deg) {
    const auto [tilt, yaw] = coleman_forward(loads, azimuth);
    tilt_f_ += lp_alpha_ * (tilt - tilt_f_);
    yaw_f_ += lp_alpha_ * (yaw - yaw_f_);

    integ_tilt_ += cfg_.ki * cfg_.dt * tilt_f_;
    integ_yaw_ += cfg_.ki * cfg_.dt * yaw_f_;
    const double mag = std::hypot(integ_tilt_, integ_yaw_);
    if (mag > cfg_.integrator_limit_deg) {
        integ_tilt_ *= cfg_.integrator_limit_deg / mag;
        integ_yaw_ *= cfg_.integrator_limit_deg / mag;
    }

    Eigen::Vector3d ipc;
    for (int i = 0; i < 3; ++i) {
        const double psi = azimuth + SurrogatePlant::kBladeOffsets[static_cast<std::size_t>(i)] +
                           cfg_.azimuth_offset;
        ipc(i) = std::cos(psi) * integ_tilt_ + std::sin(psi) * integ_yaw_;
    }

    // Saturation block: angle box on the total command, then per-sample rate clip.
    const double lo = -collective_deg;
    const double hi = cfg_.u_max - collective_deg;
    const double dmax = cfg_.du_max * cfg_.dt;
    for (int i = 0; i < 3; ++i) {
        double v = std::clamp(ipc(i), lo, hi);
        v = prev_ipc_(i) + std::clamp(v - prev_ipc_(i), -dmax, dmax);
        ipc(i) = v;
    }
    prev_ipc_ = ipc;
    return ipc;
}

} // namespace sprc
