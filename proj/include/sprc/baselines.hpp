#pragma once

#include <Eigen/Dense>

#include <utility>

#include "sprc/errors.hpp"

namespace sprc {

/// Forward Coleman transform: rotating blade loads -> fixed-frame tilt/yaw.
/// psi_i = azimuth + blade offset (0, 120, 240 deg).
std::pair<double, double> coleman_forward(const Eigen::Vector3d& loads, double azimuth);

struct MbcConfig {
    double ki = -8e-4;            ///< integral gain, sign matches plant gain
    double lp_cutoff_ratio = 0.05; ///< tilt/yaw low-pass cutoff as fraction of 1P
    double azimuth_offset = -0.93; ///< rad; compensates plant phase lag at 1P
    double integrator_limit_deg = 6.0;
    double u_max = 1e9;           ///< total-pitch box for the saturation block
    double du_max = 1e9;          ///< deg/s rate clip
    double dt = 0.05;
    double one_p_hz = 0.15625;
};

/// Multi-blade-coordinate IPC with output saturation: integrate low-passed
/// tilt/yaw loads, inverse-transform to per-blade pitch, then hard-clip to
/// the angle box and rate-clip per sample. The clipping is the point of this
/// comparator; it is what manufactures the high pitch harmonics under tight
/// limits.
class MbcIpc {
public:
    explicit MbcIpc(const MbcConfig& cfg);

    /// One sample: measured blade loads + azimuth + current collective pitch
    /// (needed to place the angle box on the total command).
    Eigen::Vector3d step(const Eigen::Vector3d& loads, double azimuth, double collective_deg);

    std::pair<double, double> integrator() const { return {integ_tilt_, integ_yaw_}; }
    const MbcConfig& config() const { return cfg_; }

    /// Swap the saturation box mid-run (constraint activation protocol).
    void set_limits(double u_max, double du_max);

private:
    MbcConfig cfg_;
    double lp_alpha_;
    double tilt_f_ = 0.0;
    double yaw_f_ = 0.0;
    double integ_tilt_ = 0.0;
    double integ_yaw_ = 0.0;
    Eigen::Vector3d prev_ipc_ = Eigen::Vector3d::Zero();
};

} // namespace sprc
