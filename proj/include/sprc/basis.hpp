#pragma once

#include <Eigen/Dense>

#include "sprc/errors.hpp"

namespace sprc {

/// Sinusoidal 1P basis over one rotation: phi = [sin(psi) cos(psi)] (x) I_w,
/// psi on the uniform azimuth grid 2*pi*k/P. Column ordering is the sine
/// block first, then the cosine block (one column per channel in each).
///
/// Restricting the pitch trajectory to range(phi) is what keeps the command
/// a clean 1P sinusoid; anything at other frequencies is invisible to
/// project() by construction.
struct BasisProjection {
    Eigen::MatrixXd phi;      ///< (P*w) x (2*w)
    Eigen::MatrixXd phi_pinv; ///< (2*w) x (P*w), Moore-Penrose pseudo-inverse
    int P = 0;
    int width = 0;

    int coeff_dim() const { return 2 * width; }

    /// phi restricted to one azimuth sample k: w x (2*w).
    Eigen::MatrixXd row_block(int k) const {
        return phi.block(static_cast<Eigen::Index>(k) * width, 0, width, phi.cols());
    }
};

/// Build the basis for P uniform azimuth samples and `width` channels.
BasisProjection build_phi(int P, int width);

/// U = phi * theta: per-period trajectory of length P*width.
Eigen::VectorXd synthesize(const BasisProjection& phi, const Eigen::VectorXd& theta);

/// Ybar = phi^+ * y_period: least-squares 1P coefficients of one period.
Eigen::VectorXd project(const BasisProjection& phi, const Eigen::VectorXd& y_period);

} // namespace sprc
