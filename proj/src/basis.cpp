#include "sprc/basis.hpp"

#include <cmath>

namespace sprc {

BasisProjection build_phi(int P, int width) {
    if (P < 3) throw ConfigError("build_phi: P must be >= 3 for independent sin/cos columns");
    if (width < 1) throw ConfigError("build_phi: width must be positive");

    BasisProjection b;
    b.P = P;
    b.width = width;
    b.phi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(P) * width, 2 * width);
    for (int k = 0; k < P; ++k) {
        const double psi = 2.0 * M_PI * k / P;
        const double s = std::sin(psi);
        const double c = std::cos(psi);
        for (int i = 0; i < width; ++i) {
            b.phi(static_cast<Eigen::Index>(k) * width + i, i) = s;
            b.phi(static_cast<Eigen::Index>(k) * width + i, width + i) = c;
        }
    }
    // (phi^T phi)^{-1} phi^T; the Gram matrix is (P/2) * I on the uniform grid.
    const Eigen::MatrixXd gram = b.phi.transpose() * b.phi;
    b.phi_pinv = gram.ldlt().solve(b.phi.transpose());
    return b;
}

Eigen::VectorXd synthesize(const BasisProjection& phi, const Eigen::VectorXd& theta) {
    if (theta.size() != phi.coeff_dim())
        throw ConfigError("synthesize: theta dimension mismatch");
    return phi.phi * theta;
}

Eigen::VectorXd project(const BasisProjection& phi, const Eigen::VectorXd& y_period) {
    if (y_period.size() != phi.phi.rows())
        throw ConfigError("project: period trajectory dimension mismatch");
    return phi.phi_pinv * y_period;
}

} // namespace sprc
