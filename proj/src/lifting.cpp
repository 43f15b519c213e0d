#include "sprc/lifting.hpp"

namespace sprc {

MarkovBlocks extract_blocks(const Eigen::MatrixXd& xi, int p, int r, int l) {
    if (p < 1 || r < 1 || l < 1) throw ConfigError("extract_blocks: bad dimensions");
    if (xi.rows() != l || xi.cols() != static_cast<Eigen::Index>(p) * (r + l))
        throw ConfigError("extract_blocks: xi must be l x p(r+l)");

    MarkovBlocks b;
    b.p = p;
    b.r = r;
    b.l = l;
    b.m_u.resize(static_cast<std::size_t>(p));
    b.m_y.resize(static_cast<std::size_t>(p));
    // Column group j of the input part holds the power p-1-j.
    for (int j = 0; j < p; ++j)
        b.m_u[static_cast<std::size_t>(p - 1 - j)] = xi.block(0, static_cast<Eigen::Index>(j) * r, l, r);
    const Eigen::Index off = static_cast<Eigen::Index>(p) * r;
    for (int j = 0; j < p; ++j)
        b.m_y[static_cast<std::size_t>(p - 1 - j)] = xi.block(0, off + static_cast<Eigen::Index>(j) * l, l, l);
    return b;
}

namespace {

// Solve (I - Gtilde) * X = B in place, where Gtilde is strictly block-lower
// Toeplitz with band p built from the m_y blocks: block row i of X is
// B_i + sum_{d=1..min(i,p)} m_y[d-1] * X_{i-d}.
void forward_substitute(const MarkovBlocks& blocks, int P, Eigen::MatrixXd& x) {
    const int l = blocks.l;
    for (int i = 1; i < P; ++i) {
        auto xi = x.middleRows(static_cast<Eigen::Index>(i) * l, l);
        const int dmax = std::min(i, blocks.p);
        for (int d = 1; d <= dmax; ++d)
            xi += blocks.m_y[static_cast<std::size_t>(d - 1)] *
                  x.middleRows(static_cast<Eigen::Index>(i - d) * l, l);
    }
}

} // namespace

LiftedPredictor assemble_lifted(const MarkovBlocks& blocks, int P) {
    const int p = blocks.p;
    const int r = blocks.r;
    const int l = blocks.l;
    if (P < p) throw ConfigError("assemble_lifted: P must be >= p");

    LiftedPredictor lp;
    lp.P = P;
    lp.p = p;
    lp.r = r;
    lp.l = l;

    // Htilde (input Toeplitz): block(i,j) = m_u[i-j-1] for 1 <= i-j <= p.
    lp.h_hat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(l) * P, static_cast<Eigen::Index>(r) * P);
    for (int i = 1; i < P; ++i) {
        const int jmin = std::max(0, i - p);
        for (int j = jmin; j < i; ++j)
            lp.h_hat.block(static_cast<Eigen::Index>(i) * l, static_cast<Eigen::Index>(j) * r, l, r) =
                blocks.m_u[static_cast<std::size_t>(i - j - 1)];
    }

    // Gamma*K products before the (I-G)^{-1} factor: block(i,j) is the power
    // i + P-1-j, kept only while it stays below the truncation order p.
    lp.gamma_ku = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(l) * P, static_cast<Eigen::Index>(r) * P);
    lp.gamma_ky = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(l) * P, static_cast<Eigen::Index>(l) * P);
    for (int i = 0; i < P; ++i) {
        for (int j = P - p + i; j < P; ++j) {
            if (j < 0) continue;
            const int e = i + P - 1 - j;
            if (e < 0 || e >= p) continue;
            lp.gamma_ku.block(static_cast<Eigen::Index>(i) * l, static_cast<Eigen::Index>(j) * r, l, r) =
                blocks.m_u[static_cast<std::size_t>(e)];
            lp.gamma_ky.block(static_cast<Eigen::Index>(i) * l, static_cast<Eigen::Index>(j) * l, l, l) =
                blocks.m_y[static_cast<std::size_t>(e)];
        }
    }

    forward_substitute(blocks, P, lp.h_hat);
    forward_substitute(blocks, P, lp.gamma_ku);
    forward_substitute(blocks, P, lp.gamma_ky);
    return lp;
}

ReducedModel reduce(const LiftedPredictor& lifted, const BasisProjection& phi) {
    if (lifted.r != lifted.l)
        throw ConfigError("reduce: equal input/output widths expected (one basis serves both)");
    if (phi.P != lifted.P || phi.width != lifted.r)
        throw ConfigError("reduce: basis inconsistent with lifted predictor");

    const int b2 = phi.coeff_dim(); // 2 * width
    const Eigen::MatrixXd mu = phi.phi_pinv * (lifted.gamma_ku * phi.phi);
    const Eigen::MatrixXd my = phi.phi_pinv * (lifted.gamma_ky * phi.phi);
    const Eigen::MatrixXd mh = phi.phi_pinv * (lifted.h_hat * phi.phi);

    ReducedModel m;
    m.state_dim = 3 * b2;
    m.input_dim = b2;
    m.a_bar = Eigen::MatrixXd::Zero(m.state_dim, m.state_dim);
    m.a_bar.block(0, 0, b2, b2) = Eigen::MatrixXd::Identity(b2, b2);
    m.a_bar.block(0, b2, b2, b2) = mu;
    m.a_bar.block(0, 2 * b2, b2, b2) = my;
    m.a_bar.block(2 * b2, b2, b2, b2) = mu;
    m.a_bar.block(2 * b2, 2 * b2, b2, b2) = my;

    m.b_hat = Eigen::MatrixXd::Zero(m.state_dim, b2);
    m.b_hat.block(0, 0, b2, b2) = mh;
    m.b_hat.block(b2, 0, b2, b2) = Eigen::MatrixXd::Identity(b2, b2);
    m.b_hat.block(2 * b2, 0, b2, b2) = mh;
    return m;
}

Eigen::VectorXd predict_next_period(const LiftedPredictor& lp,
                                    const Eigen::VectorXd& y_period,
                                    const Eigen::VectorXd& du_period,
                                    const Eigen::VectorXd& dy_period,
                                    const Eigen::VectorXd& du_next_period) {
    if (y_period.size() != lp.gamma_ky.rows() || dy_period.size() != lp.gamma_ky.cols() ||
        du_period.size() != lp.gamma_ku.cols() || du_next_period.size() != lp.h_hat.cols())
        throw ConfigError("predict_next_period: dimension mismatch");
    return y_period + lp.gamma_ku * du_period + lp.gamma_ky * dy_period + lp.h_hat * du_next_period;
}

} // namespace sprc
