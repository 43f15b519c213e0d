#pragma once

#include <Eigen/Dense>

#include <vector>

#include "sprc/basis.hpp"
#include "sprc/errors.hpp"

namespace sprc {

/// Impulse-response blocks pulled out of the Markov matrix estimate.
/// m_u[i] is the l x r product C*Atilde^i*B, m_y[i] the l x l product
/// C*Atilde^i*L, for i = 0 .. p-1. The estimate stores them reversed
/// (highest power first), hence the index flip in extract_blocks.
struct MarkovBlocks {
    std::vector<Eigen::MatrixXd> m_u;
    std::vector<Eigen::MatrixXd> m_y;
    int p = 0;
    int r = 0;
    int l = 0;
};

/// Period-lifted predictor matrices over one rotation of P samples:
///   Y_{k+P} = Y_k + gamma_ku * dU_k + gamma_ky * dY_k + h_hat * dU_{k+P}.
/// All three are built from the Markov blocks with powers >= p truncated to
/// zero, and carry the (I - Gtilde)^{-1} factor applied by block forward
/// substitution (the unit-lower-triangular structure makes that exact).
struct LiftedPredictor {
    Eigen::MatrixXd gamma_ku; ///< (l*P) x (r*P)
    Eigen::MatrixXd gamma_ky; ///< (l*P) x (l*P)
    Eigen::MatrixXd h_hat;    ///< (l*P) x (r*P), block-lower-triangular
    int P = 0;
    int p = 0;
    int r = 0;
    int l = 0;
};

/// Rotation-indexed model in the 1P coefficient space. State is
/// [Ybar_j; dtheta_j; dYbar_j] (dimension 3*2*l = 18 for three blades):
///   K_{j+1} = a_bar * K_j + b_hat * dtheta_{j+1}.
struct ReducedModel {
    Eigen::MatrixXd a_bar; ///< (3*b*l) x (3*b*l)
    Eigen::MatrixXd b_hat; ///< (3*b*l) x (b*r)
    int state_dim = 0;
    int input_dim = 0;
};

/// Split the estimate's columns into the input/output Markov blocks.
MarkovBlocks extract_blocks(const Eigen::MatrixXd& xi, int p, int r, int l);

/// Assemble the lifted predictor for a rotation of P >= p samples.
LiftedPredictor assemble_lifted(const MarkovBlocks& blocks, int P);

/// Project the lifted predictor onto the 1P basis.
ReducedModel reduce(const LiftedPredictor& lifted, const BasisProjection& phi);

/// One-period-ahead prediction (mainly for validation): inputs are the
/// previous period's trajectories and deltas, all stacked sample-major.
Eigen::VectorXd predict_next_period(const LiftedPredictor& lp,
                                    const Eigen::VectorXd& y_period,
                                    const Eigen::VectorXd& du_period,
                                    const Eigen::VectorXd& dy_period,
                                    const Eigen::VectorXd& du_next_period);

} // namespace sprc
