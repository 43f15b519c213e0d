#pragma once

#include <Eigen/Dense>

#include <optional>

#include "sprc/basis.hpp"
#include "sprc/errors.hpp"
#include "sprc/lifting.hpp"
#include "sprc/qp_solver.hpp"

namespace sprc {

struct HorizonConfig {
    int n_p = 2; ///< prediction horizon, rotations
    int n_u = 2; ///< control horizon, rotations
    Eigen::MatrixXd q_weight; ///< state weight, SPD, (3*b*l)^2
    Eigen::MatrixXd r_weight; ///< input weight, SPD, (b*r)^2

    /// Default weights: identity with the projected-output block scaled.
    static HorizonConfig defaults(int state_dim = 18, int input_dim = 6,
                                  double output_block_scale = 1e2);

    void validate() const;
};

/// Actuator limits plus the frozen collective-pitch trajectory they are
/// evaluated against (latest completed period, held over the horizon).
struct ConstraintSpec {
    double u_max = 1e9;   ///< deg, total-pitch upper limit
    double du_max = 1e9;  ///< deg/s
    double dt = 0.05;     ///< s
    Eigen::VectorXd u_bar; ///< P*r, collective trajectory over one period

    void validate(int expected_len) const;
};

/// Stacked prediction over the horizon: X = a_stack * K_j + b_stack * U with
/// U = [dtheta_{j+1}; ...; dtheta_{j+Nu}] and the last move held through the
/// prediction tail.
struct PredictionMatrices {
    Eigen::MatrixXd a_stack; ///< ((Np+1)*ns) x ns
    Eigen::MatrixXd b_stack; ///< ((Np+1)*ns) x (Nu*ni)
};

PredictionMatrices build_prediction(const ReducedModel& model, const HorizonConfig& cfg);

/// One receding-horizon QP: minimize U'HU + 2 linear'U s.t. g_ineq U <= w_ineq.
struct QpProblem {
    Eigen::MatrixXd hessian;
    Eigen::VectorXd linear; ///< F' * K_j (the solver applies the factor 2)
    Eigen::MatrixXd g_ineq;
    Eigen::VectorXd w_ineq;
};

/// Stack the pitch angle box and the per-sample slew limit over the control
/// horizon, expressed in the coefficient increments. Four row families per
/// step (angle/rate, upper/lower), each with P*r rows.
///
/// The rate family bounds the per-sample slew of the commanded trajectory
/// (frozen collective + projected pitch), so the 1P amplitude itself shrinks
/// when the rate limit binds instead of merely slowing the period-to-period
/// coefficient update.
void build_constraints(const ConstraintSpec& spec, const BasisProjection& phi,
                       const Eigen::VectorXd& theta_j, const HorizonConfig& cfg,
                       Eigen::MatrixXd& g_out, Eigen::VectorXd& w_out);

struct StepResult {
    Eigen::VectorXd delta_theta; ///< first block of the minimizer (or zero on fallback)
    qp::Status status = qp::Status::Optimal;
    bool fallback = false; ///< true when delta_theta was forced to zero
    int iterations = 0;
    double kkt_residual = 0.0;
    int active_count = 0;
    double objective = 0.0;
};

/// Solve one rotation's QP. `spec` absent means the unconstrained phase.
/// Infeasibility or solver non-convergence falls back to holding theta.
StepResult receding_step(const ReducedModel& model, const Eigen::VectorXd& state,
                         const HorizonConfig& cfg, const BasisProjection& phi,
                         const Eigen::VectorXd& theta_j,
                         const std::optional<ConstraintSpec>& spec);

} // namespace sprc
