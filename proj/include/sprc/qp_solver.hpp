#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "sprc/errors.hpp"

namespace sprc::qp {

enum class Status { Optimal, MaxIterations, Infeasible };

const char* status_name(Status s);

struct Solution {
    Eigen::VectorXd u;
    Status status = Status::Optimal;
    std::vector<int> active_rows; ///< final working set, ascending
    Eigen::VectorXd lambda;       ///< multipliers, zero off the active set
    double kkt_residual = 0.0;    ///< max of stationarity / primal / complementarity
    double objective = 0.0;       ///< u'Hu + 2f'u
    int iterations = 0;
};

/// Minimize u'Hu + 2f'u subject to G u <= W.
///
/// H must be symmetric positive definite. Primal active-set iteration; the
/// feasible start is the first of: u = 0, the unconstrained minimum, any
/// caller-supplied candidates, then a self-bootstrapping phase-1 problem in
/// (u, t) with constraints G u - t <= W, t >= 0. max_iter = 0 picks a cap
/// of 50 * (variables + possible active rows).
Solution solve(const Eigen::MatrixXd& H, const Eigen::VectorXd& f,
               const Eigen::MatrixXd& G, const Eigen::VectorXd& W,
               int max_iter = 0,
               const std::vector<Eigen::VectorXd>& candidate_starts = {});

/// Plain-text problem dump: "n m" header, then row-major H, f, G, W.
void save_problem(const std::string& path, const Eigen::MatrixXd& H,
                  const Eigen::VectorXd& f, const Eigen::MatrixXd& G,
                  const Eigen::VectorXd& W);

struct Problem {
    Eigen::MatrixXd H;
    Eigen::VectorXd f;
    Eigen::MatrixXd G;
    Eigen::VectorXd W;
};

Problem load_problem(const std::string& path);

} // namespace sprc::qp
