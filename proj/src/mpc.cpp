#include "sprc/mpc.hpp"

#include <vector>

namespace sprc {

HorizonConfig HorizonConfig::defaults(int state_dim, int input_dim, double output_block_scale) {
    HorizonConfig cfg;
    cfg.q_weight = Eigen::MatrixXd::Identity(state_dim, state_dim);
    cfg.q_weight.topLeftCorner(state_dim / 3, state_dim / 3) *= output_block_scale;
    cfg.r_weight = Eigen::MatrixXd::Identity(input_dim, input_dim);
    return cfg;
}

void HorizonConfig::validate() const {
    if (n_u < 1 || n_u > n_p) throw ConfigError("HorizonConfig: need 1 <= n_u <= n_p");
    if (q_weight.rows() != q_weight.cols() || r_weight.rows() != r_weight.cols())
        throw ConfigError("HorizonConfig: weights must be square");
    if ((q_weight - q_weight.transpose()).lpNorm<Eigen::Infinity>() > 1e-10 ||
        (r_weight - r_weight.transpose()).lpNorm<Eigen::Infinity>() > 1e-10)
        throw ConfigError("HorizonConfig: weights must be symmetric");
    if (Eigen::LLT<Eigen::MatrixXd>(q_weight).info() != Eigen::Success ||
        Eigen::LLT<Eigen::MatrixXd>(r_weight).info() != Eigen::Success)
        throw ConfigError("HorizonConfig: weights must be positive definite");
}

void ConstraintSpec::validate(int expected_len) const {
    if (!(u_max > 0.0)) throw ConfigError("ConstraintSpec: u_max must be positive");
    if (!(du_max > 0.0)) throw ConfigError("ConstraintSpec: du_max must be positive");
    if (!(dt > 0.0)) throw ConfigError("ConstraintSpec: dt must be positive");
    if (u_bar.size() != expected_len)
        throw ConfigError("ConstraintSpec: u_bar must cover one period");
    if (!u_bar.allFinite()) throw ConfigError("ConstraintSpec: u_bar must be finite");
}

PredictionMatrices build_prediction(const ReducedModel& model, const HorizonConfig& cfg) {
    cfg.validate();
    const int ns = model.state_dim;
    const int ni = model.input_dim;
    if (model.a_bar.rows() != ns || model.b_hat.rows() != ns || model.b_hat.cols() != ni)
        throw ConfigError("build_prediction: model dimensions inconsistent");

    std::vector<Eigen::MatrixXd> pow(static_cast<std::size_t>(cfg.n_p) + 1);
    pow[0] = Eigen::MatrixXd::Identity(ns, ns);
    for (int i = 1; i <= cfg.n_p; ++i) pow[static_cast<std::size_t>(i)] = model.a_bar * pow[static_cast<std::size_t>(i - 1)];

    PredictionMatrices pm;
    pm.a_stack.resize(static_cast<Eigen::Index>(cfg.n_p + 1) * ns, ns);
    pm.b_stack = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cfg.n_p + 1) * ns,
                                       static_cast<Eigen::Index>(cfg.n_u) * ni);
    for (int i = 0; i <= cfg.n_p; ++i) {
        pm.a_stack.middleRows(static_cast<Eigen::Index>(i) * ns, ns) = pow[static_cast<std::size_t>(i)];
        for (int m = 0; m < cfg.n_u; ++m) {
            const int s = m + 1; // input dtheta_{j+s}
            if (i < s) continue;
            Eigen::MatrixXd blk;
            if (s < cfg.n_u) {
                blk = pow[static_cast<std::size_t>(i - s)] * model.b_hat;
            } else {
                // Final move held through the tail of the prediction horizon.
                blk = Eigen::MatrixXd::Zero(ns, ni);
                for (int q = 0; q <= i - s; ++q) blk += pow[static_cast<std::size_t>(q)] * model.b_hat;
            }
            pm.b_stack.block(static_cast<Eigen::Index>(i) * ns, static_cast<Eigen::Index>(m) * ni, ns, ni) = blk;
        }
    }
    return pm;
}

void build_constraints(const ConstraintSpec& spec, const BasisProjection& phi,
                       const Eigen::VectorXd& theta_j, const HorizonConfig& cfg,
                       Eigen::MatrixXd& g_out, Eigen::VectorXd& w_out) {
    const int P = phi.P;
    const int w = phi.width;
    const int nc = phi.coeff_dim();
    const int rows_per_family = P * w;
    spec.validate(rows_per_family);
    if (theta_j.size() != nc) throw ConfigError("build_constraints: theta dimension mismatch");
    if (spec.u_max < (-spec.u_bar).minCoeff())
        throw InfeasibleError("build_constraints: empty angle box");

    // Rate rows per step and side: P-1 within-period slews, the cyclic wrap
    // of the step's own trajectory, and the entry transition from the
    // previous period. Keeping the wrap enforced alongside the transition is
    // what stops slow drift past the rate bound when it binds.
    const int rate_rows = (P + 1) * w;
    const int per_step = 2 * rows_per_family + 2 * rate_rows;
    g_out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(per_step) * cfg.n_u,
                                  static_cast<Eigen::Index>(cfg.n_u) * nc);
    w_out.resize(static_cast<Eigen::Index>(per_step) * cfg.n_u);

    const double rate_allow = spec.du_max * spec.dt;
    constexpr double kRelaxed = 1e30;

    // Per channel: does the held trajectory (dtheta = 0) satisfy its own
    // angle/slew/wrap rows? When it does not, that channel's previous period
    // predates the current constraint set, and pinning the new period's
    // start to it would strangle the problem (a blade parked at its peak is
    // the classic case: tiny boundary slew, value far outside the box).
    std::vector<bool> hold_ok(static_cast<std::size_t>(w), true);

    for (int i = 1; i <= cfg.n_u; ++i) {
        const Eigen::Index base = static_cast<Eigen::Index>(i - 1) * per_step;
        const Eigen::Index rate_hi0 = base + 2 * rows_per_family;
        const Eigen::Index rate_lo0 = rate_hi0 + rate_rows;

        for (int row = 0; row < rows_per_family; ++row) {
            const auto v = phi.phi.row(row);
            // Angle box: cumulative, dtheta blocks 1..i all receive the row.
            for (int m = 0; m < i; ++m) {
                const Eigen::Index c = static_cast<Eigen::Index>(m) * nc;
                g_out.block(base + row, c, 1, nc) = v;
                g_out.block(base + rows_per_family + row, c, 1, nc) = -v;
            }
            const double vth = v.dot(theta_j);
            w_out(base + row) = spec.u_max - spec.u_bar(row) - vth;
            w_out(base + rows_per_family + row) = spec.u_bar(row) + vth;
            if (i == 1 && (w_out(base + row) < -1e-9 ||
                           w_out(base + rows_per_family + row) < -1e-9))
                hold_ok[static_cast<std::size_t>(row % w)] = false;
        }

        // Within-period slew rows (samples 0..P-2).
        for (int row = 0; row < (P - 1) * w; ++row) {
            const Eigen::RowVectorXd d = phi.phi.row(row + w) - phi.phi.row(row);
            const double sbar = spec.u_bar(row + w) - spec.u_bar(row);
            for (int m = 0; m < i; ++m) {
                const Eigen::Index c = static_cast<Eigen::Index>(m) * nc;
                g_out.block(rate_hi0 + row, c, 1, nc) = d;
                g_out.block(rate_lo0 + row, c, 1, nc) = -d;
            }
            const double dth = d.dot(theta_j);
            w_out(rate_hi0 + row) = rate_allow - sbar - dth;
            w_out(rate_lo0 + row) = rate_allow + sbar + dth;
            if (i == 1 && (w_out(rate_hi0 + row) < -1e-9 || w_out(rate_lo0 + row) < -1e-9))
                hold_ok[static_cast<std::size_t>(row % w)] = false;
        }

        // Cyclic wrap of the step's trajectory.
        for (int a = 0; a < w; ++a) {
            const auto v0 = phi.phi.row(a);
            const auto vend = phi.phi.row((P - 1) * w + a);
            const Eigen::RowVectorXd dwrap = v0 - vend;
            const double sbar = spec.u_bar(a) - spec.u_bar((P - 1) * w + a);
            const double c0 = dwrap.dot(theta_j) + sbar;

            const Eigen::Index rw_hi = rate_hi0 + (P - 1) * w + a;
            const Eigen::Index rw_lo = rate_lo0 + (P - 1) * w + a;
            for (int m = 0; m < i; ++m) {
                const Eigen::Index c = static_cast<Eigen::Index>(m) * nc;
                g_out.block(rw_hi, c, 1, nc) = dwrap;
                g_out.block(rw_lo, c, 1, nc) = -dwrap;
            }
            w_out(rw_hi) = rate_allow - c0;
            w_out(rw_lo) = rate_allow + c0;
            if (i == 1 && std::abs(c0) > rate_allow + 1e-9)
                hold_ok[static_cast<std::size_t>(a)] = false;
        }
    }

    // Entry transitions: end of the previous period to start of period i.
    for (int i = 1; i <= cfg.n_u; ++i) {
        const Eigen::Index base = static_cast<Eigen::Index>(i - 1) * per_step;
        const Eigen::Index rate_hi0 = base + 2 * rows_per_family;
        const Eigen::Index rate_lo0 = rate_hi0 + rate_rows;
        for (int a = 0; a < w; ++a) {
            const auto v0 = phi.phi.row(a);
            const auto vend = phi.phi.row((P - 1) * w + a);
            const Eigen::RowVectorXd dwrap = v0 - vend;
            const double sbar = spec.u_bar(a) - spec.u_bar((P - 1) * w + a);
            const double c0 = dwrap.dot(theta_j) + sbar;

            const Eigen::Index re_hi = rate_hi0 + P * w + a;
            const Eigen::Index re_lo = rate_lo0 + P * w + a;
            for (int m = 0; m + 1 < i; ++m) {
                const Eigen::Index c = static_cast<Eigen::Index>(m) * nc;
                g_out.block(re_hi, c, 1, nc) = dwrap;
                g_out.block(re_lo, c, 1, nc) = -dwrap;
            }
            g_out.block(re_hi, static_cast<Eigen::Index>(i - 1) * nc, 1, nc) = v0;
            g_out.block(re_lo, static_cast<Eigen::Index>(i - 1) * nc, 1, nc) = -v0;
            if (i == 1 && !hold_ok[static_cast<std::size_t>(a)]) {
                // Regime change on this channel: admit the boundary jump for
                // one rotation; the wrap rows re-arm the bound for every
                // trajectory planned from here on.
                w_out(re_hi) = kRelaxed;
                w_out(re_lo) = kRelaxed;
            } else {
                w_out(re_hi) = rate_allow - c0;
                w_out(re_lo) = rate_allow + c0;
            }
        }
    }
}

StepResult receding_step(const ReducedModel& model, const Eigen::VectorXd& state,
                         const HorizonConfig& cfg, const BasisProjection& phi,
                         const Eigen::VectorXd& theta_j,
                         const std::optional<ConstraintSpec>& spec) {
    const int ns = model.state_dim;
    const int ni = model.input_dim;
    if (state.size() != ns) throw ConfigError("receding_step: state dimension mismatch");

    const PredictionMatrices pm = build_prediction(model, cfg);

    // Block-diagonal weights expanded over the horizon.
    Eigen::MatrixXd qq = Eigen::MatrixXd::Zero(pm.a_stack.rows(), pm.a_stack.rows());
    for (int i = 0; i <= cfg.n_p; ++i)
        qq.block(static_cast<Eigen::Index>(i) * ns, static_cast<Eigen::Index>(i) * ns, ns, ns) =
            cfg.q_weight;
    Eigen::MatrixXd rr = Eigen::MatrixXd::Zero(pm.b_stack.cols(), pm.b_stack.cols());
    for (int m = 0; m < cfg.n_u; ++m)
        rr.block(static_cast<Eigen::Index>(m) * ni, static_cast<Eigen::Index>(m) * ni, ni, ni) =
            cfg.r_weight;

    QpProblem qp;
    qp.hessian = pm.b_stack.transpose() * qq * pm.b_stack + rr;
    const Eigen::MatrixXd f_mat = pm.a_stack.transpose() * qq * pm.b_stack; // F
    qp.linear = f_mat.transpose() * state;

    StepResult res;
    if (spec) {
        try {
            build_constraints(*spec, phi, theta_j, cfg, qp.g_ineq, qp.w_ineq);
        } catch (const InfeasibleError&) {
            res.delta_theta = Eigen::VectorXd::Zero(ni);
            res.status = qp::Status::Infeasible;
            res.fallback = true;
            return res;
        }
    } else {
        qp.g_ineq.resize(0, qp.hessian.cols());
        qp.w_ineq.resize(0);
    }

    // Retracting the whole 1P component (dtheta_1 = -theta, later steps zero)
    // is feasible whenever the collective trajectory itself fits the limits,
    // so the solver never needs a phase-1 pass here.
    std::vector<Eigen::VectorXd> starts;
    if (spec) {
        Eigen::VectorXd retract = Eigen::VectorXd::Zero(qp.hessian.cols());
        retract.head(ni) = -theta_j;
        starts.push_back(std::move(retract));
    }
    const qp::Solution sol = qp::solve(qp.hessian, qp.linear, qp.g_ineq, qp.w_ineq, 0, starts);
    res.status = sol.status;
    res.iterations = sol.iterations;
    res.kkt_residual = sol.kkt_residual;
    res.active_count = static_cast<int>(sol.active_rows.size());
    res.objective = sol.objective;
    if (sol.status == qp::Status::Optimal) {
        res.delta_theta = sol.u.head(ni);
    } else {
        res.delta_theta = Eigen::VectorXd::Zero(ni);
        res.fallback = true;
    }
    return res;
}

} // namespace sprc
