#include "sprc/qp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace sprc::qp {

const char* status_name(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::MaxIterations: return "max-iterations";
        case Status::Infeasible: return "infeasible";
    }
    return "unknown";
}

namespace {

constexpr double kFeasSlack = 1e-10;   // violation treated as "still feasible"
constexpr double kStepZero = 1e-12;    // step-direction dead band
constexpr double kMultiplierTol = 1e-9;

struct CoreResult {
    Eigen::VectorXd u;
    std::vector<int> working;
    Eigen::VectorXd mu; // multipliers of the final working set
    Status status = Status::Optimal;
    int iterations = 0;
};

Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iter);

// Primal active-set loop from a feasible start. Working-set rows are held as
// equalities; blocking-constraint ties break toward the smallest row index.
CoreResult run_active_set(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::MatrixXd& H,
                          const Eigen::VectorXd& f, const Eigen::MatrixXd& G,
                          const Eigen::VectorXd& W, const Eigen::VectorXd& u0, int cap) {
    const int n = static_cast<int>(H.rows());
    const int m = static_cast<int>(G.rows());

    CoreResult res;
    res.u = u0;
    std::vector<char> in_working(static_cast<std::size_t>(m), 0);
    bool at_subproblem_min = false;

    for (res.iterations = 0; res.iterations < cap; ++res.iterations) {
        const Eigen::VectorXd g = 2.0 * (H * res.u + f);
        const Eigen::VectorXd hi_g = llt.solve(g);

        Eigen::VectorXd d;
        Eigen::VectorXd mu;
        const int a = static_cast<int>(res.working.size());
        if (a == 0) {
            d = -0.5 * hi_g;
        } else if (a >= n) {
            // Full vertex: the working set pins every degree of freedom.
            // The multipliers decide everything here, so solve stationarity
            // without rank truncation; near-parallel rows give huge balanced
            // entries whose signs still identify the row to drop.
            d = Eigen::VectorXd::Zero(n);
            Eigen::MatrixXd gwt(n, a);
            for (int i = 0; i < a; ++i)
                gwt.col(i) = G.row(res.working[static_cast<std::size_t>(i)]).transpose();
            const Eigen::FullPivLU<Eigen::MatrixXd> lu(gwt);
            mu = lu.solve(-g);
            if ((gwt * mu + g).lpNorm<Eigen::Infinity>() >
                1e-6 * (1.0 + g.lpNorm<Eigen::Infinity>())) {
                mu = nnls(gwt, g, 4 * a + 16);
                if ((gwt * mu + g).lpNorm<Eigen::Infinity>() >
                    1e-6 * (1.0 + g.lpNorm<Eigen::Infinity>())) {
                    // Gradient outside the span of a singular vertex: mark the
                    // rows the fit left unused so one of them gets dropped.
                    for (Eigen::Index i = 0; i < mu.size(); ++i)
                        if (mu(i) == 0.0) { mu(i) = -1.0; break; }
                }
            }
        } else {
            Eigen::MatrixXd gw(a, n);
            for (int i = 0; i < a; ++i) gw.row(i) = G.row(res.working[static_cast<std::size_t>(i)]);
            const Eigen::MatrixXd hi_gwt = llt.solve(gw.transpose());
            const Eigen::MatrixXd s = gw * hi_gwt;
            const Eigen::VectorXd rhs = -(gw * hi_g);
            mu = s.ldlt().solve(rhs);
            if (!((s * mu - rhs).lpNorm<Eigen::Infinity>() <=
                  1e-8 * (1.0 + rhs.lpNorm<Eigen::Infinity>()))) {
                // Near-dependent working set: fall back to a least-squares
                // multiplier estimate.
                mu = s.completeOrthogonalDecomposition().solve(rhs);
            }
            d = -0.5 * (hi_g + hi_gwt * mu);
        }

        const double u_scale = 1.0 + res.u.lpNorm<Eigen::Infinity>();
        const double d_norm = d.lpNorm<Eigen::Infinity>();
        // An unblocked full step lands exactly on the working-set minimizer,
        // so whatever direction the next solve reports there is round-off no
        // matter how ill conditioning inflates it.
        const bool stationary = d_norm <= kStepZero * u_scale || at_subproblem_min;

        if (stationary) {
            if (a == 0) {
                res.mu = Eigen::VectorXd();
                res.status = Status::Optimal;
                return res;
            }
            int drop = -1;
            double most_negative = -kMultiplierTol;
            for (int i = 0; i < a; ++i) {
                if (mu(i) < most_negative) {
                    most_negative = mu(i);
                    drop = i;
                }
            }
            if (drop < 0) {
                res.mu = mu;
                res.status = Status::Optimal;
                return res;
            }
            in_working[static_cast<std::size_t>(res.working[static_cast<std::size_t>(drop)])] = 0;
            res.working.erase(res.working.begin() + drop);
            at_subproblem_min = false;
            continue;
        }

        double alpha = 1.0;
        int blocker = -1;
        for (int i = 0; i < m; ++i) {
            if (in_working[static_cast<std::size_t>(i)]) continue;
            const double gd = G.row(i).dot(d);
            // Relative direction test: rows that are combinations of the
            // working set see gd at round-off level and must not block.
            if (gd <= 1e-10 * G.row(i).norm() * d_norm) continue;
            double ai = (W(i) - G.row(i).dot(res.u)) / gd;
            if (ai < 0.0) ai = 0.0;
            if (ai < alpha - 1e-14) {
                alpha = ai;
                blocker = i;
            }
        }

        res.u += alpha * d;
        at_subproblem_min = blocker < 0;
        if (blocker >= 0) {
            in_working[static_cast<std::size_t>(blocker)] = 1;
            res.working.insert(
                std::lower_bound(res.working.begin(), res.working.end(), blocker), blocker);
        }
    }

    res.status = Status::MaxIterations;
    return res;
}

bool feasible_at(const Eigen::MatrixXd& G, const Eigen::VectorXd& W, const Eigen::VectorXd& u,
                 double slack) {
    if (G.rows() == 0) return true;
    return ((G * u - W).array() <= slack).all();
}

// Lawson-Hanson nonnegative least squares: min ||A x + b||, x >= 0.
// Used only to certify the final multipliers; working sets at the tangency
// of a smooth bound contain near-parallel rows, and a rank-truncating solve
// there reports a residual the true cone does not have.
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int max_iter) {
    const Eigen::Index n = A.cols();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<char> passive(static_cast<std::size_t>(n), 0);
    Eigen::VectorXd resid = -b;

    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd grad = -A.transpose() * (A * x + b);
        int best = -1;
        double best_g = 1e-10 * (1.0 + b.lpNorm<Eigen::Infinity>());
        for (Eigen::Index i = 0; i < n; ++i)
            if (!passive[static_cast<std::size_t>(i)] && grad(i) > best_g) {
                best_g = grad(i);
                best = static_cast<int>(i);
            }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = 1;

        for (;;) {
            std::vector<Eigen::Index> idx;
            for (Eigen::Index i = 0; i < n; ++i)
                if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
            Eigen::MatrixXd ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
            for (std::size_t i = 0; i < idx.size(); ++i) ap.col(static_cast<Eigen::Index>(i)) = A.col(idx[i]);
            const Eigen::VectorXd z = ap.householderQr().solve(-b);
            bool all_pos = true;
            for (Eigen::Index i = 0; i < z.size(); ++i)
                if (z(i) <= 0.0) { all_pos = false; break; }
            if (all_pos) {
                x.setZero();
                for (std::size_t i = 0; i < idx.size(); ++i) x(idx[i]) = z(static_cast<Eigen::Index>(i));
                break;
            }
            // Backtrack toward the last feasible x and retire one variable.
            double alpha = 1.0;
            for (std::size_t i = 0; i < idx.size(); ++i) {
                const double zi = z(static_cast<Eigen::Index>(i));
                const double xi = x(idx[i]);
                if (zi <= 0.0 && xi - zi > 0.0) alpha = std::min(alpha, xi / (xi - zi));
            }
            for (std::size_t i = 0; i < idx.size(); ++i) {
                const double zi = z(static_cast<Eigen::Index>(i));
                x(idx[i]) += alpha * (zi - x(idx[i]));
                if (x(idx[i]) <= 1e-14) {
                    x(idx[i]) = 0.0;
                    passive[static_cast<std::size_t>(idx[i])] = 0;
                }
            }
        }
    }
    (void)resid;
    return x;
}

int default_cap(int n, int m) { return 50 * (n + std::min(m, 4 * n) + 1); }

} // namespace

Solution solve(const Eigen::MatrixXd& H, const Eigen::VectorXd& f, const Eigen::MatrixXd& G,
               const Eigen::VectorXd& W, int max_iter,
               const std::vector<Eigen::VectorXd>& candidate_starts) {
    const int n = static_cast<int>(H.rows());
    const int m = static_cast<int>(G.rows());
    if (H.cols() != n || f.size() != n) throw ConfigError("qp::solve: H/f dimensions inconsistent");
    if (m > 0 && (G.cols() != n || W.size() != m))
        throw ConfigError("qp::solve: G/W dimensions inconsistent");
    if ((H - H.transpose()).lpNorm<Eigen::Infinity>() >
        1e-8 * (1.0 + H.lpNorm<Eigen::Infinity>()))
        throw ConfigError("qp::solve: H must be symmetric");

    const Eigen::MatrixXd hs = 0.5 * (H + H.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(hs);
    if (llt.info() != Eigen::Success)
        throw ConfigError("qp::solve: H must be positive definite");

    const int cap = max_iter > 0 ? max_iter : default_cap(n, m);

    // Feasible start: origin, the unconstrained minimum, caller candidates,
    // then phase 1.
    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd w_eff = W;
    bool have_start = feasible_at(G, W, u0, kFeasSlack);
    if (!have_start) {
        const Eigen::VectorXd u_unc = -llt.solve(f);
        if (feasible_at(G, W, u_unc, kFeasSlack)) {
            u0 = u_unc;
            have_start = true;
        }
    }
    for (const Eigen::VectorXd& cand : candidate_starts) {
        if (have_start) break;
        if (cand.size() == n && feasible_at(G, W, cand, kFeasSlack)) {
            u0 = cand;
            have_start = true;
        }
    }
    if (!have_start) {
        // Phase 1 in (u, t): minimize eps*|u|^2 + t^2 subject to
        // G u - t <= W and t >= 0; (0, max violation) is always feasible.
        // For any feasible problem with an interior the optimum sits on the
        // t = 0 floor, which hands back an exactly feasible u. eps must stay
        // far below the violation scale or the trade-off tilts toward small
        // |u| with positive t and feasible problems get misreported.
        const double eps = 1e-8;
        Eigen::MatrixXd h1 = Eigen::MatrixXd::Zero(n + 1, n + 1);
        h1.topLeftCorner(n, n) = eps * Eigen::MatrixXd::Identity(n, n);
        h1(n, n) = 1.0;
        Eigen::MatrixXd g1(m + 1, n + 1);
        g1.topLeftCorner(m, n) = G;
        g1.topRightCorner(m, 1).setConstant(-1.0);
        g1.row(m).setZero();
        g1(m, n) = -1.0;
        Eigen::VectorXd w1(m + 1);
        w1.head(m) = W;
        w1(m) = 0.0;

        Eigen::VectorXd z0 = Eigen::VectorXd::Zero(n + 1);
        z0(n) = std::max(0.0, (G * Eigen::VectorXd::Zero(n) - W).maxCoeff()) + 1.0;

        Eigen::LLT<Eigen::MatrixXd> llt1(h1);
        CoreResult phase1 = run_active_set(llt1, h1, Eigen::VectorXd::Zero(n + 1), g1, w1, z0,
                                           default_cap(n + 1, m + 1));
        // Scale for the infeasibility verdict; ignores sentinel-sized bounds
        // (rows deliberately switched off carry W around 1e30).
        double w_scale = 1.0;
        for (int i = 0; i < m; ++i)
            if (std::abs(W(i)) < 1e20) w_scale = std::max(w_scale, std::abs(W(i)));
        if (phase1.status != Status::Optimal || phase1.u(n) > 1e-7 * w_scale) {
            Solution sol;
            sol.u = Eigen::VectorXd::Zero(n);
            // An exhausted phase 1 proves nothing about feasibility.
            sol.status = phase1.status == Status::MaxIterations ? Status::MaxIterations
                                                                : Status::Infeasible;
            sol.lambda = Eigen::VectorXd::Zero(m);
            sol.kkt_residual = std::numeric_limits<double>::quiet_NaN();
            sol.iterations = phase1.iterations;
            return sol;
        }
        u0 = phase1.u.head(n);
        // Absorb phase-1 residual dust so u0 is exactly feasible for the run.
        w_eff = W.cwiseMax(G * u0);
    }

    CoreResult core = run_active_set(llt, hs, f, G, w_eff, u0, cap);

    Solution sol;
    sol.u = core.u;
    sol.status = core.status;
    sol.iterations = core.iterations;
    sol.active_rows = core.working;

    // Feasibility polish: phase-1 hand-offs can leave violations at the
    // 1e-8 level (absorbed into w_eff); project them out with least-norm
    // corrections so the returned point honors W itself.
    if (m > 0 && core.status == Status::Optimal) {
        for (int pass = 0; pass < 3; ++pass) {
            std::vector<int> viol;
            const Eigen::VectorXd slack = G * sol.u - W;
            for (int i = 0; i < m; ++i)
                if (slack(i) > 1e-12 && slack(i) < 1e-5 * (1.0 + sol.u.lpNorm<Eigen::Infinity>()))
                    viol.push_back(i);
            if (viol.empty()) break;
            Eigen::MatrixXd gv(static_cast<int>(viol.size()), n);
            Eigen::VectorXd target(static_cast<int>(viol.size()));
            for (std::size_t i = 0; i < viol.size(); ++i) {
                gv.row(static_cast<Eigen::Index>(i)) = G.row(viol[i]);
                target(static_cast<Eigen::Index>(i)) = -slack(viol[i]);
            }
            Eigen::MatrixXd gram = gv * gv.transpose();
            gram.diagonal().array() += 1e-14 * (1.0 + gram.trace());
            sol.u += gv.transpose() * gram.ldlt().solve(target);
        }
    }
    sol.lambda = Eigen::VectorXd::Zero(m);
    if (!core.working.size()) {
        // nothing to certify
    } else if (core.status == Status::Optimal) {
        // Nonnegative multiplier fit over the active rows.
        const int a = static_cast<int>(core.working.size());
        Eigen::MatrixXd gwt(n, a);
        for (int i = 0; i < a; ++i)
            gwt.col(i) = G.row(core.working[static_cast<std::size_t>(i)]).transpose();
        const Eigen::VectorXd g = 2.0 * (hs * sol.u + f);
        const Eigen::VectorXd lam = nnls(gwt, g, 4 * a + 16);
        for (int i = 0; i < a; ++i) sol.lambda(core.working[static_cast<std::size_t>(i)]) = lam(i);
    } else if (core.mu.size() > 0) {
        for (std::size_t i = 0; i < core.working.size(); ++i)
            sol.lambda(core.working[i]) = std::max(0.0, core.mu(static_cast<Eigen::Index>(i)));
    }

    // Stationarity and complementarity are reported relative to the gradient
    // scale so the certificate is meaningful regardless of problem scaling;
    // primal feasibility stays absolute.
    const Eigen::VectorXd grad = 2.0 * (hs * sol.u + f);
    const double gscale = 1.0 + grad.lpNorm<Eigen::Infinity>();
    const Eigen::VectorXd stat =
        grad + (m > 0 ? Eigen::VectorXd(G.transpose() * sol.lambda)
                      : Eigen::VectorXd(Eigen::VectorXd::Zero(n)));
    double primal = 0.0;
    double comp = 0.0;
    if (m > 0) {
        const Eigen::VectorXd slack = G * sol.u - W;
        primal = std::max(0.0, slack.maxCoeff());
        for (int i = 0; i < m; ++i)
            if (std::abs(W(i)) < 1e20)
                comp = std::max(comp, std::abs(sol.lambda(i) * slack(i)));
    }
    sol.kkt_residual =
        std::max({stat.lpNorm<Eigen::Infinity>() / gscale, primal, comp / gscale});
    sol.objective = sol.u.dot(hs * sol.u) + 2.0 * f.dot(sol.u);
    return sol;
}

void save_problem(const std::string& path, const Eigen::MatrixXd& H, const Eigen::VectorXd& f,
                  const Eigen::MatrixXd& G, const Eigen::VectorXd& W) {
    std::ofstream out(path);
    if (!out) throw ConfigError("qp::save_problem: cannot open " + path);
    const int n = static_cast<int>(H.rows());
    const int m = static_cast<int>(G.rows());
    char buf[32];
    auto put = [&](double v, bool last) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf << (last ? "\n" : " ");
    };
    out << n << " " << m << "\n";
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) put(H(i, j), j + 1 == n);
    for (int j = 0; j < n; ++j) put(f(j), j + 1 == n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) put(G(i, j), j + 1 == n);
    for (int i = 0; i < m; ++i) put(W(i), i + 1 == m);
}

Problem load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("qp::load_problem: cannot open " + path);
    int n = 0, m = 0;
    if (!(in >> n >> m) || n <= 0 || m < 0)
        throw ConfigError("qp::load_problem: bad dimension header");
    Problem p;
    p.H.resize(n, n);
    p.f.resize(n);
    p.G.resize(m, n);
    p.W.resize(m);
    auto read_into = [&](double& slot) {
        if (!(in >> slot)) throw ConfigError("qp::load_problem: truncated file");
    };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) read_into(p.H(i, j));
    for (int j = 0; j < n; ++j) read_into(p.f(j));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) read_into(p.G(i, j));
    for (int i = 0; i < m; ++i) read_into(p.W(i));
    return p;
}

} // namespace sprc::qp
