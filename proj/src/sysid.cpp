#include "sprc/sysid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "sprc/rng.hpp"

namespace sprc {

RlsEstimator::RlsEstimator(int output_dim, int regressor_dim, double lambda, double gamma)
    : l_(output_dim), n_(regressor_dim), lambda_(lambda) {
    if (l_ <= 0 || n_ <= 0) throw ConfigError("RlsEstimator: dimensions must be positive");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("RlsEstimator: lambda must be in (0,1]");
    if (!(gamma > 0.0)) throw ConfigError("RlsEstimator: gamma must be positive");
    r_ = (1.0 / gamma) * Eigen::MatrixXd::Identity(n_, n_);
    z_ = Eigen::MatrixXd::Zero(n_, l_);
    xi_ = Eigen::MatrixXd::Zero(l_, n_);
    xi_dirty_ = false; // zero prior solves exactly
}

double RlsEstimator::min_factor_diagonal() const {
    return r_.diagonal().minCoeff();
}

bool RlsEstimator::well_conditioned() const {
    return min_factor_diagonal() > kConditioningFloor;
}

RlsEstimator::UpdateStatus RlsEstimator::update(const Eigen::VectorXd& regressor,
                                                const Eigen::VectorXd& target) {
    if (regressor.size() != n_) throw ConfigError("RlsEstimator: regressor dimension mismatch");
    if (target.size() != l_) throw ConfigError("RlsEstimator: target dimension mismatch");

    if (regressor.lpNorm<Eigen::Infinity>() == 0.0) {
        ++samples_;
        return UpdateStatus::SkippedZeroRegressor;
    }
    if (!well_conditioned()) {
        ++samples_;
        ++skipped_;
        return UpdateStatus::SkippedConditioning;
    }

    const double sqrt_lambda = std::sqrt(lambda_);
    r_ *= sqrt_lambda;
    z_ *= sqrt_lambda;

    // Annihilate the new data row against R with Givens rotations, carrying
    // the target row through Z. Signs are chosen to keep diag(R) positive.
    Eigen::VectorXd v = regressor;
    Eigen::VectorXd t = target;
    for (int i = 0; i < n_; ++i) {
        const double vi = v(i);
        if (vi == 0.0) continue;
        const double rii = r_(i, i);
        const double rad = std::hypot(rii, vi);
        const double c = rii / rad;
        const double s = vi / rad;
        r_(i, i) = rad;
        for (int j = i + 1; j < n_; ++j) {
            const double rj = r_(i, j);
            const double vj = v(j);
            r_(i, j) = c * rj + s * vj;
            v(j) = -s * rj + c * vj;
        }
        for (int m = 0; m < l_; ++m) {
            const double zj = z_(i, m);
            const double tj = t(m);
            z_(i, m) = c * zj + s * tj;
            t(m) = -s * zj + c * tj;
        }
    }

    ++samples_;
    xi_dirty_ = true;
    return UpdateStatus::Updated;
}

const Eigen::MatrixXd& RlsEstimator::xi() const {
    if (xi_dirty_ && well_conditioned()) {
        // Back substitution: R * Xi^T = Z.
        Eigen::MatrixXd xt = r_.triangularView<Eigen::Upper>().solve(z_);
        xi_ = xt.transpose();
        xi_dirty_ = false;
    }
    return xi_;
}

void RlsEstimator::dump_xi_csv(const std::string& path) const {
    const Eigen::MatrixXd& m = xi();
    std::ofstream out(path);
    if (!out) throw ConfigError("RlsEstimator: cannot open dump path " + path);
    out << m.rows() << "," << m.cols() << "\n";
    char buf[32];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            out << buf << (j + 1 < m.cols() ? "," : "");
        }
        out << "\n";
    }
}

Eigen::VectorXd build_regressor(const StackedWindow& w) {
    Eigen::VectorXd r(w.du.size() + w.dy.size());
    r << w.du, w.dy;
    return r;
}

namespace {
constexpr double kHarmonics[3] = {0.5, 1.0, 2.0};
}

ExcitationGenerator::ExcitationGenerator(const ExcitationConfig& cfg)
    : cfg_(cfg), noise_rng_(cfg.seed + 0x9e3779b97f4a7c15ULL) {
    if (cfg.amplitude_deg < 0.0) throw ConfigError("excitation: amplitude must be >= 0");
    if (cfg.channels < 1) throw ConfigError("excitation: channels must be >= 1");
    if (cfg.samples_per_period < 3) throw ConfigError("excitation: samples_per_period must be >= 3");
    Rng rng(cfg.seed);
    for (int i = 0; i < cfg.channels; ++i)
        for (std::size_t h = 0; h < 3; ++h)
            phases_.push_back(rng.uniform(0.0, 2.0 * M_PI));
    reset_noise();
}

double ExcitationGenerator::ramp_factor(std::int64_t k) const {
    if (!cfg_.ramp_start) return 1.0;
    if (k < *cfg_.ramp_start) return 1.0;
    const double len = cfg_.decay_rotations * cfg_.samples_per_period;
    if (len <= 0.0) return 0.0;
    const double x = 1.0 - static_cast<double>(k - *cfg_.ramp_start) / len;
    return x > 0.0 ? x : 0.0;
}

void ExcitationGenerator::reset_noise() {
    noise_state_.assign(static_cast<std::size_t>(cfg_.channels), 0.0);
    noise_pos_ = 0;
    noise_rng_ = Rng(cfg_.seed + 0x9e3779b97f4a7c15ULL);
}

void ExcitationGenerator::advance_noise_to(std::int64_t k) {
    if (k < noise_pos_) reset_noise();
    const double a = std::exp(-2.0 * M_PI * 1.5 / cfg_.samples_per_period);
    const double drive = std::sqrt(1.0 - a * a);
    while (noise_pos_ <= k) {
        for (int c = 0; c < cfg_.channels; ++c)
            noise_state_[static_cast<std::size_t>(c)] =
                a * noise_state_[static_cast<std::size_t>(c)] + drive * noise_rng_.gaussian();
        ++noise_pos_;
    }
}

Eigen::VectorXd ExcitationGenerator::at(std::int64_t k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(cfg_.channels);
    const double amp = cfg_.amplitude_deg * ramp_factor(k);

    if (cfg_.mode == ExcitationMode::MultiSine) {
        if (amp == 0.0) return e;
        // The 0.5P line survives the periodic difference, so the
        // delta-regressors stay excited as well.
        const double base = 2.0 * M_PI / cfg_.samples_per_period;
        for (int i = 0; i < cfg_.channels; ++i) {
            double s = 0.0;
            for (std::size_t h = 0; h < 3; ++h)
                s += std::sin(kHarmonics[h] * base * static_cast<double>(k) +
                              phases_[static_cast<std::size_t>(i) * 3 + h]);
            e(i) = amp / 3.0 * s;
        }
        return e;
    }

    // Filtered noise, scaled to ~amplitude at 3 sigma, clipped to the bound.
    // The state must advance even while the ramp is zero so that replays of
    // the same index range are reproducible.
    advance_noise_to(k);
    if (amp == 0.0) return e;
    for (int c = 0; c < cfg_.channels; ++c) {
        const double v = amp / 3.0 * noise_state_[static_cast<std::size_t>(c)];
        e(c) = std::clamp(v, -amp, amp);
    }
    return e;
}

Eigen::VectorXd excitation(std::int64_t k, const ExcitationConfig& cfg) {
    ExcitationGenerator gen(cfg);
    return gen.at(k);
}

} // namespace sprc
