#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sprc/errors.hpp"
#include "sprc/rng.hpp"
#include "sprc/signals.hpp"

namespace sprc {

/// Exponentially-weighted recursive least squares for the Markov matrix,
/// propagated in square-root (QR) form.
///
/// The state is the upper-triangular Cholesky factor R of the weighted
/// information matrix together with the rotated right-hand side Z, so the
/// current estimate always solves R * Xi^T = Z by back substitution and
/// coincides with the weighted batch solution on the same data. Keeping the
/// factor instead of the covariance keeps the recursion positive-definite
/// over arbitrarily long runs.
class RlsEstimator {
public:
    enum class UpdateStatus { Updated, SkippedZeroRegressor, SkippedConditioning };

    /// \param output_dim     rows of the Markov matrix (l)
    /// \param regressor_dim  columns of the Markov matrix, p*(r+l)
    /// \param lambda         forgetting factor in (0, 1]
    /// \param gamma          diffuse prior: initial factor is (1/gamma)*I
    RlsEstimator(int output_dim, int regressor_dim, double lambda, double gamma = 1e4);

    UpdateStatus update(const Eigen::VectorXd& regressor, const Eigen::VectorXd& target);

    /// Current estimate, l x p(r+l). Held at its last well-conditioned value
    /// if the factor has decayed below the conditioning guard.
    const Eigen::MatrixXd& xi() const;

    const Eigen::MatrixXd& factor() const { return r_; }
    double lambda() const { return lambda_; }
    std::int64_t sample_count() const { return samples_; }
    std::int64_t skipped_count() const { return skipped_; }
    double min_factor_diagonal() const;
    bool well_conditioned() const;

    int output_dim() const { return l_; }
    int regressor_dim() const { return n_; }

    /// Row-major CSV snapshot of the current estimate ("rows,cols" header).
    void dump_xi_csv(const std::string& path) const;

    static constexpr double kConditioningFloor = 1e-12;

private:
    int l_;
    int n_;
    double lambda_;
    Eigen::MatrixXd r_; // n x n upper triangular, positive diagonal
    Eigen::MatrixXd z_; // n x l rotated targets
    mutable Eigen::MatrixXd xi_;
    mutable bool xi_dirty_ = true;
    std::int64_t samples_ = 0;
    std::int64_t skipped_ = 0;
};

/// Concatenate [dU; dY] in the regressor ordering used by the estimator.
Eigen::VectorXd build_regressor(const StackedWindow& w);

enum class ExcitationMode { MultiSine, FilteredNoise };

/// Probing signal superimposed on the pitch command during identification.
struct ExcitationConfig {
    double amplitude_deg = 1.0;
    ExcitationMode mode = ExcitationMode::MultiSine;
    std::uint64_t seed = 1;
    int channels = 3;
    int samples_per_period = 128;
    /// Linear ramp-down length, in rotations, applied from `ramp_start`.
    double decay_rotations = 20.0;
    /// Sample index at which the ramp-down begins (unset: never ramps).
    std::optional<std::int64_t> ramp_start;
};

/// Deterministic excitation stream. Bounded by amplitude_deg. The multi-sine
/// places lines at 0.5P, 1P and 2P with per-channel phases drawn from the
/// seed; filtered noise is first-order colored noise clipped to the bound.
class ExcitationGenerator {
public:
    explicit ExcitationGenerator(const ExcitationConfig& cfg);

    /// Sample at index k. Arbitrary k is supported; sequential access is O(1),
    /// a backward jump replays the noise stream from zero.
    Eigen::VectorXd at(std::int64_t k);

    const ExcitationConfig& config() const { return cfg_; }
    void set_ramp_start(std::int64_t k) { cfg_.ramp_start = k; }

private:
    ExcitationConfig cfg_;
    std::vector<double> phases_;     // multi-sine per-channel/harmonic phases
    std::vector<double> noise_state_;
    std::int64_t noise_pos_ = 0;     // next index the noise filter will produce
    Rng noise_rng_;

    void reset_noise();
    void advance_noise_to(std::int64_t k);
    double ramp_factor(std::int64_t k) const;
};

/// One-shot convenience wrapper around ExcitationGenerator.
Eigen::VectorXd excitation(std::int64_t k, const ExcitationConfig& cfg);

} // namespace sprc
