#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sprc/baselines.hpp"
#include "sprc/metrics.hpp"
#include "sprc/plant.hpp"
#include "sprc/sysid.hpp"

namespace sprc {

enum class ControllerKind { Baseline, Mbc, Sprc };

const char* controller_name(ControllerKind c);
ControllerKind controller_from_name(const std::string& name);

/// Phase boundaries, in seconds; each is snapped up to a rotation boundary.
/// identification -> unconstrained controller -> constraints added.
struct Durations {
    double identification_s = 300.0;
    double constrained_from_s = 600.0;
    double end_s = 800.0;
};

struct Seeds {
    std::uint64_t wind = 11;
    std::uint64_t noise = 22;
    std::uint64_t excitation = 33;
};

struct SprcParams {
    int past_window = 12; ///< p
    double lambda = 0.99999;
    double gamma = 1e4;
    // Equal horizons: with n_u < n_p the held final increment keeps ramping
    // theta through the prediction tail, and a binding step-n_u constraint
    // then parks the first move at zero (the loop stalls short of the bound).
    int n_p = 2;
    int n_u = 2;
    double q_output_scale = 1e2;
    double excitation_amplitude_deg = 1.0;
    ExcitationMode excitation_mode = ExcitationMode::MultiSine;
    double excitation_decay_rotations = 20.0;
    /// EWMA relative identification residual below which the excitation
    /// ramp-down may begin early (it always begins at the identification
    /// phase end).
    double residual_ramp_threshold = 0.05;
    int xi_dump_every_rotations = 0; ///< 0 = off
};

struct MbcParams {
    double ki = -8e-4;
    double lp_cutoff_ratio = 0.05;
    double azimuth_offset = -0.93;
    double integrator_limit_deg = 6.0;
};

struct LoadCase {
    std::string id = "custom";
    double wind_mean = 16.0;
    double turbulence_intensity = 0.0;
    double u_max = 1e9;  ///< deg
    double du_max = 1e9; ///< deg/s
    ControllerKind controller = ControllerKind::Sprc;
    Durations durations;
    Seeds seeds;
    PlantConfig plant;
    CpcConfig cpc;
    SprcParams sprc;
    MbcParams mbc;

    void validate() const;
};

/// The eight shipped presets (lc1..lc8).
std::vector<LoadCase> presets();
LoadCase preset(const std::string& id);

/// Everything one simulation produced. Per-sample columns are aligned; the
/// wiring invariant pitch = collective + ipc + excitation holds exactly,
/// sample by sample, in these columns.
struct RotationLog {
    int j = 0;                ///< rotation index (0 = first full rotation)
    Eigen::VectorXd theta;    ///< coefficients applied over rotation j+1
    std::string qp_status;
    bool fallback = false;
    int iterations = 0;
    double kkt_residual = 0.0;
    int active_count = 0;
    double ident_residual = 0.0;    ///< EWMA relative identification residual
    double forecast_residual = 0.0; ///< max |collective - frozen| next rotation
    bool constrained = false;
};

struct RunRecord {
    LoadCase config;
    std::string config_hash;
    int samples = 0;
    std::int64_t k_activate = 0;    ///< controller activation (rotation boundary)
    std::int64_t k_constrained = 0; ///< constraint activation (rotation boundary)

    std::vector<double> t_s, wind, collective;
    std::array<std::vector<double>, 3> exc, ipc, pitch, moop;

    std::vector<RotationLog> rotations;
    std::vector<std::pair<int, Eigen::MatrixXd>> xi_snapshots; ///< (rotation, estimate)
    std::int64_t clamp_warnings = 0;
    bool aborted = false;
    std::string abort_reason;
    double runtime_s = 0.0;
};

RunRecord run_case(const LoadCase& load_case);

/// Post-run evaluation bundle used by metrics.json, compare and the checks.
struct RunSummary {
    std::string case_id;
    std::string controller;
    double u_max = 0.0;
    double du_max = 0.0;
    std::array<double, 3> adc_per_blade{};
    double adc_mean = 0.0;
    AuditReport audit;             ///< constrained window, total pitch, worst blade
    std::array<double, 3> moop_1p_meas{};        ///< pre-constraint window
    std::array<double, 3> moop_1p_constrained{};
    double pitch_psd_3p = 0.0;     ///< blade 1, constrained window
    double pitch_psd_1p = 0.0;
    double max_forecast_residual = 0.0;
    double max_nonfundamental_amp = 0.0; ///< 2P+ content of total pitch per period
    bool aborted = false;
    double dt = 0.0;
};

RunSummary summarize(const RunRecord& rec);

void write_series_csv(const RunRecord& rec, const std::string& path);
void write_metrics_json(const RunRecord& rec, const RunSummary& s, const std::string& path);
void write_xi_snapshots(const RunRecord& rec, const std::string& dir);
RunSummary load_summary_json(const std::string& path);

std::string to_json_string(const LoadCase& c);
std::vector<LoadCase> load_config_file(const std::string& path);

/// Run directory name: <case>_<controller>_seed<wind seed>.
std::string run_dir_name(const LoadCase& c);

/// Comparison across cases/controllers from stored summaries.
struct CompareRow {
    std::string case_id;
    std::optional<double> adc_sprc, adc_mbc, adc_baseline;
    std::optional<double> adc_ratio;       ///< sprc / mbc
    std::optional<double> moop_reduction;  ///< 1 - sprc/baseline 1P, measurement window
    std::optional<double> psd_3p_ratio;    ///< mbc / sprc at the 3P bin
};

std::vector<CompareRow> compare_summaries(const std::vector<RunSummary>& summaries,
                                          const std::vector<std::string>& case_ids);
void write_compare_csv(const std::vector<CompareRow>& rows, const std::string& path);

/// Acceptance-grade checks over a suite of summaries (the `suite --check`
/// gate). Returns human-readable failures; empty means pass.
std::vector<std::string> check_suite(const std::vector<RunSummary>& summaries);

std::string fnv1a_hex(const std::string& data);

} // namespace sprc
