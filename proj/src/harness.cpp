#include "sprc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "sprc/basis.hpp"
#include "sprc/lifting.hpp"
#include "sprc/mpc.hpp"
#include "sprc/signals.hpp"

namespace sprc {

using nlohmann::json;

const char* controller_name(ControllerKind c) {
    switch (c) {
        case ControllerKind::Baseline: return "baseline";
        case ControllerKind::Mbc: return "mbc";
        case ControllerKind::Sprc: return "sprc";
    }
    return "unknown";
}

ControllerKind controller_from_name(const std::string& name) {
    if (name == "baseline") return ControllerKind::Baseline;
    if (name == "mbc") return ControllerKind::Mbc;
    if (name == "sprc") return ControllerKind::Sprc;
    throw ConfigError("unknown controller '" + name + "'");
}

void LoadCase::validate() const {
    if (id.empty()) throw ConfigError("LoadCase: id must not be empty");
    if (!(wind_mean > 0.0)) throw ConfigError("LoadCase: wind_mean must be positive");
    if (turbulence_intensity < 0.0) throw ConfigError("LoadCase: TI must be >= 0");
    if (!(u_max > 0.0) || !(du_max > 0.0)) throw ConfigError("LoadCase: limits must be positive");
    if (!(durations.identification_s >= 0.0 &&
          durations.constrained_from_s >= durations.identification_s &&
          durations.end_s >= durations.constrained_from_s))
        throw ConfigError("LoadCase: durations must be monotone");
    if (sprc.past_window < 1) throw ConfigError("LoadCase: past_window must be >= 1");
    if (!(sprc.lambda > 0.0 && sprc.lambda <= 1.0))
        throw ConfigError("LoadCase: lambda must be in (0,1]");
    if (sprc.n_u < 1 || sprc.n_u > sprc.n_p) throw ConfigError("LoadCase: need 1 <= n_u <= n_p");
}

std::vector<LoadCase> presets() {
    struct Row {
        const char* id;
        double wind, ti, umax, dumax;
    };
    static constexpr Row rows[] = {
        {"lc1", 12.0, 0.0, 4.9, 1.1},  {"lc2", 12.0, 0.0, 4.8, 0.5},
        {"lc3", 16.0, 0.0, 12.9, 1.0}, {"lc4", 16.0, 0.0, 13.1, 0.2},
        {"lc5", 20.0, 0.0, 18.4, 0.9}, {"lc6", 20.0, 0.0, 18.1, 1.5},
        {"lc7", 16.0, 0.0375, 13.5, 8.0}, {"lc8", 16.0, 0.0375, 20.0, 1.5},
    };
    std::vector<LoadCase> out;
    for (const Row& r : rows) {
        LoadCase c;
        c.id = r.id;
        c.wind_mean = r.wind;
        c.turbulence_intensity = r.ti;
        c.u_max = r.umax;
        c.du_max = r.dumax;
        out.push_back(c);
    }
    return out;
}

LoadCase preset(const std::string& id) {
    for (LoadCase& c : presets())
        if (c.id == id) return c;
    throw ConfigError("unknown preset '" + id + "'");
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

json case_to_json(const LoadCase& c) {
    json j;
    j["id"] = c.id;
    j["wind_mean_ms"] = c.wind_mean;
    j["turbulence_intensity"] = c.turbulence_intensity;
    j["u_max_deg"] = c.u_max;
    j["du_max_deg_s"] = c.du_max;
    j["controller"] = controller_name(c.controller);
    j["durations"] = {{"identification_s", c.durations.identification_s},
                      {"constrained_from_s", c.durations.constrained_from_s},
                      {"end_s", c.durations.end_s}};
    j["seeds"] = {{"wind", c.seeds.wind}, {"noise", c.seeds.noise},
                  {"excitation", c.seeds.excitation}};
    j["plant"] = {{"samples_per_period", c.plant.samples_per_period},
                  {"dt_s", c.plant.dt},
                  {"gain_knm_per_deg", c.plant.gain},
                  {"dist_amp_1p_knm", c.plant.dist_amp_1p},
                  {"dist_amp_2p_knm", c.plant.dist_amp_2p},
                  {"noise_sigma_knm", c.plant.noise_sigma},
                  {"filter_freq_ratio", c.plant.filter_freq_ratio},
                  {"filter_damping", c.plant.filter_damping}};
    json sched = json::array();
    for (const auto& [w, p] : c.cpc.schedule) sched.push_back({w, p});
    j["cpc"] = {{"schedule", sched},
                {"wind_tracking_tau_s", c.cpc.wind_tracking_tau_s},
                {"kp", c.cpc.kp},
                {"ki", c.cpc.ki},
                {"rate_limit_deg_s", c.cpc.rate_limit_deg_s}};
    j["sprc"] = {{"past_window", c.sprc.past_window},
                 {"lambda", c.sprc.lambda},
                 {"gamma", c.sprc.gamma},
                 {"n_p", c.sprc.n_p},
                 {"n_u", c.sprc.n_u},
                 {"q_output_scale", c.sprc.q_output_scale},
                 {"excitation_amplitude_deg", c.sprc.excitation_amplitude_deg},
                 {"excitation_mode",
                  c.sprc.excitation_mode == ExcitationMode::MultiSine ? "multi-sine"
                                                                      : "filtered-noise"},
                 {"excitation_decay_rotations", c.sprc.excitation_decay_rotations},
                 {"residual_ramp_threshold", c.sprc.residual_ramp_threshold},
                 {"xi_dump_every_rotations", c.sprc.xi_dump_every_rotations}};
    j["mbc"] = {{"ki", c.mbc.ki},
                {"lp_cutoff_ratio", c.mbc.lp_cutoff_ratio},
                {"azimuth_offset_rad", c.mbc.azimuth_offset},
                {"integrator_limit_deg", c.mbc.integrator_limit_deg}};
    return j;
}

void case_apply_json(LoadCase& c, const json& j) {
    if (j.contains("id")) c.id = j.at("id").get<std::string>();
    if (j.contains("wind_mean_ms")) c.wind_mean = j.at("wind_mean_ms").get<double>();
    if (j.contains("turbulence_intensity"))
        c.turbulence_intensity = j.at("turbulence_intensity").get<double>();
    if (j.contains("u_max_deg")) c.u_max = j.at("u_max_deg").get<double>();
    if (j.contains("du_max_deg_s")) c.du_max = j.at("du_max_deg_s").get<double>();
    if (j.contains("controller"))
        c.controller = controller_from_name(j.at("controller").get<std::string>());
    if (j.contains("durations")) {
        const json& d = j.at("durations");
        if (d.contains("identification_s"))
            c.durations.identification_s = d.at("identification_s").get<double>();
        if (d.contains("constrained_from_s"))
            c.durations.constrained_from_s = d.at("constrained_from_s").get<double>();
        if (d.contains("end_s")) c.durations.end_s = d.at("end_s").get<double>();
    }
    if (j.contains("seeds")) {
        const json& s = j.at("seeds");
        if (s.contains("wind")) c.seeds.wind = s.at("wind").get<std::uint64_t>();
        if (s.contains("noise")) c.seeds.noise = s.at("noise").get<std::uint64_t>();
        if (s.contains("excitation")) c.seeds.excitation = s.at("excitation").get<std::uint64_t>();
    }
    if (j.contains("plant")) {
        const json& p = j.at("plant");
        if (p.contains("samples_per_period"))
            c.plant.samples_per_period = p.at("samples_per_period").get<int>();
        if (p.contains("dt_s")) c.plant.dt = p.at("dt_s").get<double>();
        if (p.contains("gain_knm_per_deg")) c.plant.gain = p.at("gain_knm_per_deg").get<double>();
        if (p.contains("dist_amp_1p_knm"))
            c.plant.dist_amp_1p = p.at("dist_amp_1p_knm").get<double>();
        if (p.contains("dist_amp_2p_knm"))
            c.plant.dist_amp_2p = p.at("dist_amp_2p_knm").get<double>();
        if (p.contains("noise_sigma_knm"))
            c.plant.noise_sigma = p.at("noise_sigma_knm").get<double>();
        if (p.contains("filter_freq_ratio"))
            c.plant.filter_freq_ratio = p.at("filter_freq_ratio").get<double>();
        if (p.contains("filter_damping"))
            c.plant.filter_damping = p.at("filter_damping").get<double>();
    }
    if (j.contains("cpc")) {
        const json& p = j.at("cpc");
        if (p.contains("schedule")) {
            c.cpc.schedule.clear();
            for (const auto& knot : p.at("schedule"))
                c.cpc.schedule.emplace_back(knot.at(0).get<double>(), knot.at(1).get<double>());
        }
        if (p.contains("wind_tracking_tau_s"))
            c.cpc.wind_tracking_tau_s = p.at("wind_tracking_tau_s").get<double>();
        if (p.contains("kp")) c.cpc.kp = p.at("kp").get<double>();
        if (p.contains("ki")) c.cpc.ki = p.at("ki").get<double>();
        if (p.contains("rate_limit_deg_s"))
            c.cpc.rate_limit_deg_s = p.at("rate_limit_deg_s").get<double>();
    }
    if (j.contains("sprc")) {
        const json& p = j.at("sprc");
        if (p.contains("past_window")) c.sprc.past_window = p.at("past_window").get<int>();
        if (p.contains("lambda")) c.sprc.lambda = p.at("lambda").get<double>();
        if (p.contains("gamma")) c.sprc.gamma = p.at("gamma").get<double>();
        if (p.contains("n_p")) c.sprc.n_p = p.at("n_p").get<int>();
        if (p.contains("n_u")) c.sprc.n_u = p.at("n_u").get<int>();
        if (p.contains("q_output_scale"))
            c.sprc.q_output_scale = p.at("q_output_scale").get<double>();
        if (p.contains("excitation_amplitude_deg"))
            c.sprc.excitation_amplitude_deg = p.at("excitation_amplitude_deg").get<double>();
        if (p.contains("excitation_mode"))
            c.sprc.excitation_mode =
                p.at("excitation_mode").get<std::string>() == "filtered-noise"
                    ? ExcitationMode::FilteredNoise
                    : ExcitationMode::MultiSine;
        if (p.contains("excitation_decay_rotations"))
            c.sprc.excitation_decay_rotations = p.at("excitation_decay_rotations").get<double>();
        if (p.contains("residual_ramp_threshold"))
            c.sprc.residual_ramp_threshold = p.at("residual_ramp_threshold").get<double>();
        if (p.contains("xi_dump_every_rotations"))
            c.sprc.xi_dump_every_rotations = p.at("xi_dump_every_rotations").get<int>();
    }
    if (j.contains("mbc")) {
        const json& p = j.at("mbc");
        if (p.contains("ki")) c.mbc.ki = p.at("ki").get<double>();
        if (p.contains("lp_cutoff_ratio"))
            c.mbc.lp_cutoff_ratio = p.at("lp_cutoff_ratio").get<double>();
        if (p.contains("azimuth_offset_rad"))
            c.mbc.azimuth_offset = p.at("azimuth_offset_rad").get<double>();
        if (p.contains("integrator_limit_deg"))
            c.mbc.integrator_limit_deg = p.at("integrator_limit_deg").get<double>();
    }
}

std::int64_t snap_up_to_boundary(double t_s, double dt, int P) {
    const double samples = t_s / dt;
    const auto rot = static_cast<std::int64_t>(std::ceil(samples / P - 1e-9));
    return rot * P;
}

} // namespace

std::string to_json_string(const LoadCase& c) { return case_to_json(c).dump(2); }

std::vector<LoadCase> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    std::vector<LoadCase> out;
    if (!j.contains("cases") || !j.at("cases").is_array())
        throw ConfigError("config file must contain a 'cases' array");
    for (const json& cj : j.at("cases")) {
        LoadCase c;
        if (cj.contains("base")) c = preset(cj.at("base").get<std::string>());
        case_apply_json(c, cj);
        c.validate();
        out.push_back(std::move(c));
    }
    return out;
}

std::string run_dir_name(const LoadCase& c) {
    std::ostringstream os;
    os << c.id << "_" << controller_name(c.controller) << "_seed" << c.seeds.wind;
    return os.str();
}

RunRecord run_case(const LoadCase& load_case) {
    load_case.validate();
    const auto t_start = std::chrono::steady_clock::now();

    const int P = load_case.plant.samples_per_period;
    const double dt = load_case.plant.dt;
    const int p = load_case.sprc.past_window;
    const PeriodClock clock(P, dt);

    RunRecord rec;
    rec.config = load_case;
    rec.config_hash = fnv1a_hex(to_json_string(load_case));
    rec.k_activate = snap_up_to_boundary(load_case.durations.identification_s, dt, P);
    rec.k_constrained = snap_up_to_boundary(load_case.durations.constrained_from_s, dt, P);
    const std::int64_t n =
        std::max<std::int64_t>(snap_up_to_boundary(load_case.durations.end_s, dt, P),
                               rec.k_constrained);
    rec.samples = static_cast<int>(n);

    rec.t_s.reserve(static_cast<std::size_t>(n));
    rec.wind.reserve(static_cast<std::size_t>(n));
    rec.collective.reserve(static_cast<std::size_t>(n));
    for (int b = 0; b < 3; ++b) {
        rec.exc[static_cast<std::size_t>(b)].reserve(static_cast<std::size_t>(n));
        rec.ipc[static_cast<std::size_t>(b)].reserve(static_cast<std::size_t>(n));
        rec.pitch[static_cast<std::size_t>(b)].reserve(static_cast<std::size_t>(n));
        rec.moop[static_cast<std::size_t>(b)].reserve(static_cast<std::size_t>(n));
    }

    PlantConfig plant_cfg = load_case.plant;
    plant_cfg.noise_seed = load_case.seeds.noise;
    SurrogatePlant plant(plant_cfg, load_case.wind_mean);
    WindSampler wind_sampler(
        WindField{load_case.wind_mean, load_case.turbulence_intensity, load_case.seeds.wind, 8.0},
        dt);
    BaselineCpc cpc(load_case.cpc, dt);

    const bool is_sprc = load_case.controller == ControllerKind::Sprc;
    const bool is_mbc = load_case.controller == ControllerKind::Mbc;

    // MBC comparator; the saturation box tightens at constraint activation.
    MbcConfig mbc_cfg;
    mbc_cfg.ki = load_case.mbc.ki;
    mbc_cfg.lp_cutoff_ratio = load_case.mbc.lp_cutoff_ratio;
    mbc_cfg.azimuth_offset = load_case.mbc.azimuth_offset;
    mbc_cfg.integrator_limit_deg = load_case.mbc.integrator_limit_deg;
    mbc_cfg.dt = dt;
    mbc_cfg.one_p_hz = plant_cfg.one_p_hz();
    MbcIpc mbc(mbc_cfg);

    // SPRC machinery.
    SignalLog log(clock, 3, 3, p);
    RlsEstimator rls(3, p * 6, load_case.sprc.lambda, load_case.sprc.gamma);
    const BasisProjection phi = build_phi(P, 3);
    HorizonConfig hcfg = HorizonConfig::defaults(18, 6, load_case.sprc.q_output_scale);
    hcfg.n_p = load_case.sprc.n_p;
    hcfg.n_u = load_case.sprc.n_u;

    ExcitationConfig exc_cfg;
    exc_cfg.amplitude_deg = load_case.sprc.excitation_amplitude_deg;
    exc_cfg.mode = load_case.sprc.excitation_mode;
    exc_cfg.seed = load_case.seeds.excitation;
    exc_cfg.channels = 3;
    exc_cfg.samples_per_period = P;
    exc_cfg.decay_rotations = load_case.sprc.excitation_decay_rotations;
    ExcitationGenerator exc_gen(exc_cfg);
    bool ramp_started = false;

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(6);
    Eigen::VectorXd theta_prev = Eigen::VectorXd::Zero(6);
    Eigen::VectorXd ybar_prev = Eigen::VectorXd::Zero(6);
    bool have_ybar = false;
    Eigen::VectorXd y_period(3 * P);
    Eigen::VectorXd ubar_period(P);
    Eigen::VectorXd frozen_ubar; // trajectory the latest QP certified against
    double forecast_residual_acc = 0.0;
    double ewma_residual = 1.0;
    const double ewma_alpha = 1.0 / P;
    int fallback_streak = 0;

    Eigen::Vector3d last_moop = Eigen::Vector3d::Zero();

    for (std::int64_t k = 0; k < n; ++k) {
        const double wind = wind_sampler.next();
        const double ubar = cpc.step(wind);
        const double azimuth = clock.azimuth_of(k);
        const bool active = k >= rec.k_activate;
        const bool constrained = k >= rec.k_constrained;

        Eigen::Vector3d ipc = Eigen::Vector3d::Zero();
        if (is_mbc && active) {
            if (constrained && mbc.config().u_max != load_case.u_max)
                mbc.set_limits(load_case.u_max, load_case.du_max);
            ipc = mbc.step(last_moop, azimuth, ubar);
        } else if (is_sprc && active) {
            ipc = phi.row_block(static_cast<int>(k % P)) * theta;
        }

        Eigen::Vector3d exc = Eigen::Vector3d::Zero();
        if (is_sprc) exc = exc_gen.at(k);

        const Eigen::Vector3d cmd = Eigen::Vector3d::Constant(ubar) + ipc + exc;
        const Eigen::Vector3d moop = plant.step(wind, cmd);
        last_moop = moop;

        rec.t_s.push_back(static_cast<double>(k) * dt);
        rec.wind.push_back(wind);
        rec.collective.push_back(ubar);
        for (int b = 0; b < 3; ++b) {
            rec.exc[static_cast<std::size_t>(b)].push_back(exc(b));
            rec.ipc[static_cast<std::size_t>(b)].push_back(ipc(b));
            rec.pitch[static_cast<std::size_t>(b)].push_back(cmd(b));
            rec.moop[static_cast<std::size_t>(b)].push_back(moop(b));
        }

        if (!is_sprc) continue;

        log.push_sample(cmd, moop);
        if (k >= P + p) {
            const StackedWindow w = log.stacked_windows(k - p, p);
            const Eigen::VectorXd reg = build_regressor(w);
            const Eigen::VectorXd target = log.delta_y(k);
            const double denom = target.norm() + 1e-9;
            const double resid = (target - rls.xi() * reg).norm() / denom;
            ewma_residual += ewma_alpha * (resid - ewma_residual);
            rls.update(reg, target);
        }

        y_period.segment(3 * (k % P), 3) = moop;
        ubar_period(k % P) = ubar;
        if (constrained && frozen_ubar.size() > 0) {
            forecast_residual_acc =
                std::max(forecast_residual_acc, std::abs(ubar - frozen_ubar(k % P)));
        }

        if ((k + 1) % P != 0) continue;
        const int j = static_cast<int>((k + 1) / P) - 1; // completed rotation index

        // Excitation ramp: at the identification-phase end, or earlier once
        // the identification residual has settled.
        if (!ramp_started &&
            (k + 1 >= rec.k_activate ||
             (load_case.sprc.residual_ramp_threshold > 0.0 &&
              ewma_residual < load_case.sprc.residual_ramp_threshold))) {
            exc_gen.set_ramp_start(k + 1);
            ramp_started = true;
        }

        if (load_case.sprc.xi_dump_every_rotations > 0 &&
            j % load_case.sprc.xi_dump_every_rotations == 0)
            rec.xi_snapshots.emplace_back(j, rls.xi());

        // Attach the collective forecast error observed while the previous
        // certificate was in force.
        if (!rec.rotations.empty()) {
            rec.rotations.back().forecast_residual = forecast_residual_acc;
            forecast_residual_acc = 0.0;
        }

        if (k + 1 < rec.k_activate) continue;

        const Eigen::VectorXd ybar = project(phi, y_period);
        if (!have_ybar) {
            ybar_prev = ybar;
            have_ybar = true;
        }
        Eigen::VectorXd state(18);
        state << ybar, (theta - theta_prev), (ybar - ybar_prev);

        const MarkovBlocks blocks = extract_blocks(rls.xi(), p, 3, 3);
        const LiftedPredictor lifted = assemble_lifted(blocks, P);
        const ReducedModel model = reduce(lifted, phi);

        const bool next_constrained = (k + 1) >= rec.k_constrained;
        std::optional<ConstraintSpec> spec;
        if (next_constrained) {
            ConstraintSpec s;
            s.u_max = load_case.u_max;
            s.du_max = load_case.du_max;
            s.dt = dt;
            s.u_bar.resize(3 * P);
            for (int m = 0; m < P; ++m) s.u_bar.segment(3 * m, 3).setConstant(ubar_period(m));
            spec = std::move(s);
            frozen_ubar = ubar_period;
        }

        const StepResult step = receding_step(model, state, hcfg, phi, theta, spec);

        theta_prev = theta;
        ybar_prev = ybar;
        theta += step.delta_theta;

        RotationLog rl;
        rl.j = j;
        rl.theta = theta;
        rl.qp_status = qp::status_name(step.status);
        rl.fallback = step.fallback;
        rl.iterations = step.iterations;
        rl.kkt_residual = step.kkt_residual;
        rl.active_count = step.active_count;
        rl.ident_residual = ewma_residual;
        rl.constrained = next_constrained;
        rec.rotations.push_back(std::move(rl));

        fallback_streak = step.fallback ? fallback_streak + 1 : 0;
        if (fallback_streak > 10) {
            rec.aborted = true;
            rec.abort_reason = "QP fallback streak exceeded 10 rotations";
            break;
        }
    }

    rec.clamp_warnings = plant.clamp_warnings();
    rec.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return rec;
}

namespace {

void merge_audit(AuditReport& into, const AuditReport& other) {
    into.max_angle_excess = std::max(into.max_angle_excess, other.max_angle_excess);
    into.max_lower_excess = std::max(into.max_lower_excess, other.max_lower_excess);
    into.max_rate_excess = std::max(into.max_rate_excess, other.max_rate_excess);
    into.angle_violations += other.angle_violations;
    into.rate_violations += other.rate_violations;
}

// Largest per-period residual of the total pitch after removing the period
// mean and the 1P component: the content the basis projection cannot see.
double nonfundamental_amplitude(std::span<const double> series, int P) {
    double worst = 0.0;
    const std::size_t periods = series.size() / static_cast<std::size_t>(P);
    for (std::size_t q = 0; q < periods; ++q) {
        const double* x = series.data() + q * static_cast<std::size_t>(P);
        double mean = 0.0, as = 0.0, ac = 0.0;
        for (int m = 0; m < P; ++m) {
            const double psi = 2.0 * M_PI * m / P;
            mean += x[m];
            as += x[m] * std::sin(psi);
            ac += x[m] * std::cos(psi);
        }
        mean /= P;
        as *= 2.0 / P;
        ac *= 2.0 / P;
        for (int m = 0; m < P; ++m) {
            const double psi = 2.0 * M_PI * m / P;
            const double r = x[m] - mean - as * std::sin(psi) - ac * std::cos(psi);
            worst = std::max(worst, std::abs(r));
        }
    }
    return worst;
}

} // namespace

RunSummary summarize(const RunRecord& rec) {
    RunSummary s;
    s.case_id = rec.config.id;
    s.controller = controller_name(rec.config.controller);
    s.u_max = rec.config.u_max;
    s.du_max = rec.config.du_max;
    s.aborted = rec.aborted;
    s.dt = rec.config.plant.dt;

    const int P = rec.config.plant.samples_per_period;
    const double dt = rec.config.plant.dt;
    const double one_p = rec.config.plant.one_p_hz();
    const std::size_t n = rec.t_s.size();
    const std::size_t k_con = std::min<std::size_t>(static_cast<std::size_t>(rec.k_constrained), n);

    // Constrained window (all samples after constraint activation).
    if (n > k_con + 1) {
        for (int b = 0; b < 3; ++b) {
            std::span<const double> pitch(rec.pitch[static_cast<std::size_t>(b)].data() + k_con,
                                          n - k_con);
            const AdcReport a = adc(pitch, dt, rec.config.du_max);
            s.adc_per_blade[static_cast<std::size_t>(b)] = a.adc_percent;
            merge_audit(s.audit, audit_constraints(pitch, rec.config.u_max, rec.config.du_max, dt));
            s.max_nonfundamental_amp =
                std::max(s.max_nonfundamental_amp, nonfundamental_amplitude(pitch, P));
        }
        s.adc_mean = (s.adc_per_blade[0] + s.adc_per_blade[1] + s.adc_per_blade[2]) / 3.0;

        std::span<const double> pitch1(rec.pitch[0].data() + k_con, n - k_con);
        if (pitch1.size() >= static_cast<std::size_t>(16 * P)) {
            const PsdReport rep = psd(pitch1, dt, 8 * P, 0.5);
            s.pitch_psd_3p = rep.density_at(3.0 * one_p);
            s.pitch_psd_1p = rep.density_at(one_p);
        }

        // Last 8 whole rotations: steady-state bin of the constrained phase.
        const std::size_t tail = static_cast<std::size_t>(8 * P);
        if (n - k_con >= tail) {
            for (int b = 0; b < 3; ++b) {
                std::span<const double> m(rec.moop[static_cast<std::size_t>(b)].data() + (n - tail),
                                          tail);
                s.moop_1p_constrained[static_cast<std::size_t>(b)] = bin_amplitude(m, dt, one_p);
            }
        }
    }

    // Measurement window: last 8 whole rotations before constraint activation.
    const std::size_t meas = static_cast<std::size_t>(8 * P);
    if (k_con >= meas) {
        for (int b = 0; b < 3; ++b) {
            std::span<const double> m(rec.moop[static_cast<std::size_t>(b)].data() + (k_con - meas),
                                      meas);
            s.moop_1p_meas[static_cast<std::size_t>(b)] = bin_amplitude(m, dt, one_p);
        }
    }

    for (const RotationLog& rl : rec.rotations)
        if (rl.constrained)
            s.max_forecast_residual = std::max(s.max_forecast_residual, rl.forecast_residual);
    return s;
}

void write_series_csv(const RunRecord& rec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path);
    out << "k,t_s,wind_ms,collective_deg,exc1_deg,exc2_deg,exc3_deg,"
           "ipc1_deg,ipc2_deg,ipc3_deg,pitch1_deg,pitch2_deg,pitch3_deg,"
           "moop1_knm,moop2_knm,moop3_knm\n";
    char buf[32];
    auto put = [&](double v, bool last) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf << (last ? "\n" : ",");
    };
    for (std::size_t k = 0; k < rec.t_s.size(); ++k) {
        out << k << ",";
        put(rec.t_s[k], false);
        put(rec.wind[k], false);
        put(rec.collective[k], false);
        for (int b = 0; b < 3; ++b) put(rec.exc[static_cast<std::size_t>(b)][k], false);
        for (int b = 0; b < 3; ++b) put(rec.ipc[static_cast<std::size_t>(b)][k], false);
        for (int b = 0; b < 3; ++b) put(rec.pitch[static_cast<std::size_t>(b)][k], false);
        for (int b = 0; b < 3; ++b)
            put(rec.moop[static_cast<std::size_t>(b)][k], b == 2);
    }
}

void write_metrics_json(const RunRecord& rec, const RunSummary& s, const std::string& path) {
    json j;
    j["config"] = case_to_json(rec.config);
    j["config_hash"] = rec.config_hash;
    j["runtime_s"] = rec.runtime_s;
    j["aborted"] = rec.aborted;
    j["abort_reason"] = rec.abort_reason;
    j["clamp_warnings"] = rec.clamp_warnings;
    j["samples"] = rec.samples;
    j["k_activate"] = rec.k_activate;
    j["k_constrained"] = rec.k_constrained;

    j["summary"] = {{"case_id", s.case_id},
                    {"controller", s.controller},
                    {"u_max", s.u_max},
                    {"du_max", s.du_max},
                    {"dt", s.dt},
                    {"adc_per_blade", s.adc_per_blade},
                    {"adc_mean", s.adc_mean},
                    {"audit",
                     {{"max_angle_excess", s.audit.max_angle_excess},
                      {"max_lower_excess", s.audit.max_lower_excess},
                      {"max_rate_excess", s.audit.max_rate_excess},
                      {"angle_violations", s.audit.angle_violations},
                      {"rate_violations", s.audit.rate_violations}}},
                    {"moop_1p_meas", s.moop_1p_meas},
                    {"moop_1p_constrained", s.moop_1p_constrained},
                    {"pitch_psd_3p", s.pitch_psd_3p},
                    {"pitch_psd_1p", s.pitch_psd_1p},
                    {"max_forecast_residual", s.max_forecast_residual},
                    {"max_nonfundamental_amp", s.max_nonfundamental_amp},
                    {"aborted", s.aborted}};

    json rots = json::array();
    for (const RotationLog& rl : rec.rotations) {
        json r;
        r["j"] = rl.j;
        r["theta"] = std::vector<double>(rl.theta.data(), rl.theta.data() + rl.theta.size());
        r["qp_status"] = rl.qp_status;
        r["fallback"] = rl.fallback;
        r["iterations"] = rl.iterations;
        r["kkt_residual"] = rl.kkt_residual;
        r["active_count"] = rl.active_count;
        r["ident_residual"] = rl.ident_residual;
        r["forecast_residual"] = rl.forecast_residual;
        r["constrained"] = rl.constrained;
        rots.push_back(std::move(r));
    }
    j["rotations"] = std::move(rots);

    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path);
    out << j.dump(1) << "\n";
}

void write_xi_snapshots(const RunRecord& rec, const std::string& dir) {
    char buf[32];
    for (const auto& [j, xi] : rec.xi_snapshots) {
        std::snprintf(buf, sizeof(buf), "/xi_rot%05d.csv", j);
        std::ofstream out(dir + buf);
        if (!out) throw ConfigError("cannot open xi snapshot in " + dir);
        out << xi.rows() << "," << xi.cols() << "\n";
        char num[32];
        for (Eigen::Index a = 0; a < xi.rows(); ++a) {
            for (Eigen::Index b = 0; b < xi.cols(); ++b) {
                std::snprintf(num, sizeof(num), "%.17g", xi(a, b));
                out << num << (b + 1 < xi.cols() ? "," : "");
            }
            out << "\n";
        }
    }
}

RunSummary load_summary_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    json j;
    in >> j;
    const json& s = j.at("summary");
    RunSummary out;
    out.case_id = s.at("case_id").get<std::string>();
    out.controller = s.at("controller").get<std::string>();
    out.u_max = s.at("u_max").get<double>();
    out.du_max = s.at("du_max").get<double>();
    out.dt = s.at("dt").get<double>();
    out.adc_per_blade = s.at("adc_per_blade").get<std::array<double, 3>>();
    out.adc_mean = s.at("adc_mean").get<double>();
    out.audit.max_angle_excess = s.at("audit").at("max_angle_excess").get<double>();
    out.audit.max_lower_excess = s.at("audit").at("max_lower_excess").get<double>();
    out.audit.max_rate_excess = s.at("audit").at("max_rate_excess").get<double>();
    out.audit.angle_violations = s.at("audit").at("angle_violations").get<std::size_t>();
    out.audit.rate_violations = s.at("audit").at("rate_violations").get<std::size_t>();
    out.moop_1p_meas = s.at("moop_1p_meas").get<std::array<double, 3>>();
    out.moop_1p_constrained = s.at("moop_1p_constrained").get<std::array<double, 3>>();
    out.pitch_psd_3p = s.at("pitch_psd_3p").get<double>();
    out.pitch_psd_1p = s.at("pitch_psd_1p").get<double>();
    out.max_forecast_residual = s.at("max_forecast_residual").get<double>();
    out.max_nonfundamental_amp = s.at("max_nonfundamental_amp").get<double>();
    out.aborted = s.at("aborted").get<bool>();
    return out;
}

std::vector<CompareRow> compare_summaries(const std::vector<RunSummary>& summaries,
                                          const std::vector<std::string>& case_ids) {
    std::map<std::string, std::map<std::string, const RunSummary*>> by_case;
    for (const RunSummary& s : summaries) by_case[s.case_id][s.controller] = &s;

    std::vector<CompareRow> rows;
    for (const std::string& id : case_ids) {
        CompareRow row;
        row.case_id = id;
        const auto it = by_case.find(id);
        if (it != by_case.end()) {
            const auto& m = it->second;
            const RunSummary* sp = m.count("sprc") ? m.at("sprc") : nullptr;
            const RunSummary* mb = m.count("mbc") ? m.at("mbc") : nullptr;
            const RunSummary* bl = m.count("baseline") ? m.at("baseline") : nullptr;
            if (sp) row.adc_sprc = sp->adc_mean;
            if (mb) row.adc_mbc = mb->adc_mean;
            if (bl) row.adc_baseline = bl->adc_mean;
            if (sp && mb && mb->adc_mean > 0.0) row.adc_ratio = sp->adc_mean / mb->adc_mean;
            if (sp && bl) {
                double worst = 1.0;
                bool ok = false;
                for (int b = 0; b < 3; ++b) {
                    const double base = bl->moop_1p_meas[static_cast<std::size_t>(b)];
                    if (base > 1e-9) {
                        worst = std::min(
                            worst, 1.0 - sp->moop_1p_meas[static_cast<std::size_t>(b)] / base);
                        ok = true;
                    }
                }
                if (ok) row.moop_reduction = worst;
            }
            if (sp && mb && sp->pitch_psd_3p > 0.0)
                row.psd_3p_ratio = mb->pitch_psd_3p / sp->pitch_psd_3p;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_compare_csv(const std::vector<CompareRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open " + path);
    out << "case,adc_sprc_pct,adc_mbc_pct,adc_baseline_pct,adc_ratio_sprc_mbc,"
           "moop_1p_reduction,psd_3p_ratio_mbc_sprc\n";
    auto put = [&](const std::optional<double>& v, bool last) {
        if (v) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6g", *v);
            out << buf;
        } else {
            out << "n/a";
        }
        out << (last ? "\n" : ",");
    };
    for (const CompareRow& r : rows) {
        out << r.case_id << ",";
        put(r.adc_sprc, false);
        put(r.adc_mbc, false);
        put(r.adc_baseline, false);
        put(r.adc_ratio, false);
        put(r.moop_reduction, false);
        put(r.psd_3p_ratio, true);
    }
}

std::vector<std::string> check_suite(const std::vector<RunSummary>& summaries) {
    std::vector<std::string> failures;
    std::map<std::string, std::map<std::string, const RunSummary*>> by_case;
    for (const RunSummary& s : summaries) {
        by_case[s.case_id][s.controller] = &s;
        if (s.aborted) failures.push_back(s.case_id + "/" + s.controller + ": run aborted");
    }

    const bool turbulent_case[8] = {false, false, false, false, false, false, true, true};
    std::vector<double> ratios;
    for (int i = 1; i <= 8; ++i) {
        const std::string id = "lc" + std::to_string(i);
        const auto it = by_case.find(id);
        if (it == by_case.end()) continue;
        const auto& m = it->second;
        const RunSummary* sp = m.count("sprc") ? m.at("sprc") : nullptr;
        const RunSummary* mb = m.count("mbc") ? m.at("mbc") : nullptr;
        if (!sp) {
            failures.push_back(id + ": missing sprc run");
            continue;
        }

        if (!turbulent_case[i - 1]) {
            if (!sp->audit.clean(1e-9, 1e-9 / sp->dt))
                failures.push_back(id + ": laminar constraint audit not clean (angle " +
                                   std::to_string(sp->audit.max_angle_excess) + " deg, rate " +
                                   std::to_string(sp->audit.max_rate_excess) + " deg/s)");
        } else {
            const double excess = sp->audit.max_angle_excess;
            const double bound =
                std::max(sp->max_forecast_residual, sp->max_nonfundamental_amp) + 1e-9;
            if (excess > bound)
                failures.push_back(id + ": turbulent angle excess above leakage bound");
            if (excess >= 0.05 * sp->u_max)
                failures.push_back(id + ": turbulent angle excess above 5% of u_max");
        }

        if (mb && mb->adc_mean > 0.0) {
            ratios.push_back(sp->adc_mean / mb->adc_mean);
            const bool tight = (id == "lc2" || id == "lc4" || id == "lc6");
            if (tight && sp->adc_mean > mb->adc_mean)
                failures.push_back(id + ": SPRC ADC above MBC ADC in tight case");
        }
    }
    if (!ratios.empty()) {
        double mean = 0.0;
        for (double r : ratios) mean += r;
        mean /= static_cast<double>(ratios.size());
        if (mean > 0.8)
            failures.push_back("suite mean SPRC/MBC ADC ratio " + std::to_string(mean) + " > 0.8");
    }

    // Harmonic contrast under the deepest clipping preset.
    if (by_case.count("lc6") && by_case["lc6"].count("sprc") && by_case["lc6"].count("mbc")) {
        const RunSummary* sp = by_case["lc6"]["sprc"];
        const RunSummary* mb = by_case["lc6"]["mbc"];
        if (!(sp->pitch_psd_3p > 0.0) || mb->pitch_psd_3p / sp->pitch_psd_3p < 10.0)
            failures.push_back("lc6: MBC/SPRC 3P pitch PSD ratio below 10");
    }

    // 1P rejection on the laminar 16 m/s preset.
    if (by_case.count("lc3") && by_case["lc3"].count("sprc") && by_case["lc3"].count("baseline")) {
        const RunSummary* sp = by_case["lc3"]["sprc"];
        const RunSummary* bl = by_case["lc3"]["baseline"];
        for (int b = 0; b < 3; ++b) {
            const double base = bl->moop_1p_meas[static_cast<std::size_t>(b)];
            if (base <= 1e-9) continue;
            const double red = 1.0 - sp->moop_1p_meas[static_cast<std::size_t>(b)] / base;
            if (red < 0.95)
                failures.push_back("lc3: blade " + std::to_string(b + 1) +
                                   " 1P reduction below 95% (" + std::to_string(red * 100) + "%)");
        }
    }
    return failures;
}

} // namespace sprc
