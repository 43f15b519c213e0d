// Command-line front end: run one case, run the whole preset suite, or build
// the comparison table from stored run outputs.
//
// Exit codes: 0 ok, 2 config error, 3 run aborted, 4 check failure.

#include <CLI11.hpp>

#include <filesystem>
#include <future>
#include <iostream>
#include <map>
#include <thread>
#include <vector>

#include "sprc/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct RunOutcome {
    sprc::RunSummary summary;
    bool aborted = false;
};

RunOutcome execute_and_persist(const sprc::LoadCase& c, const fs::path& out_root) {
    const fs::path dir = out_root / sprc::run_dir_name(c);
    fs::create_directories(dir);
    sprc::RunRecord rec = sprc::run_case(c);
    sprc::RunSummary sum = sprc::summarize(rec);
    sprc::write_series_csv(rec, (dir / "series.csv").string());
    sprc::write_metrics_json(rec, sum, (dir / "metrics.json").string());
    if (!rec.xi_snapshots.empty()) sprc::write_xi_snapshots(rec, dir.string());
    return {sum, rec.aborted};
}

std::vector<sprc::RunSummary> collect_summaries(const fs::path& out_root) {
    std::vector<sprc::RunSummary> out;
    if (!fs::exists(out_root)) return out;
    for (const auto& entry : fs::directory_iterator(out_root)) {
        const fs::path metrics = entry.path() / "metrics.json";
        if (fs::exists(metrics)) out.push_back(sprc::load_summary_json(metrics.string()));
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Constrained subspace predictive repetitive pitch control testbed"};
    app.require_subcommand(1);

    std::string case_id = "lc3";
    std::string controller = "sprc";
    std::string out_dir = "out";
    std::string config_file;
    std::uint64_t seed = 0;
    bool check = false;
    int jobs = 0;

    CLI::App* cmd_run = app.add_subcommand("run", "Run one load case");
    cmd_run->add_option("--case", case_id, "Preset id (lc1..lc8) or id from --config");
    cmd_run->add_option("--controller", controller, "baseline | mbc | sprc");
    cmd_run->add_option("--seed", seed, "Override the wind seed (0 keeps the preset seed)");
    cmd_run->add_option("--out", out_dir, "Output directory");
    cmd_run->add_option("--config", config_file, "JSON config file with a 'cases' array");

    CLI::App* cmd_suite = app.add_subcommand("suite", "Run all presets x all controllers");
    cmd_suite->add_option("--out", out_dir, "Output directory");
    cmd_suite->add_option("--config", config_file, "JSON config file replacing the presets");
    cmd_suite->add_option("--jobs", jobs, "Parallel runs (0 = hardware)");
    cmd_suite->add_flag("--check", check, "Verify suite-level acceptance conditions");

    CLI::App* cmd_compare = app.add_subcommand("compare", "Tabulate stored run outputs");
    cmd_compare->add_option("--out", out_dir, "Directory holding run outputs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) {
            sprc::LoadCase c;
            if (!config_file.empty()) {
                bool found = false;
                for (sprc::LoadCase& fc : sprc::load_config_file(config_file)) {
                    if (fc.id == case_id) {
                        c = fc;
                        found = true;
                        break;
                    }
                }
                if (!found) throw sprc::ConfigError("case '" + case_id + "' not in config file");
            } else {
                c = sprc::preset(case_id);
            }
            c.controller = sprc::controller_from_name(controller);
            if (seed != 0) c.seeds.wind = seed;
            const RunOutcome out = execute_and_persist(c, out_dir);
            std::cout << "run " << sprc::run_dir_name(c) << ": adc_mean "
                      << out.summary.adc_mean << "%, angle excess "
                      << out.summary.audit.max_angle_excess << " deg"
                      << (out.aborted ? " [ABORTED]" : "") << "\n";
            return out.aborted ? 3 : 0;
        }

        if (cmd_suite->parsed()) {
            std::vector<sprc::LoadCase> base_cases =
                config_file.empty() ? sprc::presets() : sprc::load_config_file(config_file);
            std::vector<sprc::LoadCase> cases;
            for (const sprc::LoadCase& c : base_cases)
                for (const char* ctl : {"baseline", "mbc", "sprc"}) {
                    sprc::LoadCase cc = c;
                    cc.controller = sprc::controller_from_name(ctl);
                    cases.push_back(cc);
                }

            const int hw = static_cast<int>(std::thread::hardware_concurrency());
            const int njobs = jobs > 0 ? jobs : std::max(1, hw);
            std::vector<RunOutcome> outcomes(cases.size());
            std::size_t next = 0;
            while (next < cases.size()) {
                const std::size_t batch =
                    std::min<std::size_t>(static_cast<std::size_t>(njobs), cases.size() - next);
                std::vector<std::future<RunOutcome>> futs;
                for (std::size_t i = 0; i < batch; ++i)
                    futs.push_back(std::async(std::launch::async, execute_and_persist,
                                              cases[next + i], fs::path(out_dir)));
                for (std::size_t i = 0; i < batch; ++i) outcomes[next + i] = futs[i].get();
                next += batch;
            }

            std::vector<sprc::RunSummary> summaries;
            bool any_aborted = false;
            for (const RunOutcome& o : outcomes) {
                summaries.push_back(o.summary);
                any_aborted = any_aborted || o.aborted;
            }

            std::vector<std::string> ids;
            for (const sprc::LoadCase& c : base_cases) ids.push_back(c.id);
            const auto rows = sprc::compare_summaries(summaries, ids);
            sprc::write_compare_csv(rows, (fs::path(out_dir) / "table.csv").string());
            for (const sprc::CompareRow& r : rows) {
                std::cout << r.case_id << ": adc sprc/mbc ";
                if (r.adc_ratio)
                    std::cout << *r.adc_ratio;
                else
                    std::cout << "n/a";
                if (r.moop_reduction)
                    std::cout << ", 1P reduction " << *r.moop_reduction * 100.0 << "%";
                std::cout << "\n";
            }

            if (check) {
                const auto failures = sprc::check_suite(summaries);
                for (const std::string& f : failures) std::cerr << "CHECK FAIL: " << f << "\n";
                if (!failures.empty()) return 4;
                std::cout << "all suite checks passed\n";
            }
            return any_aborted ? 3 : 0;
        }

        if (cmd_compare->parsed()) {
            const auto summaries = collect_summaries(out_dir);
            std::map<std::string, bool> seen;
            std::vector<std::string> ids;
            for (const sprc::RunSummary& s : summaries)
                if (!seen[s.case_id]) {
                    seen[s.case_id] = true;
                    ids.push_back(s.case_id);
                }
            std::sort(ids.begin(), ids.end());
            const auto rows = sprc::compare_summaries(summaries, ids);
            sprc::write_compare_csv(rows, (fs::path(out_dir) / "table.csv").string());
            std::cout << "wrote " << (fs::path(out_dir) / "table.csv").string() << " ("
                      << rows.size() << " rows)\n";
            return 0;
        }
    } catch (const sprc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
