// Temporary smoke driver (replaced by the acceptance suite).
#include <cstdio>
#include <cmath>
#include <future>
#include <vector>

#include "sprc/harness.hpp"

using namespace sprc;

int main() {
    std::vector<std::pair<std::string, ControllerKind>> jobs;
    for (int i = 1; i <= 8; ++i) {
        jobs.emplace_back("lc" + std::to_string(i), ControllerKind::Sprc);
        jobs.emplace_back("lc" + std::to_string(i), ControllerKind::Mbc);
    }
    jobs.emplace_back("lc3", ControllerKind::Baseline);

    std::vector<std::future<RunSummary>> futs;
    for (auto& [id, ctl] : jobs)
        futs.push_back(std::async(std::launch::async, [id = id, ctl = ctl] {
            LoadCase c = preset(id);
            c.controller = ctl;
            return summarize(run_case(c));
        }));
    std::vector<RunSummary> sums;
    for (auto& f : futs) sums.push_back(f.get());

    double ratio_sum = 0; int ratio_n = 0;
    for (int i = 1; i <= 8; ++i) {
        const RunSummary& sp = sums[(std::size_t)(2 * (i - 1))];
        const RunSummary& mb = sums[(std::size_t)(2 * (i - 1) + 1)];
        double ratio = sp.adc_mean / mb.adc_mean;
        ratio_sum += ratio; ratio_n++;
        std::printf("lc%d: sprc %6.2f%%  mbc %6.2f%%  ratio %.3f  | sprc angle_ex %.3g "
                    "(fore %.3g nonfund %.3g, 5%%cap %.3g) rate_ex %.3g aborted=%d/%d\n",
                    i, sp.adc_mean, mb.adc_mean, ratio, sp.audit.max_angle_excess,
                    sp.max_forecast_residual, sp.max_nonfundamental_amp, 0.05 * sp.u_max,
                    sp.audit.max_rate_excess, sp.aborted, mb.aborted);
    }
    std::printf("mean SPRC/MBC ADC ratio = %.3f\n", ratio_sum / ratio_n);
    const RunSummary& bl = sums.back();
    const RunSummary& sp3 = sums[4];
    for (int b = 0; b < 3; ++b)
        std::printf("lc3 blade %d 1P reduction: %.4f%%\n", b + 1,
                    100.0 * (1.0 - sp3.moop_1p_meas[(std::size_t)b] / bl.moop_1p_meas[(std::size_t)b]));
    std::printf("lc6 psd3p ratio mbc/sprc = %.3g\n", sums[11].pitch_psd_3p / sums[10].pitch_psd_3p);
    return 0;
}
