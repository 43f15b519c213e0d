#include "sprc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace sprc {

AdcReport adc(std::span<const double> pitch_deg, double dt, double du_max_deg_s,
              double window_start_s, double window_end_s) {
    if (!(du_max_deg_s > 0.0)) throw ConfigError("adc: du_max must be positive");
    if (!(dt > 0.0)) throw ConfigError("adc: dt must be positive");
    if (window_end_s < 0.0) window_end_s = static_cast<double>(pitch_deg.size()) * dt;
    const std::size_t i0 = static_cast<std::size_t>(std::max(0.0, window_start_s / dt));
    const std::size_t i1 =
        std::min(pitch_deg.size(), static_cast<std::size_t>(window_end_s / dt + 0.5));
    if (i1 < i0 + 2) throw NotReadyError("adc: window too short");

    double acc = 0.0;
    for (std::size_t i = i0 + 1; i < i1; ++i)
        acc += std::abs(pitch_deg[i] - pitch_deg[i - 1]) / dt;
    AdcReport r;
    r.adc_percent = 100.0 * acc / (static_cast<double>(i1 - i0 - 1) * du_max_deg_s);
    r.window_start_s = static_cast<double>(i0) * dt;
    r.window_end_s = static_cast<double>(i1) * dt;
    return r;
}

namespace {

// In-place iterative radix-2 FFT.
void fft_pow2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

int floor_pow2(int x) {
    int p = 1;
    while (2 * p <= x) p *= 2;
    return p;
}

} // namespace

double PsdReport::density_at(double freq_hz) const {
    if (frequency_hz.empty()) return 0.0;
    const double df = frequency_hz.size() > 1 ? frequency_hz[1] - frequency_hz[0] : 1.0;
    const std::size_t q = static_cast<std::size_t>(
        std::clamp(std::llround(freq_hz / df), 0LL,
                   static_cast<long long>(frequency_hz.size()) - 1));
    return density[q];
}

double PsdReport::integrated_power() const {
    if (frequency_hz.size() < 2) return 0.0;
    const double df = frequency_hz[1] - frequency_hz[0];
    double acc = 0.0;
    for (double d : density) acc += d * df;
    return acc;
}

double PsdReport::band_power(double freq_hz, int half_bins) const {
    if (frequency_hz.size() < 2) return 0.0;
    const double df = frequency_hz[1] - frequency_hz[0];
    const long long c = std::llround(freq_hz / df);
    double acc = 0.0;
    for (long long q = c - half_bins; q <= c + half_bins; ++q)
        if (q >= 0 && q < static_cast<long long>(density.size())) acc += density[static_cast<std::size_t>(q)] * df;
    return acc;
}

PsdReport psd(std::span<const double> series, double dt, int segment_len, double overlap) {
    if (!(dt > 0.0)) throw ConfigError("psd: dt must be positive");
    if (segment_len < 8) throw ConfigError("psd: segment length too small");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("psd: overlap must be in [0,1)");
    const int L = floor_pow2(segment_len);
    if (series.size() < 2 * static_cast<std::size_t>(L))
        throw NotReadyError("psd: series shorter than two segments");

    const int hop = std::max(1, static_cast<int>(std::lround(L * (1.0 - overlap))));
    const double fs = 1.0 / dt;

    std::vector<double> win(static_cast<std::size_t>(L));
    double wsum2 = 0.0;
    for (int i = 0; i < L; ++i) {
        win[static_cast<std::size_t>(i)] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / L));
        wsum2 += win[static_cast<std::size_t>(i)] * win[static_cast<std::size_t>(i)];
    }

    PsdReport rep;
    rep.segment_len = L;
    rep.overlap = overlap;
    rep.fs = fs;
    const int nbins = L / 2 + 1;
    rep.density.assign(static_cast<std::size_t>(nbins), 0.0);
    rep.frequency_hz.resize(static_cast<std::size_t>(nbins));
    for (int q = 0; q < nbins; ++q)
        rep.frequency_hz[static_cast<std::size_t>(q)] = fs * q / L;

    std::vector<std::complex<double>> buf(static_cast<std::size_t>(L));
    int count = 0;
    for (std::size_t start = 0; start + static_cast<std::size_t>(L) <= series.size();
         start += static_cast<std::size_t>(hop)) {
        for (int i = 0; i < L; ++i)
            buf[static_cast<std::size_t>(i)] = series[start + static_cast<std::size_t>(i)] *
                                               win[static_cast<std::size_t>(i)];
        fft_pow2(buf);
        for (int q = 0; q < nbins; ++q) {
            const double mag2 = std::norm(buf[static_cast<std::size_t>(q)]);
            const double one_sided = (q == 0 || q == L / 2) ? 1.0 : 2.0;
            rep.density[static_cast<std::size_t>(q)] += one_sided * mag2 / (fs * wsum2);
        }
        ++count;
    }
    for (double& d : rep.density) d /= count;
    rep.n_segments = count;
    return rep;
}

AuditReport audit_constraints(std::span<const double> pitch_deg, double u_max, double du_max,
                              double dt) {
    AuditReport r;
    for (std::size_t i = 0; i < pitch_deg.size(); ++i) {
        const double v = pitch_deg[i];
        if (v > u_max) {
            r.max_angle_excess = std::max(r.max_angle_excess, v - u_max);
            ++r.angle_violations;
        }
        if (v < 0.0) {
            r.max_lower_excess = std::max(r.max_lower_excess, -v);
            ++r.angle_violations;
        }
        if (i > 0) {
            const double rate = std::abs(v - pitch_deg[i - 1]) / dt;
            if (rate > du_max) {
                r.max_rate_excess = std::max(r.max_rate_excess, rate - du_max);
                ++r.rate_violations;
            }
        }
    }
    return r;
}

double bin_amplitude(std::span<const double> series, double dt, double freq_hz) {
    if (series.empty()) throw NotReadyError("bin_amplitude: empty series");
    const double w = 2.0 * M_PI * freq_hz * dt;
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t k = 0; k < series.size(); ++k)
        acc += series[k] * std::polar(1.0, -w * static_cast<double>(k));
    return 2.0 * std::abs(acc) / static_cast<double>(series.size());
}

} // namespace sprc
